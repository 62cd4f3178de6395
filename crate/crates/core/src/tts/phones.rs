use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhoneClass {
    VowelA,
    VowelE,
    VowelI,
    VowelO,
    VowelU,
    Voiced,
    Unvoiced,
    Pause,
}

impl PhoneClass {
    pub fn from_char(c: char) -> Self {
        match c.to_ascii_lowercase() {
            'a' => PhoneClass::VowelA,
            'e' => PhoneClass::VowelE,
            'i' | 'y' => PhoneClass::VowelI,
            'o' => PhoneClass::VowelO,
            'u' => PhoneClass::VowelU,
            'b' | 'd' | 'g' | 'j' | 'l' | 'm' | 'n' | 'r' | 'v' | 'w' | 'z' => PhoneClass::Voiced,
            'c' | 'f' | 'h' | 'k' | 'p' | 'q' | 's' | 't' | 'x' => PhoneClass::Unvoiced,
            _ => PhoneClass::Pause,
        }
    }

    pub fn is_vowel(self) -> bool {
        matches!(
            self,
            PhoneClass::VowelA
                | PhoneClass::VowelE
                | PhoneClass::VowelI
                | PhoneClass::VowelO
                | PhoneClass::VowelU
        )
    }

    pub fn is_voiced(self) -> bool {
        self.is_vowel() || self == PhoneClass::Voiced
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phone {
    pub class: PhoneClass,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhoneSequence {
    pub phones: Vec<Phone>,
}

impl PhoneSequence {
    pub fn total_duration(&self) -> f64 {
        self.phones.iter().map(|p| p.duration_s).sum()
    }

    pub fn len(&self) -> usize {
        self.phones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phones.is_empty()
    }
}

/// One phone per character, each lasting `1 / speaking_rate` seconds.
/// Letters map to vowel / consonant classes; everything else is a pause.
pub fn text_to_phones(text: &str, speaking_rate: f64) -> PhoneSequence {
    let duration_s = 1.0 / speaking_rate;
    PhoneSequence {
        phones: text
            .chars()
            .filter(|c| !c.is_control())
            .map(|c| Phone {
                class: PhoneClass::from_char(c),
                duration_s,
            })
            .collect(),
    }
}
