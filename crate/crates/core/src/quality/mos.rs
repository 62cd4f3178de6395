//! Agree/disagree opinion survey: an append-only CSV and its aggregation.

use std::fmt;
use std::io::{Seek, SeekFrom, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MOS_QUESTIONS: [&str; 3] = [
    "The rendered video looks visually good.",
    "The audio is good: the voice fits the speaker, the prosody is natural and the sound is clean.",
    "Overall the video looks natural and sharp.",
];

/// Overall positive ratio quoted for the original six-person survey whose
/// per-question counts are 5, 4 and 5. Those counts give 14/18; the report
/// prints both.
pub const REFERENCE_OVERALL_RATIO: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosResponse {
    pub timestamp: String,
    pub participant: String,
    /// Clip paths the answers refer to, `;`-separated in the survey file.
    pub clip: String,
    pub q1: String,
    pub q2: String,
    pub q3: String,
}

pub fn parse_answer(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "agree" | "yes" | "y" | "1" | "true" => Ok(true),
        "disagree" | "no" | "n" | "0" | "false" => Ok(false),
        other => Err(Error::invalid("answer", format!("{other:?} is neither agree nor disagree"))),
    }
}

fn answer_label(a: bool) -> String {
    if a { "agree" } else { "disagree" }.to_string()
}

impl MosResponse {
    pub fn new(participant: &str, clips: &[String], answers: &[&str]) -> Result<Self> {
        if answers.len() != 3 {
            return Err(Error::invalid("answers", format!("expected 3 answers, got {}", answers.len())));
        }
        if participant.trim().is_empty() {
            return Err(Error::invalid("participant", "empty id"));
        }
        let a: Vec<bool> = answers.iter().map(|s| parse_answer(s)).collect::<Result<_>>()?;
        Ok(Self {
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            participant: participant.trim().to_string(),
            clip: clips.join(";"),
            q1: answer_label(a[0]),
            q2: answer_label(a[1]),
            q3: answer_label(a[2]),
        })
    }

    pub fn answers(&self) -> Result<[bool; 3]> {
        Ok([parse_answer(&self.q1)?, parse_answer(&self.q2)?, parse_answer(&self.q3)?])
    }
}

/// Validates and appends one response to the survey file, holding an
/// exclusive lock while writing. Creates the file with a header if needed.
pub fn collect_mos(path: impl AsRef<Path>, participant: &str, clips: &[String], answers: &[&str]) -> Result<MosResponse> {
    let response = MosResponse::new(participant, clips, answers)?;
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    file.lock().map_err(io)?;
    let fresh = file.seek(SeekFrom::End(0)).map_err(io)? == 0;
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(&mut buf);
        w.serialize(&response).map_err(|e| Error::parse("survey row", e.to_string()))?;
        w.flush().map_err(io)?;
    }
    file.write_all(&buf).map_err(io)?;
    file.unlock().map_err(io)?;
    Ok(response)
}

pub fn read_mos(path: impl AsRef<Path>) -> Result<Vec<MosResponse>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            let row: MosResponse = row.map_err(|e| Error::parse(format!("survey row {}", i + 2), e.to_string()))?;
            row.answers()?;
            Ok(row)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosSummary {
    pub responses: usize,
    pub agrees: [usize; 3],
    pub per_question: [f64; 3],
    pub overall: f64,
}

pub fn aggregate_mos(responses: &[MosResponse]) -> Result<MosSummary> {
    if responses.is_empty() {
        return Err(Error::Empty("survey responses"));
    }
    let mut agrees = [0usize; 3];
    for r in responses {
        for (k, a) in r.answers()?.iter().enumerate() {
            agrees[k] += usize::from(*a);
        }
    }
    let n = responses.len() as f64;
    Ok(MosSummary {
        responses: responses.len(),
        agrees,
        per_question: agrees.map(|a| a as f64 / n),
        overall: agrees.iter().sum::<usize>() as f64 / (3.0 * n),
    })
}

impl fmt::Display for MosSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "responses: {}", self.responses)?;
        for (k, q) in MOS_QUESTIONS.iter().enumerate() {
            writeln!(
                f,
                "q{}: {}/{} agree ({:.1}%)  {q}",
                k + 1,
                self.agrees[k],
                self.responses,
                100.0 * self.per_question[k]
            )?;
        }
        writeln!(
            f,
            "overall: {}/{} agree ({:.1}%)",
            self.agrees.iter().sum::<usize>(),
            3 * self.responses,
            100.0 * self.overall
        )?;
        write!(
            f,
            "reference: {:.1}% quoted for the original 5/4/5-of-6 survey, whose counts give {:.1}%",
            100.0 * REFERENCE_OVERALL_RATIO,
            100.0 * 14.0 / 18.0
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resp(a: [&str; 3]) -> MosResponse {
        MosResponse::new("p", &["clip".into()], &a).unwrap()
    }

    #[test]
    fn survey_counts() {
        let answers = [
            ["agree", "agree", "agree"],
            ["agree", "agree", "agree"],
            ["agree", "agree", "agree"],
            ["agree", "agree", "agree"],
            ["agree", "disagree", "agree"],
            ["disagree", "disagree", "disagree"],
        ];
        let s = aggregate_mos(&answers.map(resp)).unwrap();
        assert_eq!(s.agrees, [5, 4, 5]);
        assert!((s.overall - 14.0 / 18.0).abs() < 1e-12);
        assert!(s.to_string().contains("75.0%"));
    }

    #[test]
    fn unanimous_and_single() {
        let s = aggregate_mos(&[resp(["yes", "yes", "yes"])]).unwrap();
        assert_eq!((s.per_question, s.overall), ([1.0; 3], 1.0));
        let s = aggregate_mos(&[resp(["agree", "disagree", "agree"])]).unwrap();
        assert!((s.overall - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn malformed_input() {
        assert!(MosResponse::new("p", &[], &["agree", "agree"]).is_err());
        assert!(MosResponse::new("p", &[], &["agree", "maybe", "agree"]).is_err());
        assert!(aggregate_mos(&[]).is_err());
    }

    #[test]
    fn append_and_reaggregate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("survey.csv");
        collect_mos(&path, "a", &["x".into(), "y".into()], &["agree", "agree", "agree"]).unwrap();
        assert_eq!(read_mos(&path).unwrap().len(), 1);
        collect_mos(&path, "b", &["x".into()], &["disagree", "agree", "disagree"]).unwrap();
        let rows = read_mos(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].clip, "x;y");
        let s = aggregate_mos(&rows).unwrap();
        assert_eq!(s.agrees, [1, 2, 1]);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("timestamp,participant,clip,q1,q2,q3\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
