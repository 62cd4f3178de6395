use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::manifest::GenerationManifest;

/// First eight bytes of SHA-256 over the global seed, subject id and
/// sentence index, so adding a subject leaves every other seed unchanged.
pub fn derive_seed(global_seed: u64, subject: &str, sentence: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(global_seed.to_le_bytes());
    h.update((subject.len() as u64).to_le_bytes());
    h.update(subject.as_bytes());
    h.update((sentence as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Independent stream for one stage of a job.
pub(crate) fn stage_seed(job_seed: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(job_seed.to_le_bytes());
    h.update(stage.as_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub subject: String,
    pub subject_index: usize,
    pub sentence_index: usize,
    pub seed: u64,
}

impl Job {
    pub fn clip_name(&self) -> String {
        format!("clip-{:03}", self.sentence_index + 1)
    }
}

/// One job per (subject, sentence), ordered by subject id then sentence.
pub fn plan(manifest: &GenerationManifest) -> Vec<Job> {
    let mut subjects: Vec<(usize, &str)> = manifest.subjects.iter().enumerate().map(|(i, s)| (i, s.id.as_str())).collect();
    subjects.sort_by(|a, b| a.1.cmp(b.1));
    subjects
        .into_iter()
        .flat_map(|(si, id)| {
            (0..manifest.sentences.len()).map(move |k| Job {
                subject: id.to_string(),
                subject_index: si,
                sentence_index: k,
                seed: derive_seed(manifest.global_seed, id, k),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::manifest::{FaceSource, SubjectSpec, VoiceSpec};
    use std::collections::HashSet;

    fn manifest(ids: &[&str], n_sentences: usize) -> GenerationManifest {
        let mut m = GenerationManifest::demo();
        m.subjects = ids
            .iter()
            .map(|id| SubjectSpec {
                id: id.to_string(),
                face: FaceSource::Generated { seed: 0 },
                voice: VoiceSpec::Child { seed: 0 },
                childify: None,
            })
            .collect();
        m.sentences = (0..n_sentences).map(|i| format!("sentence {i}")).collect();
        m
    }

    #[test]
    fn demo_plans_twenty_jobs() {
        assert_eq!(plan(&GenerationManifest::demo()).len(), 20);
    }

    #[test]
    fn order_is_subject_then_sentence() {
        let jobs = plan(&manifest(&["b", "a"], 3));
        let keys: Vec<(String, usize)> = jobs.iter().map(|j| (j.subject.clone(), j.sentence_index)).collect();
        let want: Vec<(String, usize)> = ["a", "b"]
            .iter()
            .flat_map(|s| (0..3).map(move |k| (s.to_string(), k)))
            .collect();
        assert_eq!(keys, want);
        assert_eq!(jobs[0].subject_index, 1);
    }

    #[test]
    fn plans_are_deterministic_and_seeds_distinct() {
        let m = manifest(&["x", "y", "z"], 4);
        assert_eq!(plan(&m), plan(&m));
        let seeds: HashSet<u64> = plan(&m).iter().map(|j| j.seed).collect();
        assert_eq!(seeds.len(), 12);
    }

    #[test]
    fn adding_a_subject_keeps_other_seeds() {
        let a = plan(&manifest(&["x", "y"], 2));
        let b = plan(&manifest(&["w", "x", "y"], 2));
        for j in &a {
            assert!(b.iter().any(|k| k.subject == j.subject && k.sentence_index == j.sentence_index && k.seed == j.seed));
        }
        assert_ne!(derive_seed(1, "x", 0), derive_seed(2, "x", 0));
        assert_ne!(derive_seed(0, "ab", 1), derive_seed(0, "a", 1));
    }
}
