//! Seeded synthetic corpora whose classes are separable by construction:
//! every problem of class c carries the marker word of c among random
//! filler words.

use std::collections::BTreeSet;

use rand::Rng;

use crate::corpus::Problem;
use crate::datasets::{DatasetKind, LabeledDataset, TagCatalog};
use crate::seeded_rng;

const SYLLABLES: [&str; 16] = [
    "ba", "do", "fi", "gu", "ha", "jo", "ki", "lu", "mo", "na", "pe", "ri", "so", "tu", "vi", "wo",
];
const FILLER_WORDS: usize = 400;

/// Where the class marker is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalField {
    Statement,
    InputSpec,
}

pub fn class_tag(class: usize) -> String {
    format!("class{class}")
}

/// Marker word of a class; letters only so the tokenizer keeps it whole.
pub fn marker_word(class: usize) -> String {
    let mut word = String::from("zx");
    let mut c = class;
    loop {
        word.push((b'a' + (c % 26) as u8) as char);
        c /= 26;
        if c == 0 {
            break;
        }
    }
    word
}

fn filler(index: usize) -> String {
    (0..3).map(|k| SYLLABLES[(index >> (4 * k)) % 16]).collect()
}

fn sentence(rng: &mut impl Rng, len: usize, marker: Option<&str>) -> String {
    let mut words: Vec<String> = (0..len)
        .map(|_| filler(rng.gen_range(0..FILLER_WORDS)))
        .collect();
    if let Some(m) = marker {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, m.to_string());
    }
    words.join(" ")
}

/// `n` problems cycling through `classes` classes, one tag each.
pub fn keyword_problems(n: usize, classes: usize, signal: SignalField, seed: u64) -> Vec<Problem> {
    let mut rng = seeded_rng(seed);
    (0..n)
        .map(|i| {
            let class = i % classes.max(1);
            let marker = marker_word(class);
            let (statement, input_spec) = match signal {
                SignalField::Statement => {
                    let len = rng.gen_range(12..24);
                    let s = sentence(&mut rng, len, Some(&marker));
                    (s, sentence(&mut rng, 8, None))
                }
                SignalField::InputSpec => {
                    let len = rng.gen_range(12..24);
                    let s = sentence(&mut rng, len, None);
                    (s, sentence(&mut rng, 8, Some(&marker)))
                }
            };
            Problem {
                id: format!("syn{i}"),
                title: format!("Problem {i}"),
                time_limit_s: 1.0,
                memory_limit_mb: 256,
                statement,
                input_spec,
                output_spec: sentence(&mut rng, 6, None),
                notes: None,
                tags: BTreeSet::from([class_tag(class)]),
            }
        })
        .collect()
}

/// Multiclass dataset over [`keyword_problems`].
pub fn keyword_dataset(n: usize, classes: usize, signal: SignalField, seed: u64) -> LabeledDataset {
    let catalog =
        TagCatalog::new((0..classes).map(class_tag).collect()).expect("distinct class tags");
    LabeledDataset::from_problems(
        DatasetKind::Multiclass,
        catalog,
        keyword_problems(n, classes, signal, seed),
    )
    .expect("synthetic problems are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Tokenizer;

    #[test]
    fn markers_are_single_tokens_and_unique() {
        let tok = Tokenizer::default();
        let words: BTreeSet<String> = (0..60).map(marker_word).collect();
        assert_eq!(words.len(), 60);
        for w in &words {
            assert_eq!(tok.tokenize(w), vec![w.clone()]);
        }
        assert!(!(0..FILLER_WORDS).any(|i| filler(i).starts_with("zx")));
    }

    #[test]
    fn dataset_is_balanced_and_marked() {
        let ds = keyword_dataset(100, 5, SignalField::InputSpec, 3);
        assert_eq!(ds.len(), 100);
        for it in &ds.items {
            let m = marker_word(it.labels[0]);
            assert!(it.problem.input_spec.contains(&m));
            assert!(!it.problem.statement.contains("zx"));
        }
        assert_eq!(keyword_dataset(100, 5, SignalField::InputSpec, 3), ds);
    }
}
