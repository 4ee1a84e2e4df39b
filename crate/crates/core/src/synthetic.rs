//! Synthetic two-class corpora with label-dependent bigram statistics.
//!
//! Each document is a run of bigrams. With probability `bias` a bigram comes
//! from its class lexicon, otherwise from a shared background lexicon. The
//! hallucinated lexicon is small and repetitive while the factual one is
//! wide, so the classes differ in the spectrum of their bigram matrices.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Label, Subset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub docs_per_class: usize,
    /// Probability that a bigram is drawn from the class lexicon.
    pub bias: f64,
    pub min_bigrams: usize,
    pub max_bigrams: usize,
    /// (distinct tokens, distinct bigrams) of the hallucinated lexicon.
    pub hallucinated_lexicon: (usize, usize),
    pub factual_lexicon: (usize, usize),
    pub background_lexicon: (usize, usize),
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            docs_per_class: 400,
            bias: 0.8,
            min_bigrams: 6,
            max_bigrams: 12,
            hallucinated_lexicon: (12, 24),
            factual_lexicon: (48, 48),
            background_lexicon: (40, 40),
            seed: 2024,
        }
    }
}

fn lexicon(
    prefix: &str,
    (tokens, bigrams): (usize, usize),
    rng: &mut ChaCha8Rng,
) -> Vec<(String, String)> {
    let words: Vec<String> = (0..tokens).map(|i| format!("{prefix}{i}")).collect();
    (0..bigrams)
        .map(|_| {
            let a = rng.gen_range(0..tokens);
            let b = rng.gen_range(0..tokens);
            (words[a].clone(), words[b].clone())
        })
        .collect()
}

/// Generates `docs_per_class` documents per label, hallucinated first.
pub fn generate(cfg: &SyntheticConfig) -> Result<Vec<Document>> {
    if cfg.min_bigrams == 0 || cfg.max_bigrams < cfg.min_bigrams {
        return Err(Error::InvalidArgument("invalid bigram count range".into()));
    }
    if !(0.0..=1.0).contains(&cfg.bias) {
        return Err(Error::InvalidArgument("bias must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let hal = lexicon("h", cfg.hallucinated_lexicon, &mut rng);
    let fac = lexicon("f", cfg.factual_lexicon, &mut rng);
    let bg = lexicon("w", cfg.background_lexicon, &mut rng);
    let mut docs = Vec::with_capacity(2 * cfg.docs_per_class);
    for (label, own) in [(Label::Hallucinated, &hal), (Label::Factual, &fac)] {
        for i in 0..cfg.docs_per_class {
            let n = rng.gen_range(cfg.min_bigrams..=cfg.max_bigrams);
            let mut words = Vec::with_capacity(2 * n);
            for _ in 0..n {
                let source = if rng.gen_bool(cfg.bias) { own } else { &bg };
                let (a, b) = &source[rng.gen_range(0..source.len())];
                words.push(a.as_str());
                words.push(b.as_str());
            }
            docs.push(Document {
                id: format!("{}:{label}", i + 1),
                text: words.join(" "),
                label,
                subset: Subset::Other,
                reference: None,
            });
        }
    }
    Ok(docs)
}

/// Writes documents as `{"text": ..., "label": ...}` lines.
pub fn write_jsonl(docs: &[Document], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for d in docs {
        let line = serde_json::json!({"text": d.text, "label": d.label.as_str()});
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_labels_and_determinism() {
        let cfg = SyntheticConfig {
            docs_per_class: 10,
            ..Default::default()
        };
        let a = generate(&cfg).unwrap();
        assert_eq!(a.len(), 20);
        assert_eq!(
            a.iter().filter(|d| d.label == Label::Hallucinated).count(),
            10
        );
        assert_eq!(a, generate(&cfg).unwrap());
        for d in &a {
            let n = d.text.split(' ').count();
            assert!(n % 2 == 0 && n >= 2 * cfg.min_bigrams && n <= 2 * cfg.max_bigrams);
        }
    }

    #[test]
    fn class_lexicons_are_disjoint() {
        let docs = generate(&SyntheticConfig {
            docs_per_class: 50,
            bias: 1.0,
            ..Default::default()
        })
        .unwrap();
        for d in docs {
            let want = if d.label == Label::Hallucinated {
                'h'
            } else {
                'f'
            };
            assert!(d.text.split(' ').all(|w| w.starts_with(want)));
        }
    }
}
