//! Classical scorers used as baselines: ROUGE-L F1, add-one smoothed n-gram
//! language model perplexity, and Youden's J threshold calibration.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::ngram::{tokenize, TokenSequence};

/// Length of the longest common subsequence.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F1 (beta = 1) from the token LCS.
pub fn rouge_l(candidate: &TokenSequence, reference: &TokenSequence) -> f64 {
    let lcs = lcs_length(candidate.tokens(), reference.tokens());
    if lcs == 0 {
        return 0.0;
    }
    let p = lcs as f64 / candidate.len() as f64;
    let r = lcs as f64 / reference.len() as f64;
    2.0 * p * r / (p + r)
}

/// Per-token probabilities of a left-to-right language model.
pub trait TokenModel {
    /// `P(token | previous)`, where `previous` is `None` at the start of a text.
    fn prob(&self, previous: Option<&str>, token: &str) -> f64;
}

pub const UNK: &str = "<unk>";

/// Add-one smoothed unigram or bigram model over the training vocabulary plus
/// an unknown-token symbol. The first token of a text is scored by the
/// unigram distribution.
#[derive(Debug, Clone)]
pub struct NgramLm {
    order: usize,
    index: HashMap<String, usize>,
    unigram: Vec<u64>,
    total: u64,
    bigram: HashMap<(usize, usize), u64>,
    context: Vec<u64>,
}

impl NgramLm {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Vocabulary size including the unknown symbol.
    pub fn vocab_size(&self) -> usize {
        self.unigram.len()
    }

    /// Every symbol the model can emit, unknown symbol last.
    pub fn symbols(&self) -> Vec<String> {
        let mut s = vec![String::new(); self.index.len()];
        for (t, &i) in &self.index {
            s[i] = t.clone();
        }
        s.push(UNK.to_owned());
        s
    }

    fn id(&self, token: &str) -> usize {
        self.index
            .get(token)
            .copied()
            .unwrap_or(self.unigram.len() - 1)
    }

    fn unigram_prob(&self, id: usize) -> f64 {
        (self.unigram[id] + 1) as f64 / (self.total + self.vocab_size() as u64) as f64
    }
}

impl TokenModel for NgramLm {
    fn prob(&self, previous: Option<&str>, token: &str) -> f64 {
        let w = self.id(token);
        match previous {
            Some(prev) if self.order >= 2 => {
                let u = self.id(prev);
                let c = self.bigram.get(&(u, w)).copied().unwrap_or(0);
                (c + 1) as f64 / (self.context[u] + self.vocab_size() as u64) as f64
            }
            _ => self.unigram_prob(w),
        }
    }
}

pub fn train_ngram_lm(train_docs: &[Document], order: usize) -> Result<NgramLm> {
    if train_docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(1..=2).contains(&order) {
        return Err(Error::InvalidArgument(format!(
            "language model order must be 1 or 2, got {order}"
        )));
    }
    let seqs: Vec<TokenSequence> = train_docs.iter().map(|d| tokenize(&d.text)).collect();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut ids: Vec<Vec<usize>> = Vec::with_capacity(seqs.len());
    for s in &seqs {
        ids.push(
            s.tokens()
                .iter()
                .map(|t| {
                    let next = index.len();
                    *index.entry(t.clone()).or_insert(next)
                })
                .collect(),
        );
    }
    let v = index.len() + 1;
    let mut unigram = vec![0u64; v];
    let mut context = vec![0u64; v];
    let mut bigram = HashMap::new();
    let mut total = 0u64;
    for doc in &ids {
        for &w in doc {
            unigram[w] += 1;
            total += 1;
        }
        if order >= 2 {
            for pair in doc.windows(2) {
                *bigram.entry((pair[0], pair[1])).or_insert(0u64) += 1;
                context[pair[0]] += 1;
            }
        }
    }
    Ok(NgramLm {
        order,
        index,
        unigram,
        total,
        bigram,
        context,
    })
}

pub fn perplexity_of_tokens(lm: &impl TokenModel, seq: &TokenSequence) -> Result<f64> {
    let toks = seq.tokens();
    if toks.is_empty() {
        return Err(Error::InvalidArgument(
            "perplexity of an empty token sequence".into(),
        ));
    }
    let mut nll = 0.0;
    for (i, t) in toks.iter().enumerate() {
        let prev = i.checked_sub(1).map(|j| toks[j].as_str());
        nll -= lm.prob(prev, t).ln();
    }
    Ok((nll / toks.len() as f64).exp())
}

/// exp of the mean per-token negative log-likelihood.
pub fn perplexity(lm: &impl TokenModel, doc: &Document) -> Result<f64> {
    perplexity_of_tokens(lm, &tokenize(&doc.text))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherIsPositive,
    LowerIsPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedThreshold {
    pub threshold: f64,
    pub direction: Direction,
    pub j_statistic: f64,
}

/// TPR - FPR from raw counts.
fn youden_j(tp: usize, fp: usize, pos: usize, neg: usize) -> f64 {
    tp as f64 / pos as f64 - fp as f64 / neg as f64
}

/// Maximizes Youden's J over midpoints of consecutive distinct scores and both
/// directions. Ties go to the smaller threshold, then to higher-is-positive.
pub fn youden_threshold(scores: &[f64], labels: &[u8]) -> Result<CalibratedThreshold> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // distinct values with cumulative (pos, neg) counts at or below each
    let mut distinct: Vec<(f64, usize, usize)> = Vec::new();
    let (mut cp, mut cn) = (0, 0);
    for &i in &idx {
        if labels[i] == 1 {
            cp += 1;
        } else {
            cn += 1;
        }
        match distinct.last_mut() {
            Some(last) if last.0 == scores[i] => {
                last.1 = cp;
                last.2 = cn;
            }
            _ => distinct.push((scores[i], cp, cn)),
        }
    }
    if distinct.len() < 2 {
        return Ok(CalibratedThreshold {
            threshold: distinct[0].0,
            direction: Direction::HigherIsPositive,
            j_statistic: youden_j(pos, neg, pos, neg),
        });
    }
    let mut best: Option<CalibratedThreshold> = None;
    for w in distinct.windows(2) {
        let t = w[0].0 + (w[1].0 - w[0].0) / 2.0;
        let (below_p, below_n) = (w[0].1, w[0].2);
        for (direction, tp, fp) in [
            (Direction::HigherIsPositive, pos - below_p, neg - below_n),
            (Direction::LowerIsPositive, below_p, below_n),
        ] {
            let j = youden_j(tp, fp, pos, neg);
            if best.is_none_or(|b| j > b.j_statistic) {
                best = Some(CalibratedThreshold {
                    threshold: t,
                    direction,
                    j_statistic: j,
                });
            }
        }
    }
    Ok(best.expect("at least one candidate"))
}

/// Applies a calibrated threshold; a score equal to the threshold is positive.
pub fn threshold_classify(scores: &[f64], cal: &CalibratedThreshold) -> Vec<u8> {
    scores
        .iter()
        .map(|&s| {
            let positive = match cal.direction {
                Direction::HigherIsPositive => s >= cal.threshold,
                Direction::LowerIsPositive => s <= cal.threshold,
            };
            u8::from(positive)
        })
        .collect()
}
