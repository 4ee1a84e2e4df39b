//! Sparse order-N n-gram count tensors.
//!
//! Coordinates are stored 0-based (vocabulary index minus one) in a sorted map,
//! so iteration order is deterministic. The text dump uses 1-based indices.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::LabeledGroup;
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::ngram::{build_vocabulary, extract_ngrams, index_ngram, tokenize, NGram, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    #[serde(alias = "freq")]
    Frequency,
    Binary,
    #[serde(alias = "log")]
    LogFrequency,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Frequency => "freq",
            Variant::Binary => "binary",
            Variant::LogFrequency => "log",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "freq" | "frequency" => Ok(Variant::Frequency),
            "binary" => Ok(Variant::Binary),
            "log" | "log_frequency" => Ok(Variant::LogFrequency),
            other => Err(Error::InvalidArgument(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseCountTensor {
    order: usize,
    dim: usize,
    entries: BTreeMap<Vec<usize>, f64>,
    variant: Variant,
}

impl SparseCountTensor {
    /// Builds a tensor from 0-based coordinates; zero values are dropped and
    /// duplicate coordinates are summed.
    pub fn from_entries(
        order: usize,
        dim: usize,
        entries: impl IntoIterator<Item = (Vec<usize>, f64)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (coord, v) in entries {
            if coord.len() != order || coord.iter().any(|&i| i >= dim) {
                return Err(Error::InvalidArgument(format!(
                    "coordinate {coord:?} outside {dim}^{order}"
                )));
            }
            *map.entry(coord).or_default() += v;
        }
        map.retain(|_, v| *v != 0.0);
        Ok(SparseCountTensor {
            order,
            dim,
            entries: map,
            variant: Variant::Frequency,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stored entries keyed by 0-based coordinates, in lexicographic order.
    pub fn entries(&self) -> &BTreeMap<Vec<usize>, f64> {
        &self.entries
    }

    /// Value at a 1-based index tuple (0 when absent).
    pub fn get(&self, index: &[usize]) -> f64 {
        let coord: Vec<usize> = index.iter().map(|i| i.wrapping_sub(1)).collect();
        self.entries.get(&coord).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        tensor_frobenius_norm(self)
    }

    /// Lines `i1 i2 … iN value`, 1-based, sorted by coordinates.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (coord, v) in &self.entries {
            for i in coord {
                write!(w, "{} ", i + 1)?;
            }
            writeln!(w, "{v}")?;
        }
        Ok(())
    }
}

/// Counts every n-gram of every member (windows never cross documents).
pub fn build_count_tensor(
    group: &LabeledGroup,
    n: usize,
    vocab: &Vocabulary,
) -> Result<SparseCountTensor> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "tensor order must be at least 2".into(),
        ));
    }
    let mut entries: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for doc in &group.members {
        for gram in extract_ngrams(&tokenize(&doc.text), n)? {
            let idx: Vec<usize> = index_ngram(vocab, &gram)?
                .into_iter()
                .map(|i| i - 1)
                .collect();
            *entries.entry(idx).or_default() += 1.0;
        }
    }
    Ok(SparseCountTensor {
        order: n,
        dim: vocab.len(),
        entries,
        variant: Variant::Frequency,
    })
}

/// Per-member n-gram sequences of a group.
pub fn group_ngrams(group: &LabeledGroup, n: usize) -> Result<Vec<Vec<NGram>>> {
    group
        .members
        .iter()
        .map(|d| extract_ngrams(&tokenize(&d.text), n))
        .collect()
}

/// Builds the group vocabulary and its frequency tensor in one pass.
pub fn build_group_tensor(
    group: &LabeledGroup,
    n: usize,
) -> Result<(Vocabulary, SparseCountTensor)> {
    let grams = group_ngrams(group, n)?;
    let vocab = build_vocabulary(&grams);
    let tensor = build_count_tensor(group, n, &vocab)?;
    Ok((vocab, tensor))
}

/// Re-weights a frequency tensor; the sparsity pattern is unchanged.
pub fn apply_variant(t: &SparseCountTensor, variant: Variant) -> Result<SparseCountTensor> {
    if t.variant != Variant::Frequency {
        return Err(Error::InvalidArgument(format!(
            "variants apply to frequency tensors, this one is `{}`",
            t.variant
        )));
    }
    let f: fn(f64) -> f64 = match variant {
        Variant::Frequency => |c| c,
        Variant::Binary => |_| 1.0,
        Variant::LogFrequency => f64::ln_1p,
    };
    Ok(SparseCountTensor {
        order: t.order,
        dim: t.dim,
        entries: t.entries.iter().map(|(k, &v)| (k.clone(), f(v))).collect(),
        variant,
    })
}

/// Column index of `coord` in the mode-`mode` (0-based) unfolding: remaining
/// modes in ascending order, lowest varying fastest.
pub(crate) fn unfold_column(coord: &[usize], mode: usize, dim: usize) -> usize {
    let mut col = 0usize;
    let mut stride = 1usize;
    for (k, &i) in coord.iter().enumerate() {
        if k == mode {
            continue;
        }
        col += i * stride;
        stride = stride.saturating_mul(dim);
    }
    col
}

/// Mode-n matricization (`mode` is 1-based): `dim × dim^(N-1)`.
pub fn unfold(t: &SparseCountTensor, mode: usize) -> Result<SparseMatrix> {
    if mode < 1 || mode > t.order {
        return Err(Error::InvalidArgument(format!(
            "mode {mode} out of range 1..={}",
            t.order
        )));
    }
    let cols = u32::try_from(t.order - 1)
        .ok()
        .and_then(|e| t.dim.checked_pow(e))
        .ok_or_else(|| {
            Error::InvalidArgument(format!("unfolding of {}^{} overflows", t.dim, t.order))
        })?;
    let m = mode - 1;
    let entries = t
        .entries
        .iter()
        .map(|(c, &v)| (c[m], unfold_column(c, m, t.dim), v))
        .collect();
    Ok(SparseMatrix::new(t.dim, cols, entries))
}

pub fn tensor_frobenius_norm(t: &SparseCountTensor) -> f64 {
    t.entries.values().map(|v| v * v).sum::<f64>().sqrt()
}
