//! Spectral features of count tensors: matrix SVD spectra, Tucker (HOSVD) core
//! magnitudes and CP-ALS weights, cropped or zero-padded to a fixed length.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    orthonormal_complete, ridge_solve_rows, truncated_svd, DenseMatrix, SparseMatrix,
};
use crate::tensor::{tensor_frobenius_norm, unfold, SparseCountTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DecompKind {
    #[default]
    Svd,
    Tucker,
    Cp,
}

impl DecompKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DecompKind::Svd => "svd",
            DecompKind::Tucker => "tucker",
            DecompKind::Cp => "cp",
        }
    }
}

impl fmt::Display for DecompKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecompKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svd" => Ok(DecompKind::Svd),
            "tucker" => Ok(DecompKind::Tucker),
            "cp" | "cpd" => Ok(DecompKind::Cp),
            other => Err(Error::InvalidArgument(format!(
                "unknown decomposition `{other}`"
            ))),
        }
    }
}

/// Ridge added to CP-ALS normal equations.
pub const CP_RIDGE: f64 = 1e-10;
pub const DEFAULT_TUCKER_RANK: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompConfig {
    pub kind: DecompKind,
    pub k: usize,
    /// Defaults to `k` when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cp_rank: Option<usize>,
    /// Defaults to `min(dim, 10)` per mode when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tucker_ranks: Option<Vec<usize>>,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for DecompConfig {
    fn default() -> Self {
        DecompConfig {
            kind: DecompKind::Svd,
            k: 20,
            cp_rank: None,
            tucker_ranks: None,
            max_iters: 100,
            tol: 1e-6,
            seed: 0,
        }
    }
}

impl DecompConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.cp_rank == Some(0) {
            return Err(Error::InvalidArgument("cp_rank must be at least 1".into()));
        }
        if let Some(r) = &self.tucker_ranks {
            if r.contains(&0) {
                return Err(Error::InvalidArgument(
                    "tucker ranks must be at least 1".into(),
                ));
            }
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidArgument(
                "max_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn effective_cp_rank(&self) -> usize {
        self.cp_rank.unwrap_or(self.k)
    }

    pub fn effective_tucker_ranks(&self, t: &SparseCountTensor) -> Vec<usize> {
        self.tucker_ranks
            .clone()
            .unwrap_or_else(|| vec![t.dim().min(DEFAULT_TUCKER_RANK); t.order()])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub group_id: String,
    pub kind: DecompKind,
    pub n: usize,
    pub group_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// 1 = hallucinated, 0 = factual.
    pub label: u8,
    pub provenance: Provenance,
}

/// The `top` largest singular values, non-increasing; empty for a zero matrix.
pub fn svd_singular_values(m: &SparseMatrix, top: usize) -> Vec<f64> {
    truncated_svd(m, top, false, 0).values
}

/// Higher-order SVD: orthonormal factor matrices (`dim × rank_n`) and the
/// dense core, flattened with the first mode varying fastest.
#[derive(Debug, Clone)]
pub struct Hosvd {
    pub factors: Vec<DenseMatrix>,
    pub ranks: Vec<usize>,
    pub core: Vec<f64>,
}

impl Hosvd {
    pub fn core_norm(&self) -> f64 {
        self.core.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub fn hosvd(t: &SparseCountTensor, ranks: &[usize], seed: u64) -> Result<Hosvd> {
    if t.order() < 2 {
        return Err(Error::InvalidArgument(
            "HOSVD needs order at least 2".into(),
        ));
    }
    if ranks.len() != t.order() {
        return Err(Error::InvalidArgument(format!(
            "{} Tucker ranks given for an order-{} tensor",
            ranks.len(),
            t.order()
        )));
    }
    if let Some(&r) = ranks.iter().find(|&&r| r < 1 || r > t.dim()) {
        return Err(Error::InvalidArgument(format!(
            "Tucker rank {r} outside 1..={}",
            t.dim()
        )));
    }
    let mut factors = Vec::with_capacity(t.order());
    for (mode, &r) in ranks.iter().enumerate() {
        let unf = unfold(t, mode + 1)?;
        let svd = truncated_svd(&unf, r, true, seed.wrapping_add(mode as u64));
        let u = svd.left.expect("left vectors requested");
        let u = if u.cols() < r {
            orthonormal_complete(&u, r, seed.wrapping_add(mode as u64))
        } else {
            u
        };
        factors.push(u);
    }
    let size: usize = ranks.iter().product();
    let mut core = vec![0.0; size];
    let mut buf = vec![0.0; size];
    for (coord, &v) in t.entries() {
        // outer product of the factor rows selected by this coordinate
        buf[0] = v;
        let mut len = 1usize;
        for (mode, &i) in coord.iter().enumerate() {
            let f = &factors[mode];
            let r = ranks[mode];
            for rr in (0..r).rev() {
                let w = f[(i, rr)];
                for p in 0..len {
                    buf[rr * len + p] = buf[p] * w;
                }
            }
            len *= r;
        }
        for (c, b) in core.iter_mut().zip(&buf) {
            *c += b;
        }
    }
    Ok(Hosvd {
        factors,
        ranks: ranks.to_vec(),
        core,
    })
}

fn sorted_magnitudes(values: impl IntoIterator<Item = f64>, k: usize) -> Vec<f64> {
    let mut mags: Vec<f64> = values.into_iter().map(f64::abs).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    mags.truncate(k);
    mags
}

/// The `k` largest absolute core entries of a HOSVD, descending.
pub fn tucker_features(t: &SparseCountTensor, cfg: &DecompConfig) -> Result<Vec<f64>> {
    if t.is_empty() {
        return Ok(Vec::new());
    }
    let ranks = cfg.effective_tucker_ranks(t);
    let h = hosvd(t, &ranks, cfg.seed)?;
    Ok(sorted_magnitudes(h.core, cfg.k))
}

/// A CP model with unit-norm factor columns.
#[derive(Debug, Clone)]
pub struct CpModel {
    pub weights: Vec<f64>,
    pub factors: Vec<DenseMatrix>,
    /// Fit `1 - ||X - X_hat|| / ||X||` after each sweep.
    pub fits: Vec<f64>,
}

fn gram(a: &DenseMatrix) -> DenseMatrix {
    a.transpose().matmul(a)
}

fn normalize_columns(a: &mut DenseMatrix) -> Vec<f64> {
    let mut norms = vec![0.0; a.cols()];
    for (j, nj) in norms.iter_mut().enumerate() {
        *nj = (0..a.rows()).map(|i| a[(i, j)].powi(2)).sum::<f64>().sqrt();
        if *nj > 0.0 {
            for i in 0..a.rows() {
                a[(i, j)] /= *nj;
            }
        }
    }
    norms
}

fn mttkrp(t: &SparseCountTensor, factors: &[DenseMatrix], mode: usize, rank: usize) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(t.dim(), rank);
    let mut prod = vec![0.0; rank];
    for (coord, &v) in t.entries() {
        prod.iter_mut().for_each(|p| *p = v);
        for (m, &i) in coord.iter().enumerate() {
            if m == mode {
                continue;
            }
            for (r, p) in prod.iter_mut().enumerate() {
                *p *= factors[m][(i, r)];
            }
        }
        for (r, p) in prod.iter().enumerate() {
            out[(coord[mode], r)] += p;
        }
    }
    out
}

/// Alternating least squares for a rank-`rank` CP model.
pub fn cp_als(
    t: &SparseCountTensor,
    rank: usize,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> Result<CpModel> {
    if rank < 1 {
        return Err(Error::InvalidArgument("CP rank must be at least 1".into()));
    }
    let order = t.order();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors: Vec<DenseMatrix> = (0..order)
        .map(|_| {
            let data = (0..t.dim() * rank)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let mut f = DenseMatrix::from_row_major(t.dim(), rank, data);
            normalize_columns(&mut f);
            f
        })
        .collect();
    let mut grams: Vec<DenseMatrix> = factors.iter().map(gram).collect();
    let norm_x = tensor_frobenius_norm(t);
    let mut weights = vec![1.0; rank];
    let mut fits = Vec::new();
    let mut last_fit = 0.0;

    for iter in 0..max_iters {
        let mut last_mttkrp = None;
        for mode in 0..order {
            let m = mttkrp(t, &factors, mode, rank);
            let mut v = DenseMatrix::from_row_major(rank, rank, vec![1.0; rank * rank]);
            for (other, g) in grams.iter().enumerate() {
                if other != mode {
                    for i in 0..rank {
                        for j in 0..rank {
                            v[(i, j)] *= g[(i, j)];
                        }
                    }
                }
            }
            let mut a = m.clone();
            ridge_solve_rows(&v, CP_RIDGE, &mut a);
            weights = normalize_columns(&mut a);
            grams[mode] = gram(&a);
            factors[mode] = a;
            if mode == order - 1 {
                last_mttkrp = Some(m);
            }
        }
        let m = last_mttkrp.expect("order >= 1");
        let last = &factors[order - 1];
        let mut inner = 0.0;
        for r in 0..rank {
            let col: f64 = (0..t.dim()).map(|i| m[(i, r)] * last[(i, r)]).sum();
            inner += weights[r] * col;
        }
        let mut model_sq = 0.0;
        for i in 0..rank {
            for j in 0..rank {
                let g: f64 = grams.iter().map(|g| g[(i, j)]).product();
                model_sq += weights[i] * weights[j] * g;
            }
        }
        let resid = (norm_x * norm_x + model_sq - 2.0 * inner).abs().sqrt();
        let fit = if norm_x > 0.0 {
            1.0 - resid / norm_x
        } else {
            0.0
        };
        fits.push(fit);
        if iter > 0 && (fit - last_fit).abs() < tol {
            break;
        }
        last_fit = fit;
    }
    Ok(CpModel {
        weights,
        factors,
        fits,
    })
}

/// CP weights sorted by descending magnitude.
pub fn cp_features(t: &SparseCountTensor, cfg: &DecompConfig) -> Result<Vec<f64>> {
    if t.order() < 3 {
        return Err(Error::InvalidArgument(
            "CP features need a tensor of order at least 3".into(),
        ));
    }
    if t.is_empty() {
        return Ok(Vec::new());
    }
    let model = cp_als(t, cfg.effective_cp_rank(), cfg.max_iters, cfg.tol, cfg.seed)?;
    Ok(sorted_magnitudes(model.weights, usize::MAX))
}

/// Decomposition value segments for `t`. Order-2 SVD yields the single shared
/// spectrum; higher-order SVD yields one spectrum per mode unfolding.
pub fn extract_segments(t: &SparseCountTensor, cfg: &DecompConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    match cfg.kind {
        DecompKind::Svd => {
            if t.order() == 2 {
                Ok(vec![svd_singular_values(&unfold(t, 1)?, cfg.k)])
            } else {
                (1..=t.order())
                    .map(|m| Ok(svd_singular_values(&unfold(t, m)?, cfg.k)))
                    .collect()
            }
        }
        DecompKind::Tucker => Ok(vec![tucker_features(t, cfg)?]),
        DecompKind::Cp => Ok(vec![cp_features(t, cfg)?]),
    }
}

/// Concatenates segments in order, then crops to or right-pads with zeros to `k`.
pub fn assemble_values(per_mode_values: &[Vec<f64>], k: usize) -> Vec<f64> {
    let mut out: Vec<f64> = per_mode_values.iter().flatten().copied().take(k).collect();
    out.resize(k, 0.0);
    out
}

pub fn assemble_feature_vector(
    per_mode_values: &[Vec<f64>],
    k: usize,
    label: u8,
    provenance: Provenance,
) -> FeatureVector {
    FeatureVector {
        values: assemble_values(per_mode_values, k),
        label,
        provenance,
    }
}

/// Rough peak working-set estimate in bytes for decomposing `t` under `cfg`.
pub fn estimate_work_bytes(t: &SparseCountTensor, cfg: &DecompConfig) -> f64 {
    let nnz = t.nnz() as f64;
    let dim = t.dim() as f64;
    let order = t.order() as f64;
    let storage = nnz * (order * 8.0 + 48.0);
    let krylov = (cfg.k as f64 * 4.0 + 20.0).min(dim.max(1.0));
    let unfolding = |top: f64| {
        let cols = nnz.min(dim.powf(order - 1.0));
        let dense = dim * cols;
        if dense <= 4.0e6 {
            dense * 8.0
        } else {
            (dim + cols) * top.max(krylov) * 8.0
        }
    };
    let work = match cfg.kind {
        DecompKind::Svd => unfolding(cfg.k as f64),
        DecompKind::Tucker => {
            let ranks = cfg.effective_tucker_ranks(t);
            let core: f64 = ranks.iter().map(|&r| r as f64).product::<f64>() * 16.0;
            let r_max = ranks.iter().copied().max().unwrap_or(1) as f64;
            unfolding(r_max) + core + dim * ranks.iter().sum::<usize>() as f64 * 8.0
        }
        DecompKind::Cp => dim * cfg.effective_cp_rank() as f64 * order * 3.0 * 8.0,
    };
    storage + work
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: usize, cols: usize, data: &[f64]) -> SparseMatrix {
        SparseMatrix::from_dense(&DenseMatrix::from_row_major(rows, cols, data.to_vec()))
    }

    fn rank_one(a: &[f64], b: &[f64], c: &[f64], scale: f64) -> SparseCountTensor {
        let mut e = Vec::new();
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                for (k, z) in c.iter().enumerate() {
                    e.push((vec![i, j, k], scale * x * y * z));
                }
            }
        }
        SparseCountTensor::from_entries(3, a.len(), e).unwrap()
    }

    fn unit(v: &[f64]) -> Vec<f64> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    }

    #[test]
    fn svd_examples() {
        assert_eq!(
            svd_singular_values(&matrix(2, 2, &[3.0, 0.0, 0.0, 1.0]), 5),
            vec![3.0, 1.0]
        );
        assert_eq!(
            svd_singular_values(&matrix(2, 2, &[1.0, 0.0, 0.0, 1.0]), 5),
            vec![1.0, 1.0]
        );
        assert!(svd_singular_values(&SparseMatrix::new(3, 3, vec![]), 2).is_empty());
        assert_eq!(
            svd_singular_values(&matrix(2, 2, &[3.0, 0.0, 0.0, 1.0]), 1),
            vec![3.0]
        );
    }

    #[test]
    fn tucker_rank_one() {
        let a = unit(&[1.0, 2.0, 3.0]);
        let b = unit(&[0.5, -1.0, 2.0]);
        let c = unit(&[2.0, 1.0, 1.0]);
        let t = rank_one(&a, &b, &c, 7.0);
        let cfg = DecompConfig {
            kind: DecompKind::Tucker,
            k: 8,
            tucker_ranks: Some(vec![2, 2, 2]),
            ..Default::default()
        };
        let f = tucker_features(&t, &cfg).unwrap();
        assert!((f[0] - 7.0).abs() < 1e-10);
        assert!(f[1..].iter().all(|&v| v <= 1e-8));
    }

    #[test]
    fn tucker_zero_tensor() {
        let t = SparseCountTensor::from_entries(3, 4, []).unwrap();
        assert!(tucker_features(&t, &DecompConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn tucker_order_two_equals_svd() {
        let data: Vec<f64> = (0..36).map(|i| ((i * 7919) % 23) as f64 - 11.0).collect();
        let m = DenseMatrix::from_row_major(6, 6, data);
        let t = SparseCountTensor::from_entries(
            2,
            6,
            (0..6)
                .flat_map(|i| (0..6).map(move |j| (i, j)))
                .map(|(i, j)| (vec![i, j], m[(i, j)])),
        )
        .unwrap();
        let cfg = DecompConfig {
            kind: DecompKind::Tucker,
            k: 6,
            tucker_ranks: Some(vec![6, 6]),
            ..Default::default()
        };
        let tuck = tucker_features(&t, &cfg).unwrap();
        let svd = svd_singular_values(&SparseMatrix::from_dense(&m), 6);
        for (x, y) in tuck.iter().zip(&svd) {
            assert!((x - y).abs() <= 1e-6 * y.max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn hosvd_rejects_bad_ranks() {
        let t = SparseCountTensor::from_entries(2, 3, [(vec![0, 0], 1.0)]).unwrap();
        assert!(hosvd(&t, &[4, 1], 0).is_err());
        assert!(hosvd(&t, &[1], 0).is_err());
    }

    #[test]
    fn cp_rank_one_recovers_norm() {
        let a = unit(&[1.0, 2.0, 3.0, 1.0]);
        let b = unit(&[0.5, -1.0, 2.0, 0.0]);
        let c = unit(&[2.0, 1.0, 1.0, 1.0]);
        let t = rank_one(&a, &b, &c, 7.0);
        let cfg = DecompConfig {
            kind: DecompKind::Cp,
            k: 1,
            cp_rank: Some(1),
            ..Default::default()
        };
        let f = cp_features(&t, &cfg).unwrap();
        assert_eq!(f.len(), 1);
        assert!((f[0] - 7.0).abs() <= 7e-4, "{}", f[0]);
    }

    #[test]
    fn cp_requires_order_three_and_handles_zero() {
        let m = SparseCountTensor::from_entries(2, 2, [(vec![0, 0], 1.0)]).unwrap();
        assert!(cp_features(&m, &DecompConfig::default()).is_err());
        let z = SparseCountTensor::from_entries(3, 2, []).unwrap();
        assert!(cp_features(&z, &DecompConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn cp_is_deterministic() {
        let t = SparseCountTensor::from_entries(
            3,
            4,
            [
                (vec![0, 1, 2], 2.0),
                (vec![1, 1, 1], 1.0),
                (vec![3, 0, 2], 4.0),
                (vec![2, 2, 3], 1.0),
            ],
        )
        .unwrap();
        let cfg = DecompConfig {
            kind: DecompKind::Cp,
            k: 3,
            seed: 5,
            ..Default::default()
        };
        let a = cp_features(&t, &cfg).unwrap();
        let b = cp_features(&t, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn assemble_examples() {
        assert_eq!(
            assemble_values(&[vec![5.0, 3.0], vec![4.0, 2.0]], 4),
            vec![5.0, 3.0, 4.0, 2.0]
        );
        assert_eq!(
            assemble_values(&[vec![5.0, 3.0, 4.0, 2.0]], 3),
            vec![5.0, 3.0, 4.0]
        );
        assert_eq!(
            assemble_values(&[vec![5.0, 3.0]], 4),
            vec![5.0, 3.0, 0.0, 0.0]
        );
        assert_eq!(assemble_values(&[], 2), vec![0.0, 0.0]);
    }

    #[test]
    fn svd_kind_on_order_three_gives_per_mode_segments() {
        let t = SparseCountTensor::from_entries(3, 2, [(vec![0, 0, 0], 1.0), (vec![1, 1, 1], 5.0)])
            .unwrap();
        let cfg = DecompConfig {
            k: 4,
            ..Default::default()
        };
        let segs = extract_segments(&t, &cfg).unwrap();
        assert_eq!(segs.len(), 3);
        for s in segs {
            assert_eq!(s, vec![5.0, 1.0]);
        }
    }
}
