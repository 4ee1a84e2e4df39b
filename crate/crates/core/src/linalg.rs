//! Small dense/sparse linear algebra kernels used by the decompositions.
//!
//! Singular values come from one-sided Jacobi for matrices that fit the dense
//! budget and from Golub-Kahan-Lanczos bidiagonalization with full
//! reorthogonalization otherwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        DenseMatrix { rows, cols, data }
    }

    /// Builds a matrix from column vectors of equal length.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Coordinate-format sparse matrix with 0-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    /// Entries must be in range; explicit zeros are dropped.
    pub fn new(rows: usize, cols: usize, entries: Vec<(usize, usize, f64)>) -> Self {
        let entries: Vec<_> = entries.into_iter().filter(|e| e.2 != 0.0).collect();
        assert!(
            entries.iter().all(|&(r, c, _)| r < rows && c < cols),
            "sparse entry out of range"
        );
        SparseMatrix {
            rows,
            cols,
            entries,
        }
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if m[(i, j)] != 0.0 {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        SparseMatrix::new(m.rows(), m.cols(), entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.0 == r && e.1 == c)
            .map(|e| e.2)
            .sum()
    }

    pub fn transpose(&self) -> SparseMatrix {
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            entries: self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> SparseMatrix {
        SparseMatrix::new(
            self.rows,
            self.cols,
            self.entries
                .iter()
                .map(|&(r, c, v)| (r, c, v * factor))
                .collect(),
        )
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.2 * e.2).sum::<f64>().sqrt()
    }

    /// Renumbers columns so only occupied ones remain, in ascending original order.
    /// Singular values and left singular vectors are unchanged.
    pub fn compress_columns(&self) -> SparseMatrix {
        let mut cols: Vec<usize> = self.entries.iter().map(|e| e.1).collect();
        cols.sort_unstable();
        cols.dedup();
        let entries = self
            .entries
            .iter()
            .map(|&(r, c, v)| (r, cols.binary_search(&c).expect("column present"), v))
            .collect();
        SparseMatrix {
            rows: self.rows,
            cols: cols.len(),
            entries,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
    }

    fn t_matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for &(r, c, v) in &self.entries {
            y[c] += v * x[r];
        }
    }
}

/// Singular values in non-increasing order, optionally with the matching left
/// singular vectors as columns of `left`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub values: Vec<f64>,
    pub left: Option<DenseMatrix>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi on the columns of `cols` (each of length `len`).
/// Returns column norms and, when requested, the accumulated rotation matrix
/// (`cols.len()` square, column-major as vectors).
fn hestenes(cols: &mut [Vec<f64>], accumulate: bool) -> Option<Vec<Vec<f64>>> {
    let n = cols.len();
    let mut v: Option<Vec<Vec<f64>>> = accumulate.then(|| {
        (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                e
            })
            .collect()
    });
    let mut sq: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = sq[p];
                let beta = sq[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&cols[p], &cols[q]);
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                let (cp, cq) = (&mut lo[p], &mut hi[0]);
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = c * a - s * b;
                    *y = s * a + c * b;
                }
                sq[p] = dot(cp, cp);
                sq[q] = dot(cq, cq);
                if let Some(v) = v.as_mut() {
                    let (lo, hi) = v.split_at_mut(q);
                    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let (a, b) = (*x, *y);
                        *x = c * a - s * b;
                        *y = s * a + c * b;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    v
}

/// Dense SVD by one-sided Jacobi. Left vectors are returned only for nonzero
/// singular values.
pub fn jacobi_svd(a: &DenseMatrix, want_left: bool) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Svd {
            values: Vec::new(),
            left: want_left.then(|| DenseMatrix::zeros(m, 0)),
        };
    }
    // Orthogonalize the columns of whichever orientation has fewer columns.
    let tall = m >= n;
    let mut cols: Vec<Vec<f64>> = if tall {
        (0..n).map(|j| a.column(j)).collect()
    } else {
        (0..m)
            .map(|i| a.as_slice()[i * n..(i + 1) * n].to_vec())
            .collect()
    };
    let rot = hestenes(&mut cols, want_left && !tall);
    let mut order: Vec<(f64, usize)> = cols.iter().enumerate().map(|(j, c)| (norm(c), j)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let sigma_max = order.first().map_or(0.0, |o| o.0);
    let cutoff = sigma_max * f64::EPSILON * (m.max(n) as f64) * 4.0;
    let kept: Vec<(f64, usize)> = order.into_iter().filter(|o| o.0 > cutoff).collect();
    let values: Vec<f64> = kept.iter().map(|o| o.0).collect();
    let left = want_left.then(|| {
        let vecs: Vec<Vec<f64>> = if tall {
            kept.iter()
                .map(|&(s, j)| cols[j].iter().map(|x| x / s).collect())
                .collect()
        } else {
            let rot = rot.as_ref().expect("rotations accumulated");
            kept.iter().map(|&(_, j)| rot[j].clone()).collect()
        };
        DenseMatrix::from_columns(m, &vecs)
    });
    Svd { values, left }
}

/// Extends the orthonormal columns of `basis` (rows × c) to `target` columns
/// with seeded random vectors, Gram-Schmidt'd twice.
pub fn orthonormal_complete(basis: &DenseMatrix, target: usize, seed: u64) -> DenseMatrix {
    let rows = basis.rows();
    assert!(
        target <= rows,
        "cannot hold {target} orthonormal columns in dimension {rows}"
    );
    let mut cols: Vec<Vec<f64>> = (0..basis.cols()).map(|j| basis.column(j)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
    let mut unit = 0usize;
    while cols.len() < target {
        let mut v: Vec<f64> = (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if unit < rows && cols.len() + (rows - unit) <= target {
            // fall back to canonical axes if random draws keep collapsing
            v = vec![0.0; rows];
            v[unit] = 1.0;
            unit += 1;
        }
        for _ in 0..2 {
            for c in &cols {
                let d = dot(c, &v);
                axpy(-d, c, &mut v);
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            cols.push(v);
        }
    }
    DenseMatrix::from_columns(rows, &cols)
}

/// Above this many dense cells (or Jacobi work units) the Lanczos path is used.
const DENSE_CELL_LIMIT: usize = 4_000_000;
const DENSE_WORK_LIMIT: usize = 200_000_000;

/// The `top` largest singular values of `a` (fewer if its numerical rank is smaller).
pub fn truncated_svd(a: &SparseMatrix, top: usize, want_left: bool, seed: u64) -> Svd {
    let a = a.compress_columns();
    let (m, n) = (a.rows(), a.cols());
    let (lo, hi) = (m.min(n), m.max(n));
    if top == 0 || a.nnz() == 0 {
        return Svd {
            values: Vec::new(),
            left: want_left.then(|| DenseMatrix::zeros(m, 0)),
        };
    }
    let dense_ok = m.saturating_mul(n) <= DENSE_CELL_LIMIT
        && lo.saturating_mul(lo).saturating_mul(hi) <= DENSE_WORK_LIMIT;
    let mut svd = if dense_ok || lo <= top {
        jacobi_svd(&a.to_dense(), want_left)
    } else {
        lanczos_svd(&a, top, want_left, seed)
    };
    svd.values.truncate(top);
    if let Some(u) = svd.left.take() {
        let keep = svd.values.len();
        let cols: Vec<Vec<f64>> = (0..keep).map(|j| u.column(j)).collect();
        svd.left = Some(DenseMatrix::from_columns(m, &cols));
    }
    svd
}

/// Golub-Kahan-Lanczos bidiagonalization with full reorthogonalization.
/// Grows the Krylov dimension until the top Ritz triples have residual below
/// `1e-12 * sigma_max`, or the full rank is reached.
pub fn lanczos_svd(a: &SparseMatrix, top: usize, want_left: bool, seed: u64) -> Svd {
    let (m, n) = (a.rows(), a.cols());
    let limit = m.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = a.frobenius_norm();
    let tiny = scale * 1e-13;

    let random_orthogonal =
        |rng: &mut ChaCha8Rng, basis: &[Vec<f64>], dim: usize| -> Option<Vec<f64>> {
            for _ in 0..8 {
                let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                for _ in 0..2 {
                    for b in basis {
                        let d = dot(b, &v);
                        axpy(-d, b, &mut v);
                    }
                }
                let nv = norm(&v);
                if nv > 1e-10 {
                    v.iter_mut().for_each(|x| *x /= nv);
                    return Some(v);
                }
            }
            None
        };

    let mut qs: Vec<Vec<f64>> = Vec::new(); // right vectors, length n
    let mut ps: Vec<Vec<f64>> = Vec::new(); // left vectors, length m
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new(); // betas[j] couples step j to j+1

    let q0 = random_orthogonal(&mut rng, &[], n).expect("nonempty dimension");
    qs.push(q0);
    let mut target = limit.min(2 * top + 10);
    let mut work_m = vec![0.0; m];
    let mut work_n = vec![0.0; n];

    loop {
        while alphas.len() < target {
            let j = alphas.len();
            // p_j = A q_j - beta_{j-1} p_{j-1}
            a.matvec(&qs[j], &mut work_m);
            let mut p = work_m.clone();
            if j > 0 {
                axpy(-betas[j - 1], &ps[j - 1], &mut p);
            }
            for _ in 0..2 {
                for b in &ps {
                    let d = dot(b, &p);
                    axpy(-d, b, &mut p);
                }
            }
            let mut alpha = norm(&p);
            if alpha <= tiny {
                alpha = 0.0;
                match random_orthogonal(&mut rng, &ps, m) {
                    Some(v) => p = v,
                    None => break,
                }
            } else {
                p.iter_mut().for_each(|x| *x /= alpha);
            }
            alphas.push(alpha);
            ps.push(p);

            // q_{j+1} = A^T p_j - alpha_j q_j
            a.t_matvec(&ps[j], &mut work_n);
            let mut q = work_n.clone();
            axpy(-alpha, &qs[j], &mut q);
            for _ in 0..2 {
                for b in &qs {
                    let d = dot(b, &q);
                    axpy(-d, b, &mut q);
                }
            }
            let mut beta = norm(&q);
            if qs.len() >= n {
                beta = 0.0;
                betas.push(beta);
                break;
            }
            if beta <= tiny {
                beta = 0.0;
                match random_orthogonal(&mut rng, &qs, n) {
                    Some(v) => q = v,
                    None => {
                        betas.push(beta);
                        break;
                    }
                }
            } else {
                q.iter_mut().for_each(|x| *x /= beta);
            }
            betas.push(beta);
            qs.push(q);
        }

        let l = alphas.len();
        let mut b = DenseMatrix::zeros(l, l);
        for i in 0..l {
            b[(i, i)] = alphas[i];
            if i + 1 < l {
                b[(i, i + 1)] = betas[i];
            }
        }
        let inner = jacobi_svd(&b, true);
        let ub = inner.left.as_ref().expect("left vectors requested");
        let sigma_max = inner.values.first().copied().unwrap_or(0.0);
        let last_beta = betas.get(l - 1).copied().unwrap_or(0.0);
        let check = top.min(inner.values.len());
        let converged = (0..check).all(|i| (last_beta * ub[(l - 1, i)]).abs() <= 1e-12 * sigma_max);
        if converged || l >= limit || l < target {
            let keep = check;
            let values = inner.values[..keep].to_vec();
            let left = want_left.then(|| {
                let cols: Vec<Vec<f64>> = (0..keep)
                    .map(|i| {
                        let mut u = vec![0.0; m];
                        for (k, p) in ps.iter().enumerate() {
                            axpy(ub[(k, i)], p, &mut u);
                        }
                        u
                    })
                    .collect();
                DenseMatrix::from_columns(m, &cols)
            });
            return Svd { values, left };
        }
        target = limit.min(target * 2);
    }
}

/// Solves `(g + ridge I) x = rhs` for symmetric positive semidefinite `g`
/// by Cholesky; `rhs` holds one right-hand side per row.
pub fn ridge_solve_rows(g: &DenseMatrix, ridge: f64, rhs: &mut DenseMatrix) {
    let r = g.rows();
    assert_eq!(g.cols(), r);
    assert_eq!(rhs.cols(), r);
    let mut l = DenseMatrix::zeros(r, r);
    for i in 0..r {
        for j in 0..=i {
            let mut s = g[(i, j)] + if i == j { ridge } else { 0.0 };
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                l[(i, i)] = s.max(ridge).sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    let mut y = vec![0.0; r];
    for row in 0..rhs.rows() {
        for i in 0..r {
            let mut s = rhs[(row, i)];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..r).rev() {
            let mut s = y[i];
            for k in (i + 1)..r {
                s -= l[(k, i)] * rhs[(row, k)];
            }
            rhs[(row, i)] = s / l[(i, i)];
        }
    }
}
