//! Dense small-matrix linear algebra and the seeded randomness contract.
//!
//! Matrices are row-major `Vec<f64>` buffers; vectors are plain slices. The
//! symmetric eigensolver is a cyclic Jacobi iteration, which is accurate to a
//! few ulps relative to the spectral radius for the dimensions used here
//! (d ≤ 256).

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum allowed asymmetry for symmetric-matrix operations.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Relative spectral cutoff for the minimum-norm solve.
pub const SPECTRAL_CUTOFF: f64 = 1e-10;
/// Relative residual tolerance for the minimum-norm solve.
pub const RESIDUAL_TOL: f64 = 1e-7;
/// Relative tolerance below which a Gram–Schmidt residual counts as dependent.
pub const RANK_TOL: f64 = 1e-9;

// ── Vector helpers ──────────────────────────────────────────────────────────

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Sup-norm distance between two vectors.
pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

// ── Matrix ──────────────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::InvalidInput(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::InvalidInput(format!(
                    "row {i} has length {}, expected {c}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    /// Σ v vᵀ over the given vectors (all of dimension `n`).
    pub fn outer_sum<'a>(n: usize, vectors: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut m = Self::zeros(n, n);
        for v in vectors {
            m.add_outer(v, 1.0);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::InvalidInput(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// In-place `self += s · x xᵀ`.
    pub fn add_outer(&mut self, x: &[f64], s: f64) {
        let n = self.cols;
        for i in 0..x.len() {
            let xi = s * x[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..x.len() {
                self.data[i * n + j] += xi * x[j];
            }
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn has_nan(&self) -> bool {
        self.data.iter().any(|v| v.is_nan())
    }

    pub fn frobenius(&self) -> f64 {
        norm(&self.data)
    }
}

fn check_symmetric(a: &Matrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidInput(format!(
            "expected a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    if a.rows == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    if a.has_nan() {
        return Err(Error::InvalidInput("matrix contains NaN".into()));
    }
    let asym = a.max_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::ContractViolation(format!(
            "matrix is not symmetric (max |A_ij - A_ji| = {asym:.3e})"
        )));
    }
    Ok(())
}

// ── Symmetric eigendecomposition ────────────────────────────────────────────

/// Eigenpairs of a symmetric matrix, eigenvalues ascending. `vectors` stores
/// eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymEigen {
    pub fn new(a: &Matrix) -> Result<Self> {
        check_symmetric(a)?;
        Ok(jacobi(a))
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pseudo-inverse applied to `b`, dropping eigenvalues at or below
    /// `SPECTRAL_CUTOFF · λ_max`.
    pub fn pinv_apply(&self, b: &[f64]) -> Vec<f64> {
        let n = self.values.len();
        let cutoff = SPECTRAL_CUTOFF * self.max_abs();
        let mut out = vec![0.0; n];
        for k in 0..n {
            let lam = self.values[k];
            if lam <= cutoff || lam <= 0.0 {
                continue;
            }
            let q = self.vectors.column(k);
            let c = dot(&q, b) / lam;
            for i in 0..n {
                out[i] += c * q[i];
            }
        }
        out
    }

    /// Symmetric square root of the pseudo-inverse, `Σ λ_k^{-1/2} q_k q_kᵀ`.
    pub fn pinv_sqrt(&self) -> Matrix {
        let n = self.values.len();
        let cutoff = SPECTRAL_CUTOFF * self.max_abs();
        let mut out = Matrix::zeros(n, n);
        for k in 0..n {
            let lam = self.values[k];
            if lam <= cutoff || lam <= 0.0 {
                continue;
            }
            let q = self.vectors.column(k);
            out.add_outer(&q, 1.0 / lam.sqrt());
        }
        out
    }

    /// Quadratic form `xᵀ A⁺ x`.
    pub fn pinv_quad(&self, x: &[f64]) -> f64 {
        let n = self.values.len();
        let cutoff = SPECTRAL_CUTOFF * self.max_abs();
        let mut acc = 0.0;
        for k in 0..n {
            let lam = self.values[k];
            if lam <= cutoff || lam <= 0.0 {
                continue;
            }
            let c: f64 = (0..n).map(|i| self.vectors.get(i, k) * x[i]).sum();
            acc += c * c / lam;
        }
        acc
    }
}

fn jacobi(a: &Matrix) -> SymEigen {
    let n = a.rows;
    let mut m = a.clone();
    // Work on the exactly symmetric part.
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, s);
            m.set(j, i, s);
        }
    }
    let mut v = Matrix::identity(n);
    let scale = m.frobenius();

    if scale > 0.0 {
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += m.get(p, q) * m.get(p, q);
                }
            }
            if off.sqrt() <= 1e-17 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m.get(p, q);
                    if apq.abs() <= f64::MIN_POSITIVE {
                        continue;
                    }
                    let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = m.get(k, p);
                        let akq = m.get(k, q);
                        m.set(k, p, c * akp - s * akq);
                        m.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = m.get(p, k);
                        let aqk = m.get(q, k);
                        m.set(p, k, c * apk - s * aqk);
                        m.set(q, k, s * apk + c * aqk);
                    }
                    m.set(p, q, 0.0);
                    m.set(q, p, 0.0);
                    for k in 0..n {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, c * vkp - s * vkq);
                        v.set(k, q, s * vkp + c * vkq);
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).total_cmp(&m.get(j, j)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, new, v.get(r, old));
        }
    }
    SymEigen { values, vectors }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &Matrix) -> Result<f64> {
    Ok(SymEigen::new(a)?.min())
}

// ── Subspaces ───────────────────────────────────────────────────────────────

/// Orthonormalize `basis` with twice-iterated modified Gram–Schmidt. Fails if
/// the vectors are linearly dependent (relative tolerance `RANK_TOL`).
pub fn orthonormalize(basis: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(basis.len());
    for (idx, v) in basis.iter().enumerate() {
        let original = norm(v);
        let r = gs_residual(&out, v);
        let rn = norm(&r);
        if original == 0.0 || !original.is_finite() || rn <= RANK_TOL * original {
            return Err(Error::InvalidInput(format!(
                "basis vector {idx} is linearly dependent on the preceding ones"
            )));
        }
        out.push(scale(&r, 1.0 / rn));
    }
    Ok(out)
}

fn gs_residual(ortho: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for q in ortho {
            let c = dot(q, &r);
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= c * qi;
            }
        }
    }
    r
}

/// Orthonormal basis of span(vectors), skipping dependent vectors.
pub fn span_basis(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let scale_ref = vectors.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let mut out: Vec<Vec<f64>> = Vec::new();
    if scale_ref == 0.0 {
        return out;
    }
    for v in vectors {
        let r = gs_residual(&out, v);
        let rn = norm(&r);
        if rn > RANK_TOL * scale_ref {
            out.push(scale(&r, 1.0 / rn));
        }
    }
    out
}

/// Orthogonal projection of `v` onto the span of an orthonormal basis.
pub fn project(onb: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for q in onb {
        let c = dot(q, v);
        for (o, qi) in out.iter_mut().zip(q) {
            *o += c * qi;
        }
    }
    out
}

/// `Bᵀ A B` for an orthonormal basis given as a list of column vectors.
pub fn project_operator(a: &Matrix, onb: &[Vec<f64>]) -> Matrix {
    let r = onb.len();
    let aq: Vec<Vec<f64>> = onb.iter().map(|q| a.matvec(q)).collect();
    let mut p = Matrix::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            p.set(i, j, dot(&onb[i], &aq[j]));
        }
    }
    // Symmetrize away rounding.
    for i in 0..r {
        for j in (i + 1)..r {
            let s = 0.5 * (p.get(i, j) + p.get(j, i));
            p.set(i, j, s);
            p.set(j, i, s);
        }
    }
    p
}

/// Minimum of βᵀAβ over unit β in span(basis).
pub fn restricted_min_eigenvalue(a: &Matrix, basis: &[Vec<f64>]) -> Result<f64> {
    check_symmetric(a)?;
    if basis.is_empty() {
        return Err(Error::InvalidInput("empty basis".into()));
    }
    if let Some(bad) = basis.iter().find(|b| b.len() != a.rows) {
        return Err(Error::InvalidInput(format!(
            "basis vector has dimension {}, matrix has {}",
            bad.len(),
            a.rows
        )));
    }
    let onb = orthonormalize(basis)?;
    restricted_min_eigenvalue_onb(a, &onb)
}

/// Same as [`restricted_min_eigenvalue`] for an already orthonormal basis.
pub fn restricted_min_eigenvalue_onb(a: &Matrix, onb: &[Vec<f64>]) -> Result<f64> {
    min_eigenvalue(&project_operator(a, onb))
}

/// Greedy pivoted choice of an exploration set: repeatedly add the arm that
/// maximizes the minimum eigenvalue of Σ_{i∈S} x_i x_iᵀ restricted to the span
/// of the chosen arms, until the chosen arms span the span of all arms.
/// Ties go to the lowest index.
pub fn spanning_subset(features: &[Vec<f64>]) -> Vec<usize> {
    let target_rank = span_basis(features).len();
    let scale_ref = features.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let mut chosen: Vec<usize> = Vec::new();
    let mut onb: Vec<Vec<f64>> = Vec::new();
    while onb.len() < target_rank {
        let mut best: Option<(usize, f64)> = None;
        for (i, x) in features.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let r = gs_residual(&onb, x);
            if norm(&r) <= RANK_TOL * scale_ref {
                continue;
            }
            let mut trial = onb.clone();
            trial.push(scale(&r, 1.0 / norm(&r)));
            let d = x.len();
            let g = Matrix::outer_sum(
                d,
                chosen
                    .iter()
                    .map(|&j| features[j].as_slice())
                    .chain(std::iter::once(x.as_slice())),
            );
            let lam = restricted_min_eigenvalue_onb(&g, &trial).unwrap_or(0.0);
            if best.is_none_or(|(_, b)| lam > b) {
                best = Some((i, lam));
            }
        }
        let Some((i, _)) = best else { break };
        let r = gs_residual(&onb, &features[i]);
        onb.push(scale(&r, 1.0 / norm(&r)));
        chosen.push(i);
    }
    chosen
}

// ── Gram updates and least squares ──────────────────────────────────────────

/// Returns `V + x xᵀ`.
pub fn gram_update(v: &Matrix, x: &[f64]) -> Result<Matrix> {
    if !v.is_square() || v.rows != x.len() {
        return Err(Error::InvalidInput(format!(
            "cannot update {}x{} Gram matrix with a {}-vector",
            v.rows,
            v.cols,
            x.len()
        )));
    }
    let mut out = v.clone();
    out.add_outer(x, 1.0);
    Ok(out)
}

/// Minimum-norm solution of `Vθ = b` for symmetric PSD `V`.
pub fn least_squares_solve(v: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if v.rows != b.len() {
        return Err(Error::InvalidInput(format!(
            "right-hand side has dimension {}, matrix has {}",
            b.len(),
            v.rows
        )));
    }
    let eig = SymEigen::new(v)?;
    least_squares_with(v, &eig, b)
}

/// Minimum-norm solve reusing an eigendecomposition of `v`.
pub fn least_squares_with(v: &Matrix, eig: &SymEigen, b: &[f64]) -> Result<Vec<f64>> {
    let theta = eig.pinv_apply(b);
    let resid = norm(&sub(&v.matvec(&theta), b));
    let tolerance = RESIDUAL_TOL * (1.0 + norm(b));
    if resid > tolerance || resid.is_nan() {
        return Err(Error::InconsistentSystem {
            residual: resid,
            tolerance,
        });
    }
    Ok(theta)
}

// ── Seeded randomness ───────────────────────────────────────────────────────

/// A ChaCha8 stream addressed by `(seed, stream_id)`. Identical addresses give
/// identical sequences on every platform; distinct stream ids select
/// independent keystreams of the same key.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub fn draw_gaussian<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + sd * z
}

pub fn draw_standard_normal_vec<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

/// Uniform draw on the unit sphere S^{d-1}; with `positive_orthant` the
/// coordinates are reflected into the nonnegative orthant (still uniform there).
pub fn draw_uniform_sphere<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    positive_orthant: bool,
) -> Vec<f64> {
    loop {
        let mut z = draw_standard_normal_vec(rng, d);
        let n = norm(&z);
        if n == 0.0 || !n.is_finite() {
            continue;
        }
        for zi in z.iter_mut() {
            *zi /= n;
            if positive_orthant {
                *zi = zi.abs();
            }
        }
        return z;
    }
}

/// Uniform draw in the closed unit ball.
pub fn draw_uniform_ball<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    let dir = draw_uniform_sphere(rng, d, false);
    let u: f64 = rng.random();
    let r = u.powf(1.0 / d as f64);
    let mut x = scale(&dir, r);
    let n = norm(&x);
    if n > 1.0 {
        x = scale(&x, 1.0 / n);
    }
    x
}

/// Dirichlet draw as normalized independent Gamma(α_m, 1) variates.
pub fn draw_dirichlet<R: Rng + ?Sized>(rng: &mut R, alpha: &[f64]) -> Result<Vec<f64>> {
    if alpha.is_empty() {
        return Err(Error::InvalidInput("Dirichlet needs at least one concentration".into()));
    }
    let gammas = alpha
        .iter()
        .map(|&a| {
            if a > 0.0 && a.is_finite() {
                Gamma::new(a, 1.0).map_err(|e| Error::InvalidInput(e.to_string()))
            } else {
                Err(Error::InvalidInput(format!(
                    "Dirichlet concentration must be positive, got {a}"
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if alpha.len() == 1 {
        return Ok(vec![1.0]);
    }
    loop {
        let g: Vec<f64> = gammas.iter().map(|d| d.sample(rng)).collect();
        let s: f64 = g.iter().sum();
        if s > 0.0 && s.is_finite() {
            return Ok(g.into_iter().map(|x| x / s).collect());
        }
    }
}
