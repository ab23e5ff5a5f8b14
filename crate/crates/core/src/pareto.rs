//! Pareto and effective-Pareto optimality: fronts, suboptimality gaps, regret
//! curves, fairness indices and regularity indices of weight distributions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, draw_dirichlet, norm, sup_dist};

/// Gaps at or below this value are reported as exactly zero.
pub const GAP_SNAP: f64 = 1e-12;
/// Tolerance used to decide effective-front membership.
pub const FRONT_TOL: f64 = 1e-9;

pub type WeightVector = Vec<f64>;

pub fn is_on_simplex(w: &[f64]) -> bool {
    !w.is_empty() && w.iter().all(|&x| x >= 0.0) && (w.iter().sum::<f64>() - 1.0).abs() <= 1e-12
}

// ── Reward tables ───────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardTable {
    pub k: usize,
    pub m: usize,
    pub mu: Vec<Vec<f64>>,
}

impl RewardTable {
    pub fn new(mu: Vec<Vec<f64>>) -> Result<Self> {
        let k = mu.len();
        let m = mu.first().map_or(0, Vec::len);
        if k == 0 || m == 0 {
            return Err(Error::InvalidInput("reward table needs K, M >= 1".into()));
        }
        if mu.iter().any(|r| r.len() != m || r.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidInput("reward table rows must be finite and of equal length".into()));
        }
        Ok(Self { k, m, mu })
    }

    pub fn from_flat(k: usize, m: usize, data: &[f64]) -> Result<Self> {
        if data.len() != k * m {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {k}x{m} table, got {}",
                k * m,
                data.len()
            )));
        }
        Self::new(data.chunks(m.max(1)).map(<[f64]>::to_vec).collect())
    }

    pub fn scalarized(&self, i: usize, w: &[f64]) -> f64 {
        dot(&self.mu[i], w)
    }
}

/// Where the true expected rewards of round t come from.
#[derive(Clone, Debug)]
pub enum TableSource {
    Fixed(RewardTable),
    PerRound(Vec<RewardTable>),
}

impl TableSource {
    /// Table of round `t` (0-based).
    pub fn table(&self, t: usize) -> &RewardTable {
        match self {
            TableSource::Fixed(tab) => tab,
            TableSource::PerRound(v) => &v[t],
        }
    }

    pub fn m(&self) -> usize {
        match self {
            TableSource::Fixed(tab) => tab.m,
            TableSource::PerRound(v) => v.first().map_or(0, |t| t.m),
        }
    }
}

// ── Fronts and gaps ─────────────────────────────────────────────────────────

fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// Arms whose reward vectors are not dominated by any single other arm.
pub fn pareto_front(table: &RewardTable) -> Vec<usize> {
    (0..table.k)
        .filter(|&i| !(0..table.k).any(|j| j != i && dominates(&table.mu[j], &table.mu[i])))
        .collect()
}

/// max(0, max_{j≠i} min_m (μ_{j,m} − μ_{i,m})).
pub fn pareto_gap(table: &RewardTable, i: usize) -> f64 {
    let mut best: f64 = 0.0;
    for j in 0..table.k {
        if j == i {
            continue;
        }
        let margin = table.mu[j]
            .iter()
            .zip(&table.mu[i])
            .map(|(a, b)| a - b)
            .fold(f64::INFINITY, f64::min);
        best = best.max(margin);
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    pub pareto_gap: f64,
    pub effective_gap: f64,
    /// Optimal mixture over arms when the effective gap is positive.
    pub witness_weight: Option<WeightVector>,
}

/// Value and row strategy of the zero-sum game max_{w ∈ Δ_rows} min_col (wᵀA).
///
/// Solved as the column player's LP after shifting A to be strictly positive:
/// max Σz s.t. (A + c)z ≤ 1, z ≥ 0, whose optimum is 1/(value + c). The slack
/// basis is feasible so no phase one is needed; Bland's rule prevents cycling.
/// The row strategy is read off the slack reduced costs (the dual solution).
pub fn matrix_game(a: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let rows = a.len();
    let cols = a[0].len();
    let min_entry = a.iter().flatten().fold(f64::INFINITY, |m, &v| m.min(v));
    let shift = 1.0 - min_entry;

    let width = cols + rows + 1;
    let rhs = width - 1;
    let mut tab = vec![0.0; rows * width];
    for j in 0..rows {
        for m in 0..cols {
            tab[j * width + m] = a[j][m] + shift;
        }
        tab[j * width + cols + j] = 1.0;
        tab[j * width + rhs] = 1.0;
    }
    let mut reduced = vec![0.0; cols + rows];
    reduced[..cols].fill(1.0);
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    const PIVOT_TOL: f64 = 1e-12;
    for _ in 0..50_000 {
        let Some(enter) = (0..cols + rows).find(|&c| reduced[c] > PIVOT_TOL) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            let coef = tab[r * width + enter];
            if coef > PIVOT_TOL {
                let ratio = tab[r * width + rhs] / coef;
                let better = match leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < lratio - 1e-15 || (ratio <= lratio + 1e-15 && basis[r] < basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((pr, _)) = leave else {
            // Unbounded cannot happen with a strictly positive matrix.
            break;
        };
        let piv = tab[pr * width + enter];
        for c in 0..width {
            tab[pr * width + c] /= piv;
        }
        for r in 0..rows {
            if r == pr {
                continue;
            }
            let f = tab[r * width + enter];
            if f != 0.0 {
                for c in 0..width {
                    tab[r * width + c] -= f * tab[pr * width + c];
                }
            }
        }
        let f = reduced[enter];
        for c in 0..cols + rows {
            reduced[c] -= f * tab[pr * width + c];
        }
        basis[pr] = enter;
    }

    let total: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b < cols)
        .map(|(r, _)| tab[r * width + rhs])
        .sum();
    let value = 1.0 / total - shift;
    let mut w: Vec<f64> = (0..rows).map(|j| (-reduced[cols + j]).max(0.0)).collect();
    let s: f64 = w.iter().sum();
    if s > 0.0 {
        for x in w.iter_mut() {
            *x /= s;
        }
    }
    (value, w)
}

/// Pareto gap and effective gap of arm `i`. The effective gap is the value of
/// max_{w ∈ Δ_K} min_m (Σ_j w_j μ_{j,m} − μ_{i,m}), floored at zero.
pub fn effective_pareto_gap(table: &RewardTable, i: usize) -> GapResult {
    let a: Vec<Vec<f64>> = table
        .mu
        .iter()
        .map(|row| row.iter().zip(&table.mu[i]).map(|(x, y)| x - y).collect())
        .collect();
    let (value, w) = matrix_game(&a);
    let effective_gap = if value > GAP_SNAP { value } else { 0.0 };
    GapResult {
        pareto_gap: pareto_gap(table, i),
        effective_gap,
        witness_weight: (effective_gap > 0.0).then_some(w),
    }
}

pub fn all_effective_gaps(table: &RewardTable) -> Vec<f64> {
    (0..table.k).map(|i| effective_pareto_gap(table, i).effective_gap).collect()
}

/// Arms with zero effective gap (within 1e-9).
pub fn effective_pareto_front(table: &RewardTable) -> Vec<usize> {
    (0..table.k)
        .filter(|&i| effective_pareto_gap(table, i).effective_gap <= FRONT_TOL)
        .collect()
}

/// Lowest-index maximizer of Σ_m w_m μ_{i,m}.
pub fn weighted_optimum(table: &RewardTable, w: &[f64]) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for i in 0..table.k {
        let s = table.scalarized(i, w);
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

// ── Regret curves ───────────────────────────────────────────────────────────

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretCurves {
    pub pr: Vec<f64>,
    pub epr: Vec<f64>,
}

/// Cumulative Pareto and effective-Pareto regret from per-round
/// `(pareto_gap, effective_gap)` pairs.
pub fn accumulate_regret(gaps: impl IntoIterator<Item = (f64, f64)>) -> RegretCurves {
    let mut out = RegretCurves::default();
    let (mut pr, mut epr) = (0.0, 0.0);
    for (p, e) in gaps {
        pr += p;
        epr += e;
        out.pr.push(pr);
        out.epr.push(epr);
    }
    out
}

// ── Fairness ────────────────────────────────────────────────────────────────

/// How the EPFI infimum over the weight simplex was approximated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightCover {
    pub method: String,
    pub resolution: usize,
    pub weights: Vec<Vec<f64>>,
}

/// All simplex points with coordinates in {0, 1/n, …, 1}.
pub fn simplex_grid(m: usize, n: usize) -> Vec<Vec<f64>> {
    fn rec(m: usize, left: usize, n: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if prefix.len() == m - 1 {
            prefix.push(left);
            out.push(prefix.iter().map(|&a| a as f64 / n as f64).collect());
            prefix.pop();
            return;
        }
        for a in 0..=left {
            prefix.push(a);
            rec(m, left - a, n, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if m == 0 {
        return out;
    }
    rec(m, n, n, &mut Vec::with_capacity(m), &mut out);
    out
}

fn vertices(m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| {
            let mut e = vec![0.0; m];
            e[i] = 1.0;
            e
        })
        .collect()
}

/// Weight set for the EPFI infimum: a simplex grid with at least 100 points
/// for M ≤ 3, otherwise the vertices plus `max(resolution, 10⁴)` Dirichlet(1)
/// samples.
pub fn epfi_weights<R: Rng + ?Sized>(m: usize, resolution: usize, rng: &mut R) -> WeightCover {
    match m {
        1 => WeightCover {
            method: "grid".into(),
            resolution: 1,
            weights: vec![vec![1.0]],
        },
        2 | 3 => {
            let min_res = if m == 2 { 99 } else { 13 };
            let n = resolution.max(min_res);
            WeightCover {
                method: "grid".into(),
                resolution: n,
                weights: simplex_grid(m, n),
            }
        }
        _ => {
            let n = resolution.max(10_000);
            let ones = vec![1.0; m];
            let mut weights = vertices(m);
            for _ in 0..n {
                weights.push(draw_dirichlet(rng, &ones).expect("positive concentrations"));
            }
            WeightCover {
                method: "dirichlet".into(),
                resolution: n,
                weights,
            }
        }
    }
}

/// Fraction of rounds of one run in which the chosen arm is ε-optimal for `w`.
fn eps_optimal_fraction(arms: &[usize], tables: &TableSource, epsilon: f64, w: &[f64]) -> f64 {
    if arms.is_empty() {
        return 0.0;
    }
    let hit = |tab: &RewardTable, a: usize| {
        let best = (0..tab.k).map(|i| tab.scalarized(i, w)).fold(f64::NEG_INFINITY, f64::max);
        best - tab.scalarized(a, w) < epsilon
    };
    let count = match tables {
        TableSource::Fixed(tab) => {
            let ok: Vec<bool> = (0..tab.k).map(|i| hit(tab, i)).collect();
            arms.iter().filter(|&&a| ok[a]).count()
        }
        TableSource::PerRound(v) => arms
            .iter()
            .enumerate()
            .filter(|(t, &a)| hit(&v[*t], a))
            .count(),
    };
    count as f64 / arms.len() as f64
}

/// min over weights of the repeat-averaged ε-optimal fraction.
pub fn epfi_exact_over_runs(runs: &[(&[usize], &TableSource)], epsilon: f64, weights: &[Vec<f64>]) -> f64 {
    if runs.is_empty() {
        return 0.0;
    }
    weights
        .iter()
        .map(|w| {
            runs.iter()
                .map(|(arms, tabs)| eps_optimal_fraction(arms, tabs, epsilon, w))
                .sum::<f64>()
                / runs.len() as f64
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpfiEstimate {
    pub value: f64,
    pub method: String,
    pub resolution: usize,
    pub n_weights: usize,
}

/// EPFI of a single run: min over the weight cover of the fraction of rounds
/// in which the chosen arm's weighted gap is below ε.
pub fn epfi_exact_estimate<R: Rng + ?Sized>(
    arms: &[usize],
    tables: &TableSource,
    epsilon: f64,
    resolution: usize,
    rng: &mut R,
) -> Result<EpfiEstimate> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let cover = epfi_weights(tables.m(), resolution, rng);
    Ok(EpfiEstimate {
        value: epfi_exact_over_runs(&[(arms, tables)], epsilon, &cover.weights),
        method: cover.method,
        resolution: cover.resolution,
        n_weights: cover.weights.len(),
    })
}

/// Sup-norm ball proxy averaged over runs.
///
/// With a fixed table: min over effective-front arms a* of the fraction of
/// rounds whose chosen arm lies within sup-norm ε of μ_{a*}. With per-round
/// tables arm identities change every round, so a round counts only when the
/// chosen arm lies within ε of every effective-front arm of that round.
pub fn epfi_ball_proxy_over_runs(runs: &[(&[usize], &TableSource)], epsilon: f64) -> f64 {
    if runs.is_empty() {
        return 0.0;
    }
    match runs[0].1 {
        TableSource::Fixed(tab) => {
            let front = effective_pareto_front(tab);
            front
                .iter()
                .map(|&star| {
                    runs.iter()
                        .map(|(arms, _)| {
                            let hits = arms
                                .iter()
                                .filter(|&&a| sup_dist(&tab.mu[a], &tab.mu[star]) < epsilon)
                                .count();
                            hits as f64 / arms.len().max(1) as f64
                        })
                        .sum::<f64>()
                        / runs.len() as f64
                })
                .fold(f64::INFINITY, f64::min)
        }
        TableSource::PerRound(_) => {
            runs.iter()
                .map(|(arms, tabs)| {
                    let hits = arms
                        .iter()
                        .enumerate()
                        .filter(|(t, &a)| {
                            let tab = tabs.table(*t);
                            effective_pareto_front(tab)
                                .iter()
                                .all(|&s| sup_dist(&tab.mu[a], &tab.mu[s]) < epsilon)
                        })
                        .count();
                    hits as f64 / arms.len().max(1) as f64
                })
                .sum::<f64>()
                / runs.len() as f64
        }
    }
}

pub fn epfi_ball_proxy(arms: &[usize], tables: &TableSource, epsilon: f64) -> f64 {
    epfi_ball_proxy_over_runs(&[(arms, tables)], epsilon)
}

/// Variance of pull counts over the given front.
pub fn pareto_fairness_variance(arms: &[usize], front: &[usize]) -> f64 {
    if front.is_empty() {
        return 0.0;
    }
    let counts: Vec<f64> = front
        .iter()
        .map(|&i| arms.iter().filter(|&&a| a == i).count() as f64)
        .collect();
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / counts.len() as f64
}

// ── Regularity indices ──────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightDistribution {
    Dirichlet { alpha: Vec<f64> },
    PointMass { w: Vec<f64> },
}

impl WeightDistribution {
    pub fn uniform(m: usize) -> Self {
        WeightDistribution::Dirichlet { alpha: vec![1.0; m] }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            WeightDistribution::Dirichlet { alpha } => draw_dirichlet(rng, alpha),
            WeightDistribution::PointMass { w } => Ok(w.clone()),
        }
    }
}

fn weighted_objective(objectives: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let d = objectives[0].len();
    let mut out = vec![0.0; d];
    for (th, wm) in objectives.iter().zip(w) {
        for (o, t) in out.iter_mut().zip(th) {
            *o += wm * t;
        }
    }
    out
}

/// Monte-Carlo estimates of (φ, ψ): φ is the smallest probability that θ_w
/// lands within ε of a single objective; ψ is the smallest such probability
/// over 200 anchor weights (simplex vertices included, so ψ̂ ≤ φ̂). The ψ̂
/// infimum runs over a finite anchor set and is therefore biased upward.
pub fn regularity_indices<R: Rng + ?Sized>(
    dist: &WeightDistribution,
    objectives: &[Vec<f64>],
    epsilon: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    if objectives.is_empty() || n_samples == 0 {
        return Err(Error::InvalidInput("need objectives and at least one sample".into()));
    }
    let m = objectives.len();
    let samples: Vec<Vec<f64>> = (0..n_samples)
        .map(|_| dist.sample(rng).map(|w| weighted_objective(objectives, &w)))
        .collect::<Result<_>>()?;
    let frac = |target: &[f64]| {
        samples
            .iter()
            .filter(|s| norm(&crate::numerics::sub(s, target)) < epsilon)
            .count() as f64
            / n_samples as f64
    };
    let phi = objectives.iter().map(|th| frac(th)).fold(f64::INFINITY, f64::min);

    let anchors: Vec<Vec<f64>> = match m {
        1 => vec![vec![1.0]],
        2 => simplex_grid(2, 199),
        3 => simplex_grid(3, 19),
        _ => {
            let ones = vec![1.0; m];
            let mut a = vertices(m);
            while a.len() < 200 {
                a.push(draw_dirichlet(rng, &ones)?);
            }
            a
        }
    };
    let psi = anchors
        .iter()
        .map(|w| frac(&weighted_objective(objectives, w)))
        .fold(f64::INFINITY, f64::min);
    Ok((phi, psi))
}
