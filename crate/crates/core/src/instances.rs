//! Problem instances: the synthetic generator, lower-bound families, context
//! samplers, reward sampling, tabular ingestion and validation.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    dot, draw_gaussian, draw_uniform_ball, draw_uniform_sphere, least_squares_solve, norm, scale,
    Matrix, SymEigen,
};
use crate::pareto::{RewardTable, TableSource};

/// Validation tolerance for norm bounds.
pub const NORM_TOL: f64 = 1e-9;

// ── Instance ────────────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub sigma: f64,
    pub x_max: f64,
    pub l: f64,
    #[serde(rename = "L")]
    pub big_l: f64,
    pub features: Vec<Vec<f64>>,
    pub objectives: Vec<Vec<f64>>,
}

impl Instance {
    /// Builds an instance with unit norm bounds (`x_max = l = L = 1`).
    pub fn new(features: Vec<Vec<f64>>, objectives: Vec<Vec<f64>>, sigma: f64) -> Result<Self> {
        let d = objectives
            .first()
            .or(features.first())
            .map_or(0, Vec::len);
        let inst = Self {
            d,
            m: objectives.len(),
            k: features.len(),
            sigma,
            x_max: 1.0,
            l: 1.0,
            big_l: 1.0,
            features,
            objectives,
        };
        inst.check_shape()?;
        Ok(inst)
    }

    fn check_shape(&self) -> Result<()> {
        if self.d == 0 || self.m == 0 || self.k == 0 {
            return Err(Error::InvalidInput(format!(
                "instance needs d, M, K >= 1 (got d={}, M={}, K={})",
                self.d, self.m, self.k
            )));
        }
        if self.features.len() != self.k || self.objectives.len() != self.m {
            return Err(Error::InvalidInput(format!(
                "declared K={} M={} but found {} features and {} objectives",
                self.k,
                self.m,
                self.features.len(),
                self.objectives.len()
            )));
        }
        let bad = self
            .features
            .iter()
            .chain(&self.objectives)
            .any(|v| v.len() != self.d || v.iter().any(|x| !x.is_finite()));
        if bad {
            return Err(Error::InvalidInput(format!(
                "every feature and objective must be a finite {}-vector",
                self.d
            )));
        }
        Ok(())
    }

    /// Expected reward vector of a feature: (xᵀθ_1, …, xᵀθ_M).
    pub fn mean_reward(&self, x: &[f64]) -> Vec<f64> {
        self.objectives.iter().map(|th| dot(x, th)).collect()
    }

    /// Expected reward table over an arbitrary context set.
    pub fn reward_table_for(&self, contexts: &[Vec<f64>]) -> RewardTable {
        RewardTable::new(contexts.iter().map(|x| self.mean_reward(x)).collect())
            .expect("finite instance yields a finite table")
    }

    /// Expected reward table over the instance's own features.
    pub fn reward_table(&self) -> RewardTable {
        self.reward_table_for(&self.features)
    }

    /// Serializes with 17 significant digits per number.
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        s.push_str("{\n");
        let _ = writeln!(s, "  \"d\": {},", self.d);
        let _ = writeln!(s, "  \"M\": {},", self.m);
        let _ = writeln!(s, "  \"K\": {},", self.k);
        let _ = writeln!(s, "  \"sigma\": {},", fmt17(self.sigma));
        let _ = writeln!(s, "  \"x_max\": {},", fmt17(self.x_max));
        let _ = writeln!(s, "  \"l\": {},", fmt17(self.l));
        let _ = writeln!(s, "  \"L\": {},", fmt17(self.big_l));
        write_rows(&mut s, "features", &self.features);
        s.push_str(",\n");
        write_rows(&mut s, "objectives", &self.objectives);
        s.push_str("\n}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Instance =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("instance JSON: {e}")))?;
        inst.check_shape()?;
        Ok(inst)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// 17 significant digits, valid JSON.
pub(crate) fn fmt17(x: f64) -> String {
    if x == 0.0 {
        // Keep the sign of negative zero out of the file.
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

fn write_rows(s: &mut String, key: &str, rows: &[Vec<f64>]) {
    let _ = write!(s, "  \"{key}\": [");
    for (i, row) in rows.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str("\n    [");
        let cells: Vec<String> = row.iter().map(|v| fmt17(*v)).collect();
        s.push_str(&cells.join(", "));
        s.push(']');
    }
    s.push_str("\n  ]");
}

// ── Validation ──────────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub field: String,
    pub value: f64,
    pub message: String,
}

/// Lists every violated instance invariant at tolerance 1e-9.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field: String, value: f64, message: String| {
        out.push(Violation {
            field,
            value,
            message,
        })
    };
    if inst.d == 0 || inst.m == 0 || inst.k == 0 {
        push(
            "dims".into(),
            0.0,
            format!("d={}, M={}, K={} must all be >= 1", inst.d, inst.m, inst.k),
        );
    }
    if !(inst.sigma >= 0.0) {
        push("sigma".into(), inst.sigma, format!("sigma = {} is negative", inst.sigma));
    }
    if inst.features.len() != inst.k {
        push(
            "K".into(),
            inst.features.len() as f64,
            format!("K = {} but {} features", inst.k, inst.features.len()),
        );
    }
    if inst.objectives.len() != inst.m {
        push(
            "M".into(),
            inst.objectives.len() as f64,
            format!("M = {} but {} objectives", inst.m, inst.objectives.len()),
        );
    }
    for (i, x) in inst.features.iter().enumerate() {
        if x.len() != inst.d {
            push(
                format!("features[{i}]"),
                x.len() as f64,
                format!("dimension {} != d = {}", x.len(), inst.d),
            );
            continue;
        }
        let n = norm(x);
        if !(n <= inst.x_max + NORM_TOL) {
            push(
                format!("features[{i}]"),
                n,
                format!("‖x_{}‖ = {n} exceeds x_max = {}", i + 1, inst.x_max),
            );
        }
    }
    for (m, th) in inst.objectives.iter().enumerate() {
        if th.len() != inst.d {
            push(
                format!("objectives[{m}]"),
                th.len() as f64,
                format!("dimension {} != d = {}", th.len(), inst.d),
            );
            continue;
        }
        let n = norm(th);
        if !(n >= inst.l - NORM_TOL && n <= inst.big_l + NORM_TOL) {
            push(
                format!("objectives[{m}]"),
                n,
                format!(
                    "‖θ_{}‖ = {n} outside [l, L] = [{}, {}]",
                    m + 1,
                    inst.l,
                    inst.big_l
                ),
            );
        }
    }
    out
}

// ── Synthetic generator ─────────────────────────────────────────────────────

/// Lower/upper magnitude of the "large" feature band.
pub const BAND: (f64, f64) = (0.75, 1.0);
/// Covariance scale of the anchored Gaussian around each objective.
pub const ANCHOR_COV: f64 = 0.1;

fn with_magnitude<R: Rng + ?Sized>(rng: &mut R, v: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let n = norm(v);
    let target = loop {
        let r = rng.random_range(lo..hi);
        if r > lo {
            break r;
        }
    };
    scale(v, target / n)
}

fn anchored_feature<R: Rng + ?Sized>(rng: &mut R, anchor: &[f64]) -> Vec<f64> {
    let sd = ANCHOR_COV.sqrt();
    loop {
        let v: Vec<f64> = anchor.iter().map(|a| draw_gaussian(rng, *a, sd)).collect();
        if norm(&v) > 0.0 {
            return with_magnitude(rng, &v, BAND.0, BAND.1);
        }
    }
}

fn ball_feature<R: Rng + ?Sized>(rng: &mut R, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    loop {
        let v = draw_uniform_ball(rng, d);
        if norm(&v) > 0.0 {
            return with_magnitude(rng, &v, lo, hi);
        }
    }
}

/// Feature set with M anchored arms, M large free arms and K−2M small arms.
fn layered_features<R: Rng + ?Sized>(rng: &mut R, objectives: &[Vec<f64>], d: usize, k: usize) -> Vec<Vec<f64>> {
    let m = objectives.len();
    let mut features = Vec::with_capacity(k);
    for i in 0..k {
        let x = if i < m {
            anchored_feature(rng, &objectives[i])
        } else if i < 2 * m {
            ball_feature(rng, d, BAND.0, BAND.1)
        } else {
            ball_feature(rng, d, 0.0, BAND.0)
        };
        features.push(x);
    }
    features
}

/// Synthetic instance: objectives uniform on the positive part of the unit
/// sphere; M features anchored on the objectives and M free features with
/// magnitudes in (3/4, 1); the remaining K−2M features with magnitude below 3/4.
pub fn generate_synthetic<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    k: usize,
    m: usize,
    sigma: f64,
) -> Result<Instance> {
    if d == 0 || m == 0 {
        return Err(Error::InvalidConfig("d and M must be at least 1".into()));
    }
    if k <= 2 * m {
        return Err(Error::InvalidConfig(format!(
            "synthetic generator needs K > 2M (got K={k}, M={m})"
        )));
    }
    if !(sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {sigma}")));
    }
    let objectives: Vec<Vec<f64>> = (0..m).map(|_| draw_uniform_sphere(rng, d, true)).collect();
    let features = layered_features(rng, &objectives, d, k);
    Instance::new(features, objectives, sigma)
}

// ── Context samplers ────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContextSampler {
    /// The instance's own features every round.
    Fixed,
    /// K independent uniform draws from the unit ball.
    UniformBall,
    /// K independent uniform draws from the unit sphere.
    UniformSphere,
    /// The synthetic generator's layered construction, redrawn every round.
    AnchoredGaussian,
}

impl ContextSampler {
    pub fn is_fixed(&self) -> bool {
        matches!(self, ContextSampler::Fixed)
    }
}

pub fn sample_context_set<R: Rng + ?Sized>(
    sampler: &ContextSampler,
    inst: &Instance,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    match sampler {
        ContextSampler::Fixed => inst.features.clone(),
        ContextSampler::UniformBall => (0..inst.k).map(|_| draw_uniform_ball(rng, inst.d)).collect(),
        ContextSampler::UniformSphere => (0..inst.k)
            .map(|_| draw_uniform_sphere(rng, inst.d, false))
            .collect(),
        ContextSampler::AnchoredGaussian => layered_features(rng, &inst.objectives, inst.d, inst.k),
    }
}

/// Noisy reward vector: xᵀθ_m + N(0, σ²) per objective.
pub fn sample_reward<R: Rng + ?Sized>(inst: &Instance, x: &[f64], rng: &mut R) -> Vec<f64> {
    inst.objectives
        .iter()
        .map(|th| draw_gaussian(rng, dot(x, th), inst.sigma))
        .collect()
}

// ── Lower-bound family ──────────────────────────────────────────────────────

/// The augmented parameter set Θ: `d` problem instances sharing one feature
/// set. `thetas[j][m]` is θ_{m+1}^{(j+1)}.
#[derive(Clone, Debug, Serialize)]
pub struct LbFamily {
    pub d: usize,
    pub epsilon: f64,
    /// Offset of the second objective in the two-dimensional layout.
    pub epsilon_prime: Option<f64>,
    pub k: f64,
    pub k_prime: f64,
    /// Two-dimensional layout only: k′ solved with ε instead of ε′.
    pub k_prime_alt: Option<f64>,
    pub thetas: Vec<Vec<Vec<f64>>>,
    pub features: Vec<Vec<f64>>,
}

impl LbFamily {
    pub fn n_objectives(&self) -> usize {
        self.thetas[0].len()
    }

    /// Problem instance j (0-based) of the family.
    pub fn instance(&self, j: usize, sigma: f64) -> Instance {
        Instance::new(self.features.clone(), self.thetas[j].clone(), sigma)
            .expect("lower-bound family is well formed")
    }
}

/// Positive root of a·k² + b·k + c = 0 (larger root).
fn larger_root(a: f64, b: f64, c: f64) -> Option<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || !disc.is_finite() {
        return None;
    }
    Some((-b + disc.sqrt()) / (2.0 * a))
}

pub fn build_lowerbound_family(d: usize, epsilon: f64) -> Result<LbFamily> {
    if d < 2 {
        return Err(Error::InvalidConfig(format!("lower-bound family needs d >= 2, got {d}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let df = d as f64;
    let eps = epsilon;
    let no_root = || Error::InvalidConfig(format!("no real scale constant for d={d}, epsilon={eps}"));
    // d·k² + 2εk + ε² − 1 = 0
    let k = larger_root(df, 2.0 * eps, eps * eps - 1.0).ok_or_else(no_root)?;

    if d == 2 {
        let eps_p = (2.0 * eps).min((1.0 + eps) / 2.0);
        let k_p = larger_root(2.0, 2.0 * eps_p, eps_p * eps_p - 1.0).ok_or_else(no_root)?;
        let k_p_alt = larger_root(2.0, 2.0 * eps, eps * eps - 1.0).ok_or_else(no_root)?;
        let thetas = vec![
            vec![vec![k + eps, k], vec![k_p + eps_p, k_p]],
            vec![vec![k, k + eps], vec![k_p, k_p + eps_p]],
        ];
        let features = vec![
            thetas[0][0].clone(),
            thetas[1][0].clone(),
            thetas[0][1].clone(),
            thetas[1][1].clone(),
        ];
        return Ok(LbFamily {
            d,
            epsilon: eps,
            epsilon_prime: Some(eps_p),
            k,
            k_prime: k_p,
            k_prime_alt: Some(k_p_alt),
            thetas,
            features,
        });
    }

    // d·k′² + 2εk′ + 5ε² − 1 = 0
    let k_p = larger_root(df, 2.0 * eps, 5.0 * eps * eps - 1.0).ok_or_else(no_root)?;
    let mut thetas = vec![Vec::with_capacity(d); d];
    for (j, inst) in thetas.iter_mut().enumerate() {
        let mut first = vec![k; d];
        first[j] += eps;
        inst.push(first);
        for m in 1..d {
            let mut th = vec![k_p; d];
            th[j] += 2.0 * eps;
            th[(j + m) % d] -= eps;
            inst.push(th);
        }
    }
    let mut features = Vec::with_capacity(d * d);
    for m in 0..d {
        for inst in &thetas {
            features.push(inst[m].clone());
        }
    }
    Ok(LbFamily {
        d,
        epsilon: eps,
        epsilon_prime: None,
        k,
        k_prime: k_p,
        k_prime_alt: None,
        thetas,
        features,
    })
}

/// ε = √(1 − 1/(1 + ½√(d/T))).
pub fn lowerbound_epsilon(d: usize, t: usize) -> f64 {
    let r = 0.5 * (d as f64 / t as f64).sqrt();
    (1.0 - 1.0 / (1.0 + r)).sqrt()
}

/// Numerical checks of a lower-bound family, written next to it by the CLI.
#[derive(Clone, Debug, Serialize)]
pub struct LbReport {
    pub d: usize,
    pub epsilon: f64,
    pub epsilon_prime: Option<f64>,
    pub k: f64,
    pub k_prime: f64,
    /// Two-dimensional layout: k′ under the reading that uses ε in its
    /// defining equation, and the norm θ₂ would have under that reading.
    pub k_prime_alt: Option<f64>,
    pub alt_reading_theta2_norm: Option<f64>,
    pub max_norm_error: f64,
    /// max |⟨θ₁^{(j)}, θ₁^{(j′)}⟩ − (1 − ε²)| over j ≠ j′.
    pub first_objective_cross_error: f64,
    /// max over j ≠ j* of ⟨θ₁^{(j)}, θ_{m′}^{(j*)}⟩, m′ ≥ 2.
    pub max_cross_first_other: Option<f64>,
    /// max over j ≠ j* and m, m′ ≥ 2 of ⟨θ_m^{(j)}, θ_{m′}^{(j*)}⟩.
    pub max_cross_other_other: Option<f64>,
    /// Effective gap of each arm under instance j* = 1.
    pub effective_gaps_instance_1: Vec<f64>,
    pub violations: Vec<Violation>,
}

pub fn lowerbound_report(fam: &LbFamily) -> LbReport {
    let d = fam.d;
    let eps = fam.epsilon;
    let mut max_norm_error: f64 = 0.0;
    for v in fam.features.iter().chain(fam.thetas.iter().flatten()) {
        max_norm_error = max_norm_error.max((norm(v) - 1.0).abs());
    }
    let mut cross1: f64 = 0.0;
    let mut first_other: Option<f64> = None;
    let mut other_other: Option<f64> = None;
    for j in 0..d {
        for js in 0..d {
            if j == js {
                continue;
            }
            cross1 = cross1.max((dot(&fam.thetas[j][0], &fam.thetas[js][0]) - (1.0 - eps * eps)).abs());
            if d >= 3 {
                for mp in 1..d {
                    let v = dot(&fam.thetas[j][0], &fam.thetas[js][mp]);
                    first_other = Some(first_other.map_or(v, |c| c.max(v)));
                    for m in 1..d {
                        let v = dot(&fam.thetas[j][m], &fam.thetas[js][mp]);
                        other_other = Some(other_other.map_or(v, |c| c.max(v)));
                    }
                }
            }
        }
    }
    let alt_norm = fam.k_prime_alt.zip(fam.epsilon_prime).map(|(kp, ep)| {
        norm(&[kp + ep, kp])
    });
    let inst = fam.instance(0, 0.0);
    let gaps = crate::pareto::all_effective_gaps(&inst.reward_table());
    let mut violations = Vec::new();
    for j in 0..d {
        violations.extend(validate_instance(&fam.instance(j, 0.0)));
    }
    LbReport {
        d,
        epsilon: eps,
        epsilon_prime: fam.epsilon_prime,
        k: fam.k,
        k_prime: fam.k_prime,
        k_prime_alt: fam.k_prime_alt,
        alt_reading_theta2_norm: alt_norm,
        max_norm_error,
        first_objective_cross_error: cross1,
        max_cross_first_other: first_other,
        max_cross_other_other: other_other,
        effective_gaps_instance_1: gaps,
        violations,
    }
}

// ── Tabular ingestion ───────────────────────────────────────────────────────

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TabularSpec {
    pub feature_columns: Vec<String>,
    pub objective_columns: Vec<String>,
    pub noise_sd: f64,
    /// Number of rows kept as arms; all rows when absent.
    #[serde(default)]
    pub k: Option<usize>,
}

/// Column names of the red/white wine quality table used for the
/// three-objective semi-synthetic benchmark.
pub const WINE_FEATURES: [&str; 10] = [
    "fixed acidity",
    "volatile acidity",
    "citric acid",
    "residual sugar",
    "chlorides",
    "free sulfur dioxide",
    "total sulfur dioxide",
    "density",
    "pH",
    "sulphates",
];
pub const WINE_OBJECTIVES: [&str; 3] = ["alcohol", "quality", "red"];

impl TabularSpec {
    pub fn wine(noise_sd: f64, k: Option<usize>) -> Self {
        Self {
            feature_columns: WINE_FEATURES.iter().map(|s| s.to_string()).collect(),
            objective_columns: WINE_OBJECTIVES.iter().map(|s| s.to_string()).collect(),
            noise_sd,
            k,
        }
    }
}

/// Builds an instance from a CSV table: z-scored features rescaled so the
/// largest row norm is 1, objectives fitted by ordinary least squares on the
/// rescaled features, optional uniform row subsample of size K.
pub fn ingest_tabular<R: Read, G: Rng + ?Sized>(
    source: R,
    spec: &TabularSpec,
    rng: &mut G,
) -> Result<Instance> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::Format(format!("CSV header: {e}")))?
        .clone();
    let locate = |name: &String| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name.as_str())
            .ok_or_else(|| Error::Schema(name.clone()))
    };
    let fcols = spec.feature_columns.iter().map(locate).collect::<Result<Vec<_>>>()?;
    let ocols = spec.objective_columns.iter().map(locate).collect::<Result<Vec<_>>>()?;
    if fcols.is_empty() || ocols.is_empty() {
        return Err(Error::InvalidConfig("need at least one feature and one objective column".into()));
    }

    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut ys: Vec<Vec<f64>> = Vec::new();
    for (row_idx, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("CSV row {}: {e}", row_idx + 1)))?;
        let cell = |c: usize, name: &str| -> Result<f64> {
            let raw = rec.get(c).unwrap_or("");
            raw.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                row: row_idx + 1,
                column: name.to_string(),
                value: raw.to_string(),
            })
        };
        xs.push(
            fcols
                .iter()
                .zip(&spec.feature_columns)
                .map(|(&c, n)| cell(c, n))
                .collect::<Result<_>>()?,
        );
        ys.push(
            ocols
                .iter()
                .zip(&spec.objective_columns)
                .map(|(&c, n)| cell(c, n))
                .collect::<Result<_>>()?,
        );
    }
    let n = xs.len();
    let d = fcols.len();
    if n < d + 1 {
        return Err(Error::Rank(format!("need at least d+1 = {} rows, got {n}", d + 1)));
    }

    // z-score each feature column
    for c in 0..d {
        let mean = xs.iter().map(|r| r[c]).sum::<f64>() / n as f64;
        let var = xs.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        if !(sd > 0.0) {
            return Err(Error::Rank(format!(
                "feature column `{}` is constant",
                spec.feature_columns[c]
            )));
        }
        for r in xs.iter_mut() {
            r[c] = (r[c] - mean) / sd;
        }
    }
    let max_norm = xs.iter().map(|r| norm(r)).fold(0.0, f64::max);
    for r in xs.iter_mut() {
        for v in r.iter_mut() {
            *v /= max_norm;
        }
    }

    // OLS per objective on the rescaled features (no intercept: columns are centered)
    let gram = Matrix::outer_sum(d, xs.iter().map(Vec::as_slice));
    let eig = SymEigen::new(&gram)?;
    if eig.min() <= 1e-12 * eig.max_abs() {
        return Err(Error::Rank("feature design matrix is singular".into()));
    }
    let mut objectives = Vec::with_capacity(ocols.len());
    for m in 0..ocols.len() {
        let mut b = vec![0.0; d];
        for (x, y) in xs.iter().zip(&ys) {
            for i in 0..d {
                b[i] += x[i] * y[m];
            }
        }
        objectives.push(least_squares_solve(&gram, &b)?);
    }

    let features = match spec.k {
        Some(k) if k < n => {
            let mut idx = sample_indices(rng, n, k).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| xs[i].clone()).collect()
        }
        Some(k) if k > n => {
            return Err(Error::InvalidConfig(format!("requested K={k} but table has {n} rows")));
        }
        _ => xs,
    };

    let big_l = objectives.iter().map(|t| norm(t)).fold(0.0, f64::max);
    let l = objectives.iter().map(|t| norm(t)).fold(f64::INFINITY, f64::min);
    let mut inst = Instance::new(features, objectives, spec.noise_sd)?;
    inst.l = l;
    inst.big_l = big_l;
    Ok(inst)
}

/// Reward tables a trajectory should be scored against.
pub fn fixed_table_source(inst: &Instance) -> TableSource {
    TableSource::Fixed(inst.reward_table())
}
