//! Structural checks on an instance and the constants of the regret analysis:
//! λ, γ-goodness, the ψ(λ,γ) radius cap, λ_inc variants, q_γ, B and the T₀
//! bound.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{sample_context_set, ContextSampler, Instance};
use crate::numerics::{
    dot, draw_uniform_ball, draw_uniform_sphere, min_eigenvalue, norm, project,
    restricted_min_eigenvalue, restricted_min_eigenvalue_onb, span_basis, spanning_subset, Matrix,
};
use crate::pareto::{regularity_indices, WeightDistribution};

// ── λ and the ψ cap ─────────────────────────────────────────────────────────

fn averaged_outer(objectives: &[Vec<f64>]) -> Matrix {
    let d = objectives[0].len();
    let mut a = Matrix::outer_sum(d, objectives.iter().map(Vec::as_slice));
    for v in a.data.iter_mut() {
        *v /= objectives.len() as f64;
    }
    a
}

/// λ_min((1/M) Σ θ_m θ_mᵀ), floored at zero.
pub fn lambda_of(objectives: &[Vec<f64>]) -> f64 {
    if objectives.is_empty() {
        return 0.0;
    }
    min_eigenvalue(&averaged_outer(objectives)).map_or(0.0, |l| l.max(0.0))
}

/// λ₁: the same quantity restricted to unit directions in span(basis).
pub fn lambda_of_subspace(objectives: &[Vec<f64>], basis: &[Vec<f64>]) -> Result<f64> {
    if objectives.is_empty() {
        return Ok(0.0);
    }
    Ok(restricted_min_eigenvalue(&averaged_outer(objectives), basis)?.max(0.0))
}

/// ψ(λ,γ) = √(λ²/9 − λ⁴/324)·γ − (1 − λ²/18)·√(1−γ²).
pub fn psi_cap(lambda: f64, gamma: f64) -> f64 {
    let l2 = lambda * lambda;
    (l2 / 9.0 - l2 * l2 / 324.0).max(0.0).sqrt() * gamma
        - (1.0 - l2 / 18.0) * (1.0 - gamma * gamma).max(0.0).sqrt()
}

/// Upper bound on ‖x − θ‖ for a unit x that is γ-good for some β in B_α(θ).
pub fn good_arm_distance_bound(alpha: f64, gamma: f64) -> f64 {
    (2.0 + 2.0 * alpha * (1.0 - gamma * gamma).max(0.0).sqrt()
        - 2.0 * gamma * (1.0 - alpha * alpha).max(0.0).sqrt())
    .max(0.0)
    .sqrt()
}

/// Upper bound on ‖θ − x/γ‖ when ‖x‖ ≤ x_max.
pub fn good_arm_distance_bound_xmax(alpha: f64, gamma: f64, x_max: f64) -> f64 {
    let r = x_max / gamma;
    (1.0 + r * r + 2.0 * alpha * (r * r - 1.0).max(0.0).sqrt()
        - 2.0 * (1.0 - alpha * alpha).max(0.0).sqrt())
    .max(0.0)
    .sqrt()
}

// ── λ_inc ───────────────────────────────────────────────────────────────────

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum LambdaIncVariant {
    Base,
    XMax { x_max: f64 },
    #[serde(rename = "lL")]
    LL { l: f64, big_l: f64 },
    /// Base formula evaluated with λ₁ (the caller passes λ₁ as `lambda`).
    Projection,
    Stochastic { q_gamma: f64 },
}

/// Optional inputs needed by some variants.
#[derive(Clone, Debug, Default)]
pub struct VariantExtras {
    pub x_max: Option<f64>,
    pub l: Option<f64>,
    pub big_l: Option<f64>,
    pub q_gamma: Option<f64>,
}

impl LambdaIncVariant {
    pub fn from_name(name: &str, extras: &VariantExtras) -> Result<Self> {
        let need = |v: Option<f64>, what: &str| {
            v.ok_or_else(|| Error::InvalidConfig(format!("variant `{name}` needs {what}")))
        };
        match name {
            "base" => Ok(Self::Base),
            "x_max" => Ok(Self::XMax {
                x_max: need(extras.x_max, "x_max")?,
            }),
            "lL" => Ok(Self::LL {
                l: need(extras.l, "l")?,
                big_l: need(extras.big_l, "L")?,
            }),
            "projection" => Ok(Self::Projection),
            "stochastic" => Ok(Self::Stochastic {
                q_gamma: need(extras.q_gamma, "q_gamma")?,
            }),
            other => Err(Error::InvalidConfig(format!("unknown lambda_inc variant `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Base => "base",
            Self::XMax { .. } => "x_max",
            Self::LL { .. } => "lL",
            Self::Projection => "projection",
            Self::Stochastic { .. } => "stochastic",
        }
    }

    /// γ threshold of the matching goodness assumption and whether it is strict.
    pub fn gamma_threshold(&self, lambda: f64) -> (f64, bool) {
        match self {
            Self::Base | Self::Projection | Self::Stochastic { .. } => (1.0 - lambda * lambda / 18.0, false),
            Self::XMax { x_max } => (
                (x_max / lambda) * (2.0 * (1.0 + lambda * lambda).sqrt() - 2.0).sqrt(),
                true,
            ),
            Self::LL { big_l, .. } => (1.0 - lambda * lambda / (8.0 * big_l.powi(4)), true),
        }
    }
}

/// The bracketed per-round factor of λ_inc (before multiplying by φ·M).
pub fn lambda_inc_bracket(lambda: f64, alpha: f64, gamma: f64, variant: &LambdaIncVariant) -> f64 {
    let sqrt0 = |v: f64| v.max(0.0).sqrt();
    let g2 = gamma * gamma;
    let base = || lambda - 2.0 * good_arm_distance_bound(alpha, gamma);
    match variant {
        LambdaIncVariant::Base | LambdaIncVariant::Projection => base(),
        LambdaIncVariant::Stochastic { q_gamma } => base() * q_gamma,
        LambdaIncVariant::XMax { x_max } => {
            lambda * g2
                - 2.0
                    * x_max
                    * sqrt0(
                        g2 + x_max * x_max + 2.0 * alpha * sqrt0(x_max * x_max - g2)
                            - 2.0 * g2 * sqrt0(1.0 - alpha * alpha),
                    )
        }
        LambdaIncVariant::LL { l, big_l } => {
            lambda / (big_l * big_l)
                - 2.0
                    * sqrt0(
                        2.0 + (2.0 * alpha / l) * sqrt0(1.0 - g2)
                            - 2.0 * gamma * sqrt0(1.0 - alpha * alpha / (l * l)),
                    )
        }
    }
}

/// λ_inc = bracket × φ̂ × M.
pub fn lambda_inc(
    lambda: f64,
    alpha: f64,
    gamma: f64,
    phi_hat: f64,
    m: usize,
    variant: &LambdaIncVariant,
) -> f64 {
    lambda_inc_bracket(lambda, alpha, gamma, variant) * phi_hat * m as f64
}

// ── B and T₀ ────────────────────────────────────────────────────────────────

/// Branch values of B: ((2σ/α)√(2dT ln(dT²)), (16σ²/α²)((d/2)ln(1+2T/d) + ln T)).
pub fn compute_b_branches(sigma: f64, alpha: f64, d: usize, t: usize) -> (f64, f64) {
    let (d, t) = (d as f64, t as f64);
    let b1 = (2.0 * sigma / alpha) * (2.0 * d * t * (d * t * t).ln()).max(0.0).sqrt();
    let b2 = (16.0 * sigma * sigma / (alpha * alpha)) * ((d / 2.0) * (1.0 + 2.0 * t / d).ln() + t.ln());
    (b1, b2)
}

pub fn compute_b(sigma: f64, alpha: f64, d: usize, t: usize) -> f64 {
    let (b1, b2) = compute_b_branches(sigma, alpha, d, t);
    b1.min(b2)
}

/// max(⌊B/λ_S⌋, 1) · |S| with λ_S the minimum eigenvalue of Σ_{i∈S} x_i x_iᵀ
/// restricted to span(S). The floor of one reflects the single mandatory
/// sweep of S.
pub fn t0_bound(b: f64, explore_features: &[Vec<f64>]) -> Result<usize> {
    if explore_features.is_empty() {
        return Err(Error::InvalidConfig("empty exploration set".into()));
    }
    let lam = exploration_lambda(explore_features)?;
    if !(lam > 1e-12) {
        return Err(Error::InvalidConfig("exploration set is rank deficient".into()));
    }
    let sweeps = (b / lam).floor().max(1.0) as usize;
    Ok(sweeps * explore_features.len())
}

// ── Goodness verification ───────────────────────────────────────────────────

#[derive(Clone, Debug, Serialize)]
pub struct GoodnessReport {
    pub lambda: f64,
    pub gamma: f64,
    /// Radius actually tested (after the ψ cap).
    pub alpha: f64,
    pub alpha_input: f64,
    pub alpha_capped: bool,
    pub psi_cap: f64,
    /// γ threshold of the analysis assumption for `variant`.
    pub gamma_threshold: f64,
    pub gamma_threshold_strict: bool,
    /// γ minus the threshold; negative means the assumption is not met.
    pub gamma_margin: f64,
    pub verified: bool,
    pub n_directions_tested: usize,
    pub worst_margin: f64,
    pub q_gamma_hat: Option<f64>,
    pub phi_hat: f64,
    pub variant: String,
    pub lambda_inc_bracket: f64,
    pub lambda_inc: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub horizon: usize,
    #[serde(rename = "T0_bound")]
    pub t0_bound: usize,
    pub exploration_set: Vec<usize>,
    pub feature_rank: usize,
    pub subspace: bool,
}

#[derive(Clone, Debug)]
pub struct GoodnessParams {
    pub gamma: f64,
    pub alpha: f64,
    pub n_directions: usize,
    /// Horizon T used for B.
    pub horizon: usize,
    pub weights: Option<WeightDistribution>,
    pub phi_samples: usize,
}

impl GoodnessParams {
    pub fn new(gamma: f64, alpha: f64, n_directions: usize) -> Self {
        Self {
            gamma,
            alpha,
            n_directions,
            horizon: 1000,
            weights: None,
            phi_samples: 10_000,
        }
    }
}

/// Uniform draw in the α-ball around `center`, restricted to span(onb) when
/// `onb` is a proper subspace basis.
fn ball_point<R: Rng + ?Sized>(rng: &mut R, center: &[f64], alpha: f64, onb: Option<&[Vec<f64>]>) -> Vec<f64> {
    match onb {
        None => {
            let u = draw_uniform_ball(rng, center.len());
            center.iter().zip(&u).map(|(c, x)| c + alpha * x).collect()
        }
        Some(q) => {
            let u = draw_uniform_ball(rng, q.len());
            let mut out = center.to_vec();
            for (coef, qi) in u.iter().zip(q) {
                for (o, v) in out.iter_mut().zip(qi) {
                    *o += alpha * coef * v;
                }
            }
            out
        }
    }
}

/// max_k x_kᵀ β/‖β‖.
pub fn best_margin(features: &[Vec<f64>], beta: &[f64]) -> f64 {
    let n = norm(beta);
    if n == 0.0 {
        return f64::NEG_INFINITY;
    }
    features
        .iter()
        .map(|x| dot(x, beta) / n)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Monte-Carlo worst margin over `n` points per ball B_α(center_m).
pub fn worst_ball_margin<R: Rng + ?Sized>(
    features: &[Vec<f64>],
    centers: &[Vec<f64>],
    alpha: f64,
    n: usize,
    onb: Option<&[Vec<f64>]>,
    rng: &mut R,
) -> f64 {
    let mut worst = f64::INFINITY;
    for c in centers {
        for _ in 0..n {
            let beta = ball_point(rng, c, alpha, onb);
            worst = worst.min(best_margin(features, &beta));
        }
    }
    worst
}

pub fn verify_goodness<R: Rng + ?Sized>(
    inst: &Instance,
    gamma: f64,
    alpha: f64,
    n_directions: usize,
    rng: &mut R,
) -> Result<GoodnessReport> {
    verify_goodness_with(inst, &GoodnessParams::new(gamma, alpha, n_directions), rng)
}

/// γ-goodness check with all derived constants.
///
/// The radius is capped at ψ(λ,γ) when that cap is positive and smaller than
/// the requested α. When ψ(λ,γ) ≤ 0 the requested α is tested unchanged and
/// `gamma_margin` reports how far γ sits below the analysis threshold.
pub fn verify_goodness_with<R: Rng + ?Sized>(
    inst: &Instance,
    p: &GoodnessParams,
    rng: &mut R,
) -> Result<GoodnessReport> {
    if !(p.alpha > 0.0) {
        return Err(Error::InvalidConfig(format!("alpha must be positive, got {}", p.alpha)));
    }
    if !(p.gamma > 0.0 && p.gamma <= 1.0) {
        return Err(Error::InvalidConfig(format!("gamma must lie in (0, 1], got {}", p.gamma)));
    }
    if p.n_directions == 0 {
        return Err(Error::InvalidConfig("n_directions must be positive".into()));
    }
    let onb = span_basis(&inst.features);
    let subspace = onb.len() < inst.d;
    let (lambda, variant, centers) = if subspace {
        let centers: Vec<Vec<f64>> = inst.objectives.iter().map(|t| project(&onb, t)).collect();
        (lambda_of_subspace(&inst.objectives, &onb)?, LambdaIncVariant::Projection, centers)
    } else {
        (lambda_of(&inst.objectives), LambdaIncVariant::Base, inst.objectives.clone())
    };

    let psi = psi_cap(lambda, p.gamma);
    let alpha_capped = psi > 0.0 && p.alpha > psi;
    let alpha = if alpha_capped { psi } else { p.alpha };

    let worst = worst_ball_margin(
        &inst.features,
        &centers,
        alpha,
        p.n_directions,
        subspace.then_some(onb.as_slice()),
        rng,
    );
    let verified = worst >= p.gamma - 1e-12;

    let dist = p
        .weights
        .clone()
        .unwrap_or_else(|| WeightDistribution::uniform(inst.m));
    let (phi_hat, _) = regularity_indices(&dist, &centers, alpha / 2.0, p.phi_samples.max(1), rng)?;
    let bracket = lambda_inc_bracket(lambda, alpha, p.gamma, &variant);
    let (threshold, strict) = variant.gamma_threshold(lambda);

    let b = if inst.sigma > 0.0 {
        compute_b(inst.sigma, alpha, inst.d, p.horizon.max(2))
    } else {
        0.0
    };
    let explore = spanning_subset(&inst.features);
    let explore_feats: Vec<Vec<f64>> = explore.iter().map(|&i| inst.features[i].clone()).collect();
    let t0 = t0_bound(b, &explore_feats)?;

    Ok(GoodnessReport {
        lambda,
        gamma: p.gamma,
        alpha,
        alpha_input: p.alpha,
        alpha_capped,
        psi_cap: psi,
        gamma_threshold: threshold,
        gamma_threshold_strict: strict,
        gamma_margin: p.gamma - threshold,
        verified,
        n_directions_tested: p.n_directions * centers.len(),
        worst_margin: worst,
        q_gamma_hat: None,
        phi_hat,
        variant: variant.name().to_string(),
        lambda_inc_bracket: bracket,
        lambda_inc: bracket * phi_hat * inst.m as f64,
        b,
        horizon: p.horizon,
        t0_bound: t0,
        exploration_set: explore,
        feature_rank: onb.len(),
        subspace,
    })
}

/// Minimum over test directions of the empirical probability that a sampled
/// context set contains an arm with margin ≥ γ. Directions are ±e_j plus
/// uniform random unit vectors, `n_directions` in total.
pub fn estimate_q_gamma<R: Rng + ?Sized>(
    sampler: &ContextSampler,
    inst: &Instance,
    gamma: f64,
    n_rounds: usize,
    n_directions: usize,
    rng: &mut R,
) -> Result<f64> {
    if n_rounds == 0 || n_directions == 0 {
        return Err(Error::InvalidConfig("n_rounds and n_directions must be positive".into()));
    }
    let d = inst.d;
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(n_directions.max(2 * d));
    for j in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[j] = s;
            dirs.push(e);
        }
    }
    while dirs.len() < n_directions {
        dirs.push(draw_uniform_sphere(rng, d, false));
    }
    let mut hits = vec![0usize; dirs.len()];
    for _ in 0..n_rounds {
        let ctx = sample_context_set(sampler, inst, rng);
        for (h, beta) in hits.iter_mut().zip(&dirs) {
            if ctx.iter().any(|x| dot(x, beta) >= gamma) {
                *h += 1;
            }
        }
    }
    Ok(hits.iter().map(|&h| h as f64 / n_rounds as f64).fold(f64::INFINITY, f64::min))
}

/// Restricted λ_min of Σ_{i∈S} x_i x_iᵀ over the span of S.
pub fn exploration_lambda(explore_features: &[Vec<f64>]) -> Result<f64> {
    let d = explore_features[0].len();
    let g = Matrix::outer_sum(d, explore_features.iter().map(Vec::as_slice));
    let onb = span_basis(explore_features);
    restricted_min_eigenvalue_onb(&g, &onb)
}
