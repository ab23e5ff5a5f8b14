//! Arm-selection policies behind one step/observe interface: the MOGRO family
//! (random-weight, round-robin and general-span variants) and the ε-greedy,
//! UCB and Thompson-sampling baselines. Every policy shares the same
//! exploration gate.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    dot, draw_dirichlet, draw_standard_normal_vec, least_squares_with, min_eigenvalue,
    restricted_min_eigenvalue_onb, Matrix, SymEigen,
};
use crate::pareto::{pareto_front, RewardTable};

// ── Configuration ───────────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    MogroRw,
    MogroRr,
    MogroGeneral,
    EpsilonGreedy,
    Ucb,
    Thompson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theoretical {
    Theoretical,
}

/// Eigenvalue threshold B: a number, or `"theoretical"` to derive it from the
/// instance's goodness constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Value(f64),
    Derived(Theoretical),
}

fn default_epsilon() -> f64 {
    0.1
}
fn default_one() -> f64 {
    1.0
}
fn default_ts_samples() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub name: String,
    pub kind: PolicyKind,
    #[serde(rename = "B")]
    pub b: Threshold,
    #[serde(default)]
    pub dirichlet_alpha: Option<Vec<f64>>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_one")]
    pub ucb_beta_scale: f64,
    #[serde(default = "default_one")]
    pub ts_scale: f64,
    #[serde(default = "default_ts_samples")]
    pub ts_samples: usize,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
}

impl PolicyConfig {
    pub fn new(name: &str, kind: PolicyKind, b: f64) -> Self {
        Self {
            name: name.to_string(),
            kind,
            b: Threshold::Value(b),
            dirichlet_alpha: None,
            epsilon: default_epsilon(),
            ucb_beta_scale: 1.0,
            ts_scale: 1.0,
            ts_samples: default_ts_samples(),
            alpha: None,
            gamma: None,
        }
    }

    /// Checks kind-specific fields for an instance with `m` objectives.
    pub fn validate(&self, m: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(format!("policy `{}`: {msg}", self.name)));
        if self.name.trim().is_empty() {
            return Err(Error::InvalidConfig("policy name must not be empty".into()));
        }
        match &self.b {
            Threshold::Value(v) if !(v.is_finite() && *v >= 0.0) => return bad(format!("B must be >= 0, got {v}")),
            Threshold::Derived(_) => {
                if !self.alpha.is_some_and(|a| a > 0.0) {
                    return bad("B = \"theoretical\" needs alpha > 0".into());
                }
                if !self.gamma.is_some_and(|g| g > 0.0 && g <= 1.0) {
                    return bad("B = \"theoretical\" needs gamma in (0, 1]".into());
                }
            }
            _ => {}
        }
        if let Some(a) = &self.dirichlet_alpha {
            if a.len() != m {
                return bad(format!("dirichlet_alpha has {} entries, instance has M = {m}", a.len()));
            }
            if a.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return bad("dirichlet_alpha entries must be positive".into());
            }
        }
        match self.kind {
            PolicyKind::EpsilonGreedy if !(0.0..=1.0).contains(&self.epsilon) => {
                bad(format!("epsilon must lie in [0, 1], got {}", self.epsilon))
            }
            PolicyKind::Ucb if !(self.ucb_beta_scale >= 0.0) => bad("ucb_beta_scale must be >= 0".into()),
            PolicyKind::Thompson if !(self.ts_scale >= 0.0) => bad("ts_scale must be >= 0".into()),
            PolicyKind::Thompson if self.ts_samples == 0 => bad("ts_samples must be >= 1".into()),
            _ => Ok(()),
        }
    }

    fn weight_alpha(&self, m: usize) -> Vec<f64> {
        self.dirichlet_alpha.clone().unwrap_or_else(|| vec![1.0; m])
    }
}

// ── Estimator state ─────────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Exploring,
    Greedy,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Exploring => "exploring",
            Phase::Greedy => "greedy",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EstimatorState {
    pub d: usize,
    pub m: usize,
    pub v: Matrix,
    pub b: Vec<Vec<f64>>,
    pub theta_hat: Vec<Vec<f64>>,
    /// Completed rounds.
    pub t: usize,
    pub explore_set: Vec<usize>,
    pub explore_cursor: usize,
    pub phase: Phase,
    pub threshold: f64,
    /// Orthonormal basis of the feature span when it is a proper subspace and
    /// the gate is restricted to it.
    pub span_basis: Option<Vec<Vec<f64>>>,
    pub fixed_contexts: bool,
    /// Number of exploration rounds, set at the phase transition.
    pub t0: Option<usize>,
    eig: Option<SymEigen>,
}

impl EstimatorState {
    /// `explore_set` is cycled through during exploration with fixed contexts;
    /// with stochastic contexts exploration picks arms uniformly at random.
    pub fn new(
        d: usize,
        m: usize,
        explore_set: Vec<usize>,
        threshold: f64,
        span_basis: Option<Vec<Vec<f64>>>,
        fixed_contexts: bool,
    ) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::InvalidInput("d and M must be positive".into()));
        }
        if fixed_contexts && explore_set.is_empty() {
            return Err(Error::InvalidInput("fixed contexts need a nonempty exploration set".into()));
        }
        let span_basis = span_basis.filter(|b| b.len() < d);
        Ok(Self {
            d,
            m,
            v: Matrix::zeros(d, d),
            b: vec![vec![0.0; d]; m],
            theta_hat: vec![vec![0.0; d]; m],
            t: 0,
            explore_set,
            explore_cursor: 0,
            phase: Phase::Exploring,
            threshold,
            span_basis,
            fixed_contexts,
            t0: None,
            eig: None,
        })
    }

    /// Minimum eigenvalue of V used by the gate (restricted to the feature
    /// span when one is set).
    pub fn gate_eigenvalue(&self) -> Result<f64> {
        match &self.span_basis {
            Some(onb) => restricted_min_eigenvalue_onb(&self.v, onb),
            None => min_eigenvalue(&self.v),
        }
    }

    fn eig(&mut self) -> Result<&SymEigen> {
        if self.eig.is_none() {
            self.eig = Some(SymEigen::new(&self.v)?);
        }
        Ok(self.eig.as_ref().expect("just filled"))
    }

    fn refresh_theta(&mut self) -> Result<()> {
        self.eig()?;
        let eig = self.eig.as_ref().expect("cached");
        for m in 0..self.m {
            self.theta_hat[m] = least_squares_with(&self.v, eig, &self.b[m])?;
        }
        Ok(())
    }

    fn estimated_table(&self, contexts: &[Vec<f64>]) -> RewardTable {
        RewardTable::new(
            contexts
                .iter()
                .map(|x| self.theta_hat.iter().map(|th| dot(x, th)).collect())
                .collect(),
        )
        .expect("finite estimates")
    }
}

/// Per-step record kept in trajectory logs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub phase: Phase,
    pub weight: Option<Vec<f64>>,
    pub target_objective: Option<usize>,
    pub scores: Vec<f64>,
    /// Gate eigenvalue of V_{t−1}.
    pub min_eig: f64,
    /// ε-greedy only: the uniform-random branch was taken.
    pub random_arm: bool,
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

fn check_contexts(state: &EstimatorState, contexts: &[Vec<f64>]) -> Result<()> {
    if contexts.is_empty() {
        return Err(Error::InvalidInput("empty context set".into()));
    }
    if let Some(x) = contexts.iter().find(|x| x.len() != state.d) {
        return Err(Error::InvalidInput(format!(
            "context has dimension {}, expected {}",
            x.len(),
            state.d
        )));
    }
    Ok(())
}

/// One round of arm selection.
pub fn policy_step<R: Rng + ?Sized>(
    state: &mut EstimatorState,
    config: &PolicyConfig,
    contexts: &[Vec<f64>],
    rng: &mut R,
) -> Result<(usize, Diagnostic)> {
    check_contexts(state, contexts)?;
    let k = contexts.len();
    let round = state.t + 1;

    if state.phase == Phase::Exploring {
        let lam = state.gate_eigenvalue()?;
        let well_posed = if state.fixed_contexts {
            state.t >= state.explore_set.len()
        } else {
            lam > 1e-10 * state.v.trace().max(f64::MIN_POSITIVE)
        };
        if lam >= state.threshold && well_posed {
            state.refresh_theta()?;
            state.phase = Phase::Greedy;
            state.t0 = Some(state.t);
        } else {
            let arm = if state.fixed_contexts {
                let a = state.explore_set[state.explore_cursor];
                state.explore_cursor = (state.explore_cursor + 1) % state.explore_set.len();
                a
            } else {
                rng.random_range(0..k)
            };
            if arm >= k {
                return Err(Error::InvalidInput(format!(
                    "exploration arm {arm} out of range for {k} contexts"
                )));
            }
            return Ok((
                arm,
                Diagnostic {
                    phase: Phase::Exploring,
                    weight: None,
                    target_objective: None,
                    scores: Vec::new(),
                    min_eig: lam,
                    random_arm: false,
                },
            ));
        }
    }

    let min_eig = state.gate_eigenvalue()?;
    let mut diag = Diagnostic {
        phase: Phase::Greedy,
        weight: None,
        target_objective: None,
        scores: Vec::new(),
        min_eig,
        random_arm: false,
    };

    let arm = match config.kind {
        PolicyKind::MogroRw | PolicyKind::MogroGeneral => {
            let w = draw_dirichlet(rng, &config.weight_alpha(state.m))?;
            let scores: Vec<f64> = contexts
                .iter()
                .map(|x| w.iter().zip(&state.theta_hat).map(|(wm, th)| wm * dot(x, th)).sum())
                .collect();
            let a = argmax(&scores);
            diag.weight = Some(w);
            diag.scores = scores;
            a
        }
        PolicyKind::MogroRr => {
            let target = (round + state.m - 1) % state.m;
            let scores: Vec<f64> = contexts.iter().map(|x| dot(x, &state.theta_hat[target])).collect();
            let a = argmax(&scores);
            diag.target_objective = Some(target);
            diag.scores = scores;
            a
        }
        PolicyKind::EpsilonGreedy => {
            let u: f64 = rng.random();
            if u < config.epsilon {
                diag.random_arm = true;
                rng.random_range(0..k)
            } else {
                let front = pareto_front(&state.estimated_table(contexts));
                front[rng.random_range(0..front.len())]
            }
        }
        PolicyKind::Ucb => {
            let eig = state.eig()?;
            if !(eig.min() > 0.0) {
                return Err(Error::ContractViolation("UCB step with a singular Gram matrix".into()));
            }
            let radius = config.ucb_beta_scale * ((1.0 + round as f64).ln()).sqrt();
            let bonus: Vec<f64> = contexts.iter().map(|x| radius * eig.pinv_quad(x).max(0.0).sqrt()).collect();
            let table = RewardTable::new(
                contexts
                    .iter()
                    .zip(&bonus)
                    .map(|(x, b)| state.theta_hat.iter().map(|th| dot(x, th) + b).collect())
                    .collect(),
            )?;
            let front = pareto_front(&table);
            front[rng.random_range(0..front.len())]
        }
        PolicyKind::Thompson => {
            let w = draw_dirichlet(rng, &config.weight_alpha(state.m))?;
            let d = state.d;
            let eig = state.eig()?;
            if !(eig.min() > 0.0) {
                return Err(Error::ContractViolation("Thompson step with a singular Gram matrix".into()));
            }
            let root = eig.pinv_sqrt();
            let mut scores = vec![0.0; k];
            for (m, wm) in w.iter().enumerate() {
                let mut best = vec![f64::NEG_INFINITY; k];
                for _ in 0..config.ts_samples {
                    let z = draw_standard_normal_vec(rng, d);
                    let dz = root.matvec(&z);
                    let sample: Vec<f64> = state.theta_hat[m]
                        .iter()
                        .zip(&dz)
                        .map(|(t, e)| t + config.ts_scale * e)
                        .collect();
                    for (b, x) in best.iter_mut().zip(contexts) {
                        *b = b.max(dot(x, &sample));
                    }
                }
                for (s, b) in scores.iter_mut().zip(&best) {
                    *s += wm * b;
                }
            }
            let a = argmax(&scores);
            diag.weight = Some(w);
            diag.scores = scores;
            a
        }
    };
    Ok((arm, diag))
}

/// Records the feedback of a round: V += xxᵀ, b_m += y_m·x, t += 1, and
/// refreshes the estimates in the greedy phase.
pub fn observe(state: &mut EstimatorState, x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != state.d || y.len() != state.m {
        return Err(Error::InvalidInput(format!(
            "observation has |x| = {}, |y| = {}; expected {} and {}",
            x.len(),
            y.len(),
            state.d,
            state.m
        )));
    }
    state.v.add_outer(x, 1.0);
    for (bm, ym) in state.b.iter_mut().zip(y) {
        for (bi, xi) in bm.iter_mut().zip(x) {
            *bi += ym * xi;
        }
    }
    state.t += 1;
    state.eig = None;
    if state.phase == Phase::Greedy {
        state.refresh_theta()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    #[test]
    fn round_robin_exploration_order() {
        let ctx: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0 + i as f64, 0.0]).collect();
        let mut st = EstimatorState::new(2, 1, vec![3, 7], 1.0, None, true).unwrap();
        let cfg = PolicyConfig::new("rw", PolicyKind::MogroRw, 1.0);
        let mut rng = RngStream::new(0, 0);
        let (a, d) = policy_step(&mut st, &cfg, &ctx, &mut rng).unwrap();
        assert_eq!((a, d.phase), (3, Phase::Exploring));
        observe(&mut st, &ctx[a], &[0.0]).unwrap();
        let (a, _) = policy_step(&mut st, &cfg, &ctx, &mut rng).unwrap();
        assert_eq!(a, 7);
    }

    #[test]
    fn round_robin_objective_index() {
        // t = 7, M = 3 → first objective (index 0); t = 3 → third.
        for (round, expect) in [(7usize, 0usize), (3, 2), (1, 0), (2, 1)] {
            assert_eq!((round + 3 - 1) % 3, expect);
        }
    }

    #[test]
    fn threshold_parses_number_or_keyword() {
        let v: Threshold = serde_json::from_str("2.5").unwrap();
        assert_eq!(v, Threshold::Value(2.5));
        let v: Threshold = serde_json::from_str("\"theoretical\"").unwrap();
        assert_eq!(v, Threshold::Derived(Theoretical::Theoretical));
        assert!(serde_json::from_str::<Threshold>("\"bogus\"").is_err());
    }
}
