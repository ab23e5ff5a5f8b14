use mogro::numerics::{draw_dirichlet, RngStream};
use mogro::pareto::*;
use proptest::prelude::*;
use rand::Rng;

fn table(rows: &[&[f64]]) -> RewardTable {
    RewardTable::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
}

fn random_table(rng: &mut RngStream, k: usize, m: usize) -> RewardTable {
    RewardTable::new((0..k).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect()).unwrap()
}

/// Pairwise domination, written out directly.
fn front_oracle(t: &RewardTable) -> Vec<usize> {
    (0..t.k)
        .filter(|&i| {
            !(0..t.k).any(|j| {
                let ge = (0..t.m).all(|m| t.mu[j][m] >= t.mu[i][m]);
                let gt = (0..t.m).any(|m| t.mu[j][m] > t.mu[i][m]);
                j != i && ge && gt
            })
        })
        .collect()
}

/// max over an arm-simplex grid of min_m (Σ_j w_j μ_jm − μ_im), clipped at 0.
fn gap_grid_oracle(t: &RewardTable, i: usize, steps: usize) -> f64 {
    fn rec(t: &RewardTable, i: usize, steps: usize, left: usize, w: &mut Vec<usize>, best: &mut f64) {
        if w.len() + 1 == t.k {
            w.push(left);
            let v = (0..t.m)
                .map(|m| {
                    (0..t.k).map(|j| w[j] as f64 / steps as f64 * t.mu[j][m]).sum::<f64>() - t.mu[i][m]
                })
                .fold(f64::INFINITY, f64::min);
            *best = best.max(v);
            w.pop();
            return;
        }
        for a in 0..=left {
            w.push(a);
            rec(t, i, steps, left - a, w, best);
            w.pop();
        }
    }
    let mut best = f64::NEG_INFINITY;
    rec(t, i, steps, steps, &mut Vec::new(), &mut best);
    best.max(0.0)
}

// ── Fronts and gaps ─────────────────────────────────────────────────────────

#[test]
fn worked_example_from_the_introduction() {
    let t = table(&[&[1.0, 0.0], &[0.0, 1.0], &[0.3, 0.3]]);
    assert_eq!(pareto_front(&t), vec![0, 1, 2]);
    assert_eq!(effective_pareto_front(&t), vec![0, 1]);
    let g = effective_pareto_gap(&t, 2);
    assert!((g.effective_gap - 0.2).abs() < 1e-12);
    let w = g.witness_weight.unwrap();
    assert!((w[0] - 0.5).abs() < 1e-9 && (w[1] - 0.5).abs() < 1e-9 && w[2].abs() < 1e-9);
    assert_eq!(g.pareto_gap, 0.0);
    assert_eq!(effective_pareto_gap(&t, 0).effective_gap, 0.0);
    assert!((gap_grid_oracle(&t, 2, 1000) - 0.2).abs() < 1e-12);
}

#[test]
fn pareto_gap_examples() {
    let t = table(&[&[1.0, 0.0], &[0.0, 1.0], &[0.3, 0.3], &[0.2, 0.1]]);
    assert!((pareto_gap(&t, 3) - 0.1).abs() < 1e-12);
    let t2 = table(&[&[1.0, 1.0], &[0.0, 0.0]]);
    assert_eq!(pareto_front(&t2), vec![0]);
    assert_eq!(pareto_gap(&t2, 1), 1.0);
    assert_eq!(pareto_gap(&t2, 0), 0.0);
}

#[test]
fn single_arm_is_its_own_front() {
    let t = table(&[&[0.2, -0.4, 0.9]]);
    assert_eq!(pareto_front(&t), vec![0]);
    assert_eq!(effective_pareto_front(&t), vec![0]);
}

#[test]
fn front_matches_pairwise_oracle() {
    let mut rng = RngStream::new(21, 0);
    for _ in 0..500 {
        let t = random_table(&mut rng, 6, 3);
        assert_eq!(pareto_front(&t), front_oracle(&t));
    }
}

#[test]
fn effective_gap_matches_grid_on_small_tables() {
    let mut rng = RngStream::new(22, 0);
    for _ in 0..100 {
        let k = rng.random_range(2..=4);
        let m = rng.random_range(1..=3);
        let t = random_table(&mut rng, k, m);
        for i in 0..k {
            let lp = effective_pareto_gap(&t, i).effective_gap;
            let grid = gap_grid_oracle(&t, i, 120);
            // the grid is a subset of the simplex, so it can only undershoot
            assert!(grid <= lp + 1e-12, "grid {grid} above LP {lp}");
            assert!(lp - grid < 2e-2, "LP {lp} vs grid {grid}");
        }
    }
}

#[test]
fn witness_attains_the_gap() {
    let mut rng = RngStream::new(23, 0);
    for _ in 0..200 {
        let t = random_table(&mut rng, 7, 3);
        for i in 0..t.k {
            let g = effective_pareto_gap(&t, i);
            assert!(g.effective_gap >= g.pareto_gap - 1e-9);
            if let Some(w) = g.witness_weight {
                assert!(is_on_simplex(&w));
                let attained = (0..t.m)
                    .map(|m| (0..t.k).map(|j| w[j] * t.mu[j][m]).sum::<f64>() - t.mu[i][m])
                    .fold(f64::INFINITY, f64::min);
                assert!((attained - g.effective_gap).abs() < 1e-9);
            } else {
                assert!(g.effective_gap <= 1e-9);
            }
        }
    }
}

#[test]
fn adding_an_arm_never_shrinks_a_gap() {
    let mut rng = RngStream::new(24, 0);
    for _ in 0..200 {
        let t = random_table(&mut rng, 5, 2);
        let extra: Vec<f64> = (0..2).map(|_| rng.random::<f64>()).collect();
        let mut rows = t.mu.clone();
        rows.push(extra);
        let bigger = RewardTable::new(rows).unwrap();
        for i in 0..t.k {
            let before = effective_pareto_gap(&t, i).effective_gap;
            let after = effective_pareto_gap(&bigger, i).effective_gap;
            assert!(after >= before - 1e-9);
        }
    }
}

#[test]
fn effective_front_is_inside_the_front() {
    let mut rng = RngStream::new(25, 0);
    for _ in 0..300 {
        let t = random_table(&mut rng, 8, 3);
        let front = pareto_front(&t);
        for i in effective_pareto_front(&t) {
            assert!(front.contains(&i));
        }
    }
}

#[test]
fn unique_weighted_optimum_is_effective_optimal() {
    let mut rng = RngStream::new(26, 0);
    for _ in 0..100 {
        let t = random_table(&mut rng, 8, 3);
        let eff = effective_pareto_front(&t);
        for _ in 0..200 {
            let w = draw_dirichlet(&mut rng, &[1.0; 3]).unwrap();
            let a = weighted_optimum(&t, &w);
            assert_eq!(pareto_gap(&t, a), 0.0);
            let best = t.scalarized(a, &w);
            let runner_up = (0..t.k)
                .filter(|&j| j != a)
                .map(|j| t.scalarized(j, &w))
                .fold(f64::NEG_INFINITY, f64::max);
            if best - runner_up > 1e-9 {
                assert!(eff.contains(&a));
            }
        }
    }
}

#[test]
fn weighted_optimum_examples() {
    let t = table(&[&[1.0, 0.0], &[0.0, 1.0]]);
    assert_eq!(weighted_optimum(&t, &[1.0, 0.0]), 0);
    let t = table(&[&[1.0, 0.0], &[0.0, 1.0], &[0.8, 0.8]]);
    assert_eq!(weighted_optimum(&t, &[0.5, 0.5]), 2);
    let t = table(&[&[0.4, 0.4], &[0.4, 0.4]]);
    assert_eq!(weighted_optimum(&t, &[0.3, 0.7]), 0);
}

// ── Regret ──────────────────────────────────────────────────────────────────

#[test]
fn regret_curve_examples() {
    let c = accumulate_regret(std::iter::repeat_n((0.0, 0.0), 5));
    assert!(c.pr.iter().chain(&c.epr).all(|v| *v == 0.0));
    let c = accumulate_regret(std::iter::repeat_n((0.0, 0.2), 10));
    assert!((c.epr[9] - 2.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn regret_curves_are_ordered(seed in 0u64..1000, k in 2usize..7, m in 1usize..4, t in 1usize..60) {
        let mut rng = RngStream::new(seed, 0);
        let tab = random_table(&mut rng, k, m);
        let gaps: Vec<(f64, f64)> = (0..t)
            .map(|_| {
                let g = effective_pareto_gap(&tab, rng.random_range(0..k));
                (g.pareto_gap, g.effective_gap)
            })
            .collect();
        let c = accumulate_regret(gaps);
        for s in 0..t {
            prop_assert!(c.pr[s] <= c.epr[s] + 1e-9 * (s + 1) as f64);
            if s > 0 {
                prop_assert!(c.pr[s] >= c.pr[s - 1] && c.epr[s] >= c.epr[s - 1]);
            }
        }
    }
}

// ── Fairness ────────────────────────────────────────────────────────────────

#[test]
fn epfi_dominant_arm_is_fully_fair() {
    let t = TableSource::Fixed(table(&[&[1.0, 1.0], &[0.2, 0.3], &[0.0, 0.5]]));
    let arms = vec![0; 50];
    let e = epfi_exact_estimate(&arms, &t, 0.1, 100, &mut RngStream::new(0, 0)).unwrap();
    assert_eq!(e.value, 1.0);
    assert!(e.n_weights >= 100);
    assert_eq!(epfi_ball_proxy(&arms, &t, 0.1), 1.0);
}

#[test]
fn epfi_far_arm_scores_zero() {
    // arm 1 trails arm 0 by 0.5 on the first objective
    let t = TableSource::Fixed(table(&[&[1.0, 0.0], &[0.5, 0.0]]));
    let e = epfi_exact_estimate(&[1; 20], &t, 0.1, 100, &mut RngStream::new(0, 0)).unwrap();
    assert_eq!(e.value, 0.0);
}

#[test]
fn epfi_two_arm_analytic() {
    // μ1 = (0.6, 0.4), μ2 = (0.4, 0.6): arm 1 optimal iff w₁ > 0.5, with
    // weighted gap 0.2·|2w₁ − 1|; at w = (0, 1) that gap is 0.2 ≥ ε.
    let t = TableSource::Fixed(table(&[&[0.6, 0.4], &[0.4, 0.6]]));
    let e = epfi_exact_estimate(&[0; 30], &t, 0.1, 100, &mut RngStream::new(0, 0)).unwrap();
    assert_eq!(e.value, 0.0);
}

#[test]
fn ball_proxy_alternating_front_arms() {
    let t = TableSource::Fixed(table(&[&[1.0, 0.0], &[0.0, 1.0]]));
    let arms: Vec<usize> = (0..40).map(|s| s % 2).collect();
    assert!((epfi_ball_proxy(&arms, &t, 0.1) - 0.5).abs() < 1e-12);
}

#[test]
fn ball_proxy_never_exceeds_exact() {
    let mut rng = RngStream::new(27, 0);
    for _ in 0..100 {
        let k = rng.random_range(2..8);
        let m = rng.random_range(2..=3);
        let t = TableSource::Fixed(random_table(&mut rng, k, m));
        let arms: Vec<usize> = (0..50).map(|_| rng.random_range(0..k)).collect();
        let eps = rng.random_range(0.02..0.3);
        let exact = epfi_exact_estimate(&arms, &t, eps, 100, &mut rng).unwrap().value;
        let proxy = epfi_ball_proxy(&arms, &t, eps);
        assert!(proxy <= exact + 1e-9, "proxy {proxy} > exact {exact}");
        assert!((0.0..=1.0).contains(&exact));
    }
}

#[test]
fn fairness_variance_examples() {
    assert_eq!(pareto_fairness_variance(&[0, 1, 0, 1], &[0, 1]), 0.0);
    assert!((pareto_fairness_variance(&[0; 10], &[0, 1]) - 25.0).abs() < 1e-12);
    let mut rng = RngStream::new(28, 0);
    for _ in 0..50 {
        let arms: Vec<usize> = (0..30).map(|_| rng.random_range(0..5)).collect();
        assert!(pareto_fairness_variance(&arms, &[0, 2, 4]) >= 0.0);
    }
}

// ── Regularity indices ──────────────────────────────────────────────────────

#[test]
fn regularity_point_mass_misses_the_other_objective() {
    let obj = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let dist = WeightDistribution::PointMass { w: vec![1.0, 0.0] };
    let (phi, psi) = regularity_indices(&dist, &obj, 0.1, 10_000, &mut RngStream::new(0, 0)).unwrap();
    assert_eq!(phi, 0.0);
    assert_eq!(psi, 0.0);
}

#[test]
fn regularity_uniform_simplex_closed_form() {
    // ‖θ_w − θ₁‖ = √2·w₂ with w₂ ~ U(0,1): P(< ε) = ε/√2.
    let obj = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let (phi, psi) =
        regularity_indices(&WeightDistribution::uniform(2), &obj, 0.1, 100_000, &mut RngStream::new(1, 0)).unwrap();
    assert!((phi - 0.1 / 2f64.sqrt()).abs() < 0.01, "{phi}");
    assert!(psi <= phi + 1e-12);
}

#[test]
fn regularity_huge_ball_covers_everything() {
    let obj = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
    let (phi, psi) =
        regularity_indices(&WeightDistribution::uniform(3), &obj, 2.0, 10_000, &mut RngStream::new(2, 0)).unwrap();
    assert_eq!((phi, psi), (1.0, 1.0));
}
