use mogro::numerics::*;
use proptest::prelude::*;
use rand::{Rng, RngCore};

fn random_psd(rng: &mut RngStream, d: usize, rank: usize) -> Matrix {
    let vs: Vec<Vec<f64>> = (0..rank).map(|_| draw_standard_normal_vec(rng, d)).collect();
    Matrix::outer_sum(d, vs.iter().map(Vec::as_slice))
}

/// Dense Gaussian elimination with partial pivoting; independent of the
/// eigen-based solver under test.
fn gauss_solve(a: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.push(b[i]);
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap())
            .unwrap();
        m.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    (0..n).map(|i| m[i][n] / m[i][i]).collect()
}

#[test]
fn rayleigh_bound_over_dimensions() {
    let mut rng = RngStream::new(11, 0);
    for d in 2..=10 {
        for _ in 0..100 {
            let a = random_psd(&mut rng, d, d + 1);
            let v = draw_uniform_sphere(&mut rng, d, false);
            let q = dot(&v, &a.matvec(&v));
            assert!(min_eigenvalue(&a).unwrap() <= q + 1e-10);
        }
    }
}

#[test]
fn min_eigenvalue_is_superadditive() {
    let mut rng = RngStream::new(12, 0);
    for d in 2..=8 {
        for _ in 0..50 {
            let a = random_psd(&mut rng, d, d);
            let b = random_psd(&mut rng, d, d + 2);
            let mut s = a.clone();
            for i in 0..d {
                for j in 0..d {
                    s.set(i, j, a.get(i, j) + b.get(i, j));
                }
            }
            let lhs = min_eigenvalue(&s).unwrap();
            let rhs = min_eigenvalue(&a).unwrap() + min_eigenvalue(&b).unwrap();
            assert!(lhs >= rhs - 1e-8, "d={d}: {lhs} < {rhs}");
        }
    }
}

#[test]
fn restricted_on_full_basis_matches_plain() {
    let mut rng = RngStream::new(13, 0);
    for d in 2..=7 {
        let a = random_psd(&mut rng, d, d + 3);
        let basis: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let r = restricted_min_eigenvalue(&a, &basis).unwrap();
        assert!((r - min_eigenvalue(&a).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn restricted_sees_only_the_subspace() {
    // diag(4, 9, 0): restricted to span{e1, e2} the minimum is 4, while the
    // full minimum is 0.
    let a = Matrix::diag(&[4.0, 9.0, 0.0]);
    let basis = vec![vec![1.0, 1.0, 0.0], vec![1.0, -1.0, 0.0]];
    assert!((restricted_min_eigenvalue(&a, &basis).unwrap() - 4.0).abs() < 1e-10);
    assert!(min_eigenvalue(&a).unwrap().abs() < 1e-12);
}

#[test]
fn eigenvalues_of_known_spectrum() {
    // Q diag(1, 2, 5) Qᵀ with Q a rotation about the z axis.
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let q = Matrix::from_rows(&[vec![c, -s, 0.0], vec![s, c, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
    let a = q.matmul(&Matrix::diag(&[1.0, 2.0, 5.0])).unwrap().matmul(&q.transpose()).unwrap();
    let eig = SymEigen::new(&a).unwrap();
    assert!((eig.min() - 1.0).abs() < 1e-12);
    assert!((eig.max_abs() - 5.0).abs() < 1e-12);
}

#[test]
fn least_squares_matches_direct_inversion() {
    let mut rng = RngStream::new(14, 0);
    for d in 2..=9 {
        for _ in 0..20 {
            let v = random_psd(&mut rng, d, 2 * d);
            let b = draw_standard_normal_vec(&mut rng, d);
            let got = least_squares_solve(&v, &b).unwrap();
            let want = gauss_solve(&v, &b);
            let err = norm(&sub(&got, &want)) / norm(&want);
            assert!(err < 1e-8, "d={d}: relative error {err}");
        }
    }
}

#[test]
fn least_squares_recovers_noiseless_theta() {
    let theta = [0.3, 0.7];
    let xs = [vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]];
    let mut v = Matrix::zeros(2, 2);
    let mut b = vec![0.0; 2];
    for x in &xs {
        v = gram_update(&v, x).unwrap();
        let y = dot(x, &theta);
        b[0] += y * x[0];
        b[1] += y * x[1];
    }
    let got = least_squares_solve(&v, &b).unwrap();
    assert!((got[0] - 0.3).abs() < 1e-12 && (got[1] - 0.7).abs() < 1e-12);
}

#[test]
fn singular_system_gives_minimum_norm_solution() {
    // V = u uᵀ with u = (1,1)/√2, b = 0.8 u: every solution has θ·u = 0.8,
    // and the minimum-norm one is 0.8 u.
    let u = [std::f64::consts::FRAC_1_SQRT_2; 2];
    let v = Matrix::outer_sum(2, [&u[..]]);
    let got = least_squares_solve(&v, &scale(&u, 0.8)).unwrap();
    for g in &got {
        assert!((g - 0.8 * std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }
}

#[test]
fn sampling_postconditions() {
    let mut rng = RngStream::new(15, 3);
    for d in 1..=6 {
        for _ in 0..500 {
            let s = draw_uniform_sphere(&mut rng, d, false);
            assert!((norm(&s) - 1.0).abs() < 1e-12);
            let p = draw_uniform_sphere(&mut rng, d, true);
            assert!(p.iter().all(|x| *x >= 0.0) && (norm(&p) - 1.0).abs() < 1e-12);
            assert!(norm(&draw_uniform_ball(&mut rng, d)) <= 1.0);
            let alpha: Vec<f64> = (0..d).map(|i| 0.3 + i as f64).collect();
            let w = draw_dirichlet(&mut rng, &alpha).unwrap();
            assert!(w.iter().all(|x| *x >= 0.0) && (w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
    assert_eq!(draw_gaussian(&mut rng, 5.0, 0.0), 5.0);
}

#[test]
fn sphere_first_coordinate_is_centered() {
    let mut rng = RngStream::new(16, 0);
    let n = 100_000;
    let mean = (0..n).map(|_| draw_uniform_sphere(&mut rng, 2, false)[0]).sum::<f64>() / n as f64;
    assert!(mean.abs() < 0.02, "mean {mean}");
}

#[test]
fn dirichlet_moments() {
    // Dirichlet(a): E[w_i] = a_i / Σa, Var[w_i] = a_i(a0 − a_i) / (a0²(a0 + 1)).
    let alpha = [0.5, 1.0, 2.5];
    let a0: f64 = alpha.iter().sum();
    let mut rng = RngStream::new(17, 0);
    let n = 100_000;
    let draws: Vec<Vec<f64>> = (0..n).map(|_| draw_dirichlet(&mut rng, &alpha).unwrap()).collect();
    for (i, a) in alpha.iter().enumerate() {
        let mean = draws.iter().map(|w| w[i]).sum::<f64>() / n as f64;
        let var = draws.iter().map(|w| (w[i] - mean).powi(2)).sum::<f64>() / n as f64;
        let want_var = a * (a0 - a) / (a0 * a0 * (a0 + 1.0));
        assert!((mean - a / a0).abs() < 5.0 * (want_var / n as f64).sqrt() + 1e-4);
        assert!((var - want_var).abs() / want_var < 0.05, "var {var} vs {want_var}");
    }
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let mut a = RngStream::new(99, 4);
    let mut b = RngStream::new(99, 4);
    let mut c = RngStream::new(99, 5);
    let xa: Vec<u64> = (0..64).map(|_| a.next_u64()).collect();
    let xb: Vec<u64> = (0..64).map(|_| b.next_u64()).collect();
    let xc: Vec<u64> = (0..64).map(|_| c.next_u64()).collect();
    assert_eq!(xa, xb);
    assert_ne!(xa, xc);
    let g1: Vec<f64> = (0..8).map(|_| RngStream::new(1, 1).random::<f64>()).collect();
    assert!(g1.windows(2).all(|w| w[0] == w[1]));
}

proptest! {
    #[test]
    fn gram_update_adds_outer_product(xs in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), 1..12)) {
        let mut v = Matrix::zeros(3, 3);
        let mut trace = 0.0;
        for x in &xs {
            v = gram_update(&v, x).unwrap();
            trace += dot(x, x);
        }
        let rebuilt = Matrix::outer_sum(3, xs.iter().map(Vec::as_slice));
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((v.get(i, j) - rebuilt.get(i, j)).abs() < 1e-12);
            }
        }
        prop_assert!((v.trace() - trace).abs() < 1e-12);
        prop_assert!(v.max_asymmetry() == 0.0);
    }

    #[test]
    fn spanning_subset_has_full_rank(seed in 0u64..500, d in 2usize..6, k in 6usize..12) {
        let mut rng = RngStream::new(seed, 0);
        let feats: Vec<Vec<f64>> = (0..k).map(|_| draw_uniform_ball(&mut rng, d)).collect();
        let s = spanning_subset(&feats);
        prop_assert_eq!(s.len(), d);
        let g = Matrix::outer_sum(d, s.iter().map(|&i| feats[i].as_slice()));
        prop_assert!(min_eigenvalue(&g).unwrap() > 1e-10);
    }
}
