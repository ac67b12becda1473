//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured worst-case numbers. Run with
//! `cargo test --test acceptance -- --nocapture` to see the summary lines.

use nalgebra::{DMatrix, DVector};

use sldgeo::catalog::{self, domain_grid};
use sldgeo::estimation::{
    build_filtration, build_local_random_estimator, check_locally_unbiased, cr_gap,
    estimator_moments, filtration_predicted_uvu, mc_quadratic_form, monte_carlo_moments,
    quadratic_form, FiltrationSpec,
};
use sldgeo::operator::pauli::dot_sigma;
use sldgeo::qubit::{self, BlochVector, GeodesicParams};
use sldgeo::rng::{
    random_ball3, random_density, random_hermitian, random_traceless_hermitian, random_unit3,
    random_unitary, StreamRng,
};
use sldgeo::{
    check_e_autoparallel_m_affine, counterexample_dim_ge3, e_covariant_derivative, e_geodesic,
    efficient_function_space_dim, involutivity_check, real_subspace, solve_sld, sym_product,
    torsion, DiscreteEstimator, ParametricModel,
};

fn pass(criterion: u32, name: &str, detail: String) {
    println!("ACCEPTANCE {criterion:02} {name}: PASS ({detail})");
}

/// Closed-form qubit Fisher oracle `I + r r^T / (1 - ||r||^2)`, derived from
/// `g_ij = x_i . ell(x_j)` with coordinate m-reps `x_i = e_i`.
fn bloch_fisher_oracle(r: [f64; 3]) -> DMatrix<f64> {
    let n2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    let mut g = DMatrix::identity(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            g[(i, j)] += r[i] * r[j] / (1.0 - n2);
        }
    }
    g
}

/// A random locally unbiased estimator at `xi` via the randomized
/// construction with the gamma constraint rebalanced onto the first branch.
fn random_unbiased_estimator(
    model: &ParametricModel,
    xi: &[f64],
    rng: &mut StreamRng,
) -> DiscreteEstimator {
    let n = model.param_dim();
    let u = loop {
        let mut u = DMatrix::zeros(n, n);
        for k in 0..n {
            for i in 0..n {
                u[(k, i)] = rng.next_range(-1.0, 1.0);
            }
        }
        let svd = u.clone().svd(false, false);
        let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
        if smin > 0.05 {
            break u;
        }
    };
    let raw: Vec<f64> = (0..n).map(|_| rng.next_range(0.2, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
    let mut gamma = DMatrix::zeros(n, n);
    for k in 0..n {
        for i in 0..n {
            gamma[(k, i)] = xi[i] + rng.next_range(-0.3, 0.3);
        }
    }
    for i in 0..n {
        let mixed: f64 = (0..n).map(|k| probs[k] * gamma[(k, i)]).sum();
        gamma[(0, i)] += (xi[i] - mixed) / probs[0];
    }
    build_local_random_estimator(model, xi, &u, &probs, &gamma).unwrap()
}

fn random_point(model: &ParametricModel, margin: f64, rng: &mut StreamRng) -> Vec<f64> {
    model
        .domain()
        .iter()
        .map(|&(lo, hi)| {
            let pad = margin * (hi - lo);
            rng.next_range(lo + pad, hi - pad)
        })
        .collect()
}

#[test]
fn criterion_01_sld_round_trip_and_qubit_closed_form() {
    let mut rng = StreamRng::new(101);
    let mut worst_rel = 0.0_f64;
    for d in [2usize, 3, 4, 5, 8] {
        for _ in 0..200 {
            let rho = random_density(d, &mut rng);
            let m = random_traceless_hermitian(d, &mut rng);
            let l = solve_sld(&rho, &m).unwrap();
            let back = sym_product(rho.as_operator(), &l).unwrap();
            let rel = back.sub(&m).unwrap().hs_norm() / m.hs_norm();
            worst_rel = worst_rel.max(rel);
            assert!(rel <= 1e-9, "d = {d}: relative residual {rel:.3e}");
        }
    }
    let mut worst_qubit = 0.0_f64;
    for _ in 0..1000 {
        let r = BlochVector::new(random_ball3(0.95, &mut rng)).unwrap();
        let x = random_unit3(&mut rng);
        let rho = qubit::bloch_to_density(&r);
        let numeric = solve_sld(&rho, &dot_sigma(x).scale(0.5)).unwrap();
        let closed = qubit::qubit_sld_operator(&r, x);
        let gap = numeric.sub(&closed).unwrap().hs_norm();
        worst_qubit = worst_qubit.max(gap);
        assert!(gap <= 1e-10, "closed-form gap {gap:.3e}");
    }
    pass(
        1,
        "sld-round-trip",
        format!("1000 solves rel residual <= {worst_rel:.2e}; qubit closed form gap <= {worst_qubit:.2e}"),
    );
}

#[test]
fn criterion_02_fisher_matrix_and_cramer_rao() {
    let mut rng = StreamRng::new(202);
    let bloch = catalog::bloch_full();
    let mut worst_fisher = 0.0_f64;
    for _ in 0..100 {
        let xi = random_point(&bloch, 0.02, &mut rng);
        let g = bloch.fisher_matrix(&xi).unwrap();
        let oracle = bloch_fisher_oracle([xi[0], xi[1], xi[2]]);
        let gap = (g.matrix() - oracle).norm();
        worst_fisher = worst_fisher.max(gap);
        assert!(gap <= 1e-9, "Fisher oracle gap {gap:.3e} at {xi:?}");
    }

    let models: Vec<ParametricModel> = vec![
        catalog::bloch_full(),
        catalog::bloch_ellipsoid(0.3).unwrap(),
        catalog::quasi_exp_diag(3).unwrap(),
    ];
    let mut worst_eig = f64::INFINITY;
    let mut count = 0;
    while count < 200 {
        let model = &models[count % models.len()];
        let xi = random_point(model, 0.1, &mut rng);
        let pi = random_unbiased_estimator(model, &xi, &mut rng);
        let gap = cr_gap(model, &xi, &pi).unwrap();
        let eig = gap.symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        worst_eig = worst_eig.min(min);
        assert!(min >= -1e-9, "CR violated: min eig {min:.3e}");
        count += 1;
    }
    pass(
        2,
        "fisher-cramer-rao",
        format!("Fisher oracle gap <= {worst_fisher:.2e}; 200 estimators min eig(V - G^-1) >= {worst_eig:.2e}"),
    );
}

#[test]
fn criterion_03_randomized_estimator_variance_identity() {
    let mut rng = StreamRng::new(303);
    let model = catalog::bloch_full();
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let n = 3;
        let xi = random_point(&model, 0.1, &mut rng);
        let frame = model.frame(&xi).unwrap();
        let u = loop {
            let mut u = DMatrix::zeros(n, n);
            for k in 0..n {
                for i in 0..n {
                    u[(k, i)] = rng.next_range(-1.0, 1.0);
                }
            }
            let svd = u.clone().svd(false, false);
            if svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min) > 0.05 {
                break u;
            }
        };
        let raw: Vec<f64> = (0..n).map(|_| rng.next_range(0.2, 1.0)).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let mut gamma = DMatrix::zeros(n, n);
        for k in 0..n {
            for i in 0..n {
                gamma[(k, i)] = xi[i] + rng.next_range(-0.4, 0.4);
            }
        }
        for i in 0..n {
            let mixed: f64 = (0..n).map(|k| probs[k] * gamma[(k, i)]).sum();
            gamma[(0, i)] += (xi[i] - mixed) / probs[0];
        }
        let pi = build_local_random_estimator(&model, &xi, &u, &probs, &gamma).unwrap();
        let (_, v) = estimator_moments(&frame.state, &pi, &xi).unwrap();
        for k in 0..n {
            let uk = DVector::from_iterator(n, (0..n).map(|i| u[(k, i)]));
            let lhs = (uk.transpose() * &v * &uk)[(0, 0)];
            let extra: f64 = (0..n)
                .map(|l| {
                    let a: f64 = (0..n).map(|i| u[(k, i)] * (gamma[(l, i)] - xi[i])).sum();
                    probs[l] * a * a
                })
                .sum();
            let rhs = frame.fisher.cr_bound(&uk) / probs[k] + extra;
            let gap = (lhs - rhs).abs();
            worst = worst.max(gap);
            assert!(gap <= 1e-9, "variance identity gap {gap:.3e}");
        }
    }
    pass(
        3,
        "randomized-estimator-identity",
        format!("50 configurations, worst identity gap {worst:.2e}"),
    );
}

#[test]
fn criterion_04_efficient_filtration_sweep() {
    let surface = catalog::bloch_ellipsoid(0.3).unwrap();
    let cert_grid = domain_grid(&surface, 5, 0.1);
    let cert = check_e_autoparallel_m_affine(&surface, &cert_grid, 1e-8).unwrap();
    assert!(cert.verdict);

    let u_basis = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, -0.3, 0.9]);
    let spec = FiltrationSpec::new(
        u_basis.clone(),
        cert.observables,
        vec![0.2, 0.1, 0.05, 0.02, 0.01],
    )
    .unwrap();
    let estimators = build_filtration(&spec).unwrap();
    let u: Vec<f64> = (0..2).map(|i| u_basis[(0, i)]).collect();

    let states = domain_grid(&surface, 5, 0.15);
    assert_eq!(states.len(), 25);
    let mut worst_identity = 0.0_f64;
    let mut worst_sigma = 0.0_f64;
    let mut worst_fit = 0.0_f64;
    let mut seed = 404_u64;
    for xi in &states {
        // the eps -> 0 limit extrapolated from the sweep is the CR bound
        let samples: Vec<(f64, f64)> = spec
            .eps_schedule()
            .iter()
            .zip(&estimators)
            .map(|(eps, pi)| (*eps, quadratic_form(&surface, xi, pi, &u).unwrap()))
            .collect();
        let fitted = sldgeo::estimation::filtration_limit_fit(&samples).unwrap();
        let frame = surface.frame(xi).unwrap();
        let bound = frame.fisher.cr_bound(&DVector::from_column_slice(&u));
        worst_fit = worst_fit.max((fitted - bound).abs());
        assert!((fitted - bound).abs() <= 1e-8);
    }
    for (eps, pi) in spec.eps_schedule().iter().zip(&estimators) {
        for xi in &states {
            assert!(check_locally_unbiased(&surface, xi, pi, 1e-8).unwrap());
            let frame = surface.frame(xi).unwrap();
            let predicted = filtration_predicted_uvu(&frame, &u, *eps);
            let analytic = quadratic_form(&surface, xi, pi, &u).unwrap();
            let gap = (predicted - analytic).abs();
            worst_identity = worst_identity.max(gap);
            assert!(gap <= 1e-8, "eps {eps} xi {xi:?}: identity gap {gap:.3e}");

            let mc = monte_carlo_moments(&frame.state, pi, xi, 100_000, seed).unwrap();
            seed += 1;
            let (sampled, stderr) = mc_quadratic_form(pi, &mc.counts, xi, &u).unwrap();
            let sigmas = (sampled - analytic).abs() / stderr.max(1e-300);
            worst_sigma = worst_sigma.max(sigmas);
            assert!(
                sigmas <= 4.0,
                "eps {eps} xi {xi:?}: Monte-Carlo off by {sigmas:.2} sigma"
            );
        }
    }
    pass(
        4,
        "efficient-filtration",
        format!(
            "5 eps x 25 states: identity gap <= {worst_identity:.2e}; MC within {worst_sigma:.2} sigma at 1e5 shots; limit fit gap <= {worst_fit:.2e}"
        ),
    );
}

#[test]
fn criterion_05_autoparallel_verdicts() {
    let surface = catalog::bloch_ellipsoid(0.3).unwrap();
    let grid = domain_grid(&surface, 15, 0.05);
    assert_eq!(grid.len(), 225);
    let report = check_e_autoparallel_m_affine(&surface, &grid, 1e-8).unwrap();
    assert!(report.verdict);
    assert!(report.max_residual < 1e-8);
    let ellipsoid_residual = report.max_residual;

    let band = catalog::latitude_band(0.7).unwrap();
    let grid = domain_grid(&band, 15, 0.05);
    let negative = check_e_autoparallel_m_affine(&band, &grid, 1e-8).unwrap();
    assert!(!negative.verdict);
    assert!(negative.max_residual > 1e-3);

    let family = catalog::quasi_exp_diag(3).unwrap();
    let grid = domain_grid(&family, 10, 0.05);
    let diag = check_e_autoparallel_m_affine(&family, &grid, 1e-8).unwrap();
    assert!(diag.verdict);
    pass(
        5,
        "autoparallel-verdicts",
        format!(
            "ellipsoid residual {ellipsoid_residual:.2e} (true); band residual {:.2e} (false); diagonal family residual {:.2e} (true)",
            negative.max_residual, diag.max_residual
        ),
    );
}

#[test]
fn criterion_06_torsion_formula_and_qubit_identity() {
    // finite-difference torsion of coordinate fields vs the closed form
    let model = catalog::bloch_full();
    let mut worst_fd = 0.0_f64;
    for xi in [[0.1, -0.2, 0.25], [0.0, 0.3, 0.1], [-0.3, 0.12, -0.18]] {
        let basis = model.tangent_basis(&xi).unwrap();
        for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let wij = e_covariant_derivative(&model, &xi, i, j).unwrap();
            let wji = e_covariant_derivative(&model, &xi, j, i).unwrap();
            // coordinate fields commute, so T = nabla_i d_j - nabla_j d_i
            let fd = wij.m_rep().sub(wji.m_rep()).unwrap();
            let closed = torsion(&basis[i], &basis[j]).unwrap();
            let gap = fd.sub(closed.m_rep()).unwrap().hs_norm();
            worst_fd = worst_fd.max(gap);
            assert!(gap <= 1e-4, "({i},{j}) at {xi:?}: torsion gap {gap:.3e}");
        }
    }

    let mut rng = StreamRng::new(606);
    let mut worst_identity = 0.0_f64;
    for _ in 0..1000 {
        let rho = random_density(2, &mut rng);
        let a = random_hermitian(2, &mut rng);
        let b = random_hermitian(2, &mut rng);
        let res = qubit::qubit_torsion_identity_residual(&rho, &a, &b).unwrap();
        worst_identity = worst_identity.max(res);
        assert!(res <= 1e-12, "qubit torsion identity residual {res:.3e}");
    }
    pass(
        6,
        "torsion",
        format!("FD gap <= {worst_fd:.2e}; qubit identity residual <= {worst_identity:.2e} over 1000 triples"),
    );
}

#[test]
fn criterion_07_involutivity_and_counterexample() {
    let mut rng = StreamRng::new(707);
    // every real-operator subspace is involutive in dimension two
    let mut worst = 0.0_f64;
    for trial in 0..3 {
        let basis_matrix = if trial == 0 {
            DMatrix::identity(2, 2)
        } else {
            random_unitary(2, &mut rng)
        };
        let sub = real_subspace(&basis_matrix).unwrap();
        let states: Vec<_> = (0..50).map(|_| random_density(2, &mut rng)).collect();
        let report = involutivity_check(&sub, &states, 1e-10).unwrap();
        assert!(report.involutive);
        assert!(report.worst_residual < 1e-10);
        worst = worst.max(report.worst_residual);
    }

    // dimension >= 3 counterexample: large residual at eps = 0.05, vanishing
    // as eps -> 0
    let mut at_005 = [0.0_f64; 2];
    for (k, d) in [3usize, 4].iter().enumerate() {
        let res = counterexample_dim_ge3(0.05, *d).unwrap();
        assert!(res > 1e-3, "d = {d}: residual {res:.3e}");
        at_005[k] = res;
    }
    let mut prev = f64::INFINITY;
    for eps in [0.05, 0.02, 0.01, 0.005, 0.001] {
        let res = counterexample_dim_ge3(eps, 3).unwrap();
        assert!(res < prev);
        prev = res;
    }
    assert!(prev < at_005[0] / 10.0, "residual does not vanish with eps");
    pass(
        7,
        "involutivity",
        format!(
            "qubit residual <= {worst:.2e}; counterexample residuals d3 {:.2e}, d4 {:.2e} at eps 0.05, {prev:.2e} at 0.001",
            at_005[0], at_005[1]
        ),
    );
}

#[test]
fn criterion_08_efficient_function_space_dimensions() {
    let mut rng = StreamRng::new(808);
    // full state space: dim E(S) = d^2
    for d in [2usize, 3] {
        let model = catalog::full_state_space(d).unwrap();
        let samples: Vec<Vec<f64>> = (0..5).map(|_| random_point(&model, 0.1, &mut rng)).collect();
        let dim = efficient_function_space_dim(&model, &samples, 1e-8).unwrap();
        assert_eq!(dim, d * d, "full S for d = {d}");
    }
    // certified autoparallel models: n + 1
    let surface = catalog::bloch_ellipsoid(0.3).unwrap();
    let samples = domain_grid(&surface, 3, 0.1);
    assert_eq!(efficient_function_space_dim(&surface, &samples, 1e-8).unwrap(), 3);
    let curve = catalog::bloch_geodesic(0.2, 0.4).unwrap();
    let samples = domain_grid(&curve, 5, 0.1);
    assert_eq!(efficient_function_space_dim(&curve, &samples, 1e-8).unwrap(), 2);
    let family = catalog::quasi_exp_diag(3).unwrap();
    let samples = domain_grid(&family, 3, 0.1);
    assert_eq!(efficient_function_space_dim(&family, &samples, 1e-8).unwrap(), 3);
    // negative control: strictly below n + 1
    let band = catalog::latitude_band(0.7).unwrap();
    let samples = domain_grid(&band, 3, 0.1);
    let dim = efficient_function_space_dim(&band, &samples, 1e-8).unwrap();
    assert!(dim < 3, "band dim E = {dim}");
    pass(
        8,
        "function-space-dimensions",
        format!("full S -> d^2 (d = 2, 3); autoparallel -> n+1; band -> {dim} < 3"),
    );
}

#[test]
fn criterion_09_iid_extension() {
    let mut rng = StreamRng::new(909);
    let model = catalog::bloch_full();
    let mut worst_g = 0.0_f64;
    let mut worst_l = 0.0_f64;
    for n in [2usize, 3] {
        let ext = model.iid_extension(n).unwrap();
        for _ in 0..5 {
            let xi = random_point(&model, 0.1, &mut rng);
            let base = model.frame(&xi).unwrap();
            let frame = ext.frame(&xi).unwrap();
            let g_gap = (frame.fisher.matrix() - base.fisher.matrix() * n as f64).norm();
            worst_g = worst_g.max(g_gap);
            assert!(g_gap <= 1e-9, "N = {n}: Fisher gap {g_gap:.3e}");
            for i in 0..3 {
                let lifted =
                    sldgeo::tensor_power_operator(base.tangents[i].sld(), n).unwrap();
                let l_gap = frame.tangents[i].sld().sub(&lifted).unwrap().hs_norm();
                worst_l = worst_l.max(l_gap);
                assert!(l_gap <= 1e-8, "N = {n}: SLD lift gap {l_gap:.3e}");
            }
        }
    }

    // verdicts survive extension
    let surface = catalog::bloch_ellipsoid(0.3).unwrap();
    let grid = domain_grid(&surface, 4, 0.15);
    let before = check_e_autoparallel_m_affine(&surface, &grid, 1e-7).unwrap();
    let after =
        check_e_autoparallel_m_affine(&surface.iid_extension(2).unwrap(), &grid, 1e-7).unwrap();
    assert!(before.verdict && after.verdict);
    let band = catalog::latitude_band(0.7).unwrap();
    let grid = domain_grid(&band, 4, 0.15);
    let before = check_e_autoparallel_m_affine(&band, &grid, 1e-7).unwrap();
    let after =
        check_e_autoparallel_m_affine(&band.iid_extension(2).unwrap(), &grid, 1e-7).unwrap();
    assert!(!before.verdict && !after.verdict);
    pass(
        9,
        "iid-extension",
        format!("Fisher gap <= {worst_g:.2e}; SLD lift gap <= {worst_l:.2e}; verdicts preserved"),
    );
}

#[test]
fn criterion_10_geodesic_cross_check() {
    let mut rng = StreamRng::new(1010);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let r0 = BlochVector::new(random_ball3(0.9, &mut rng)).unwrap();
        let u = random_unit3(&mut rng);
        let params = GeodesicParams::from_anchor(&r0, u).unwrap();
        let rho0 = qubit::bloch_to_density(&r0);
        let f = dot_sigma(params.u());
        for step in 0..101 {
            let xi = -0.98 + 1.96 * step as f64 / 100.0;
            let theta = params.theta_of_xi(xi);
            let via_exp = e_geodesic(&rho0, &f, theta).unwrap();
            let on_curve =
                qubit::bloch_to_density(&qubit::qubit_geodesic_point(&params, xi).unwrap());
            let gap = (via_exp.matrix() - on_curve.matrix()).norm();
            worst = worst.max(gap);
            assert!(gap <= 1e-9, "xi {xi}: geodesic gap {gap:.3e}");
        }
    }
    pass(
        10,
        "geodesic-cross-check",
        format!("20 random (r0, u) x 101 points, worst gap {worst:.2e}"),
    );
}
