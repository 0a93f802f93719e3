use super::*;
use crate::model::Parameters;
use crate::numeric::{lin_space, log_space};
use crate::oracle::brute_force_g;
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

fn trap() -> Model {
    Model::new(Parameters::trap_baseline()).unwrap()
}

fn growth() -> Model {
    Model::new(Parameters::growth_baseline()).unwrap()
}

fn no_wage(m: &Model) -> Model {
    m.with_params(Parameters { a_e: 0.0, ..*m.params() }).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

#[test]
fn f_examples() {
    let m = trap();
    let f = eval_f(&m, 2.0).unwrap();
    assert!((f.value - 2.0).abs() < 1e-12);
    assert!((f.k_c - 1.0).abs() < 1e-12 && (f.h - 1.0).abs() < 1e-12);
    assert_eq!(eval_f(&m, 0.0).unwrap().value, 0.0);
    assert!((eval_f(&m, 0.5).unwrap().value - 1.0).abs() < 1e-12);
    assert!(eval_f(&m, -1.0).is_err());
}

#[test]
fn f_prime_examples() {
    let m = trap();
    assert!((f_prime(&m, 2.0).unwrap() - 0.5).abs() < 1e-12);
    assert!((f_prime(&m, 0.5).unwrap() - 1.0).abs() < 1e-12);
    assert!((f_prime(&no_wage(&m), 1.0).unwrap() - 0.5).abs() < 1e-12);
    assert!(f_prime(&m, 0.0).is_err());
}

#[test]
fn f_prime_matches_central_difference() {
    for m in [trap(), trap().with_params(Parameters { alpha_h: 0.3, ..Parameters::trap_baseline() }).unwrap()] {
        for s in log_space(1e-2, 1e2, 25) {
            let h = 1e-5 * s;
            let fd = (eval_f(&m, s + h).unwrap().value - eval_f(&m, s - h).unwrap().value) / (2.0 * h);
            let fp = f_prime(&m, s).unwrap();
            assert!(close(fp, fd, 1e-6), "S={s}: {fp} vs {fd}");
        }
    }
}

#[test]
fn f_is_concave_with_inada() {
    let m = trap();
    let grid = lin_space(0.01, 10.0, 200);
    let v: Vec<f64> = grid.iter().map(|&s| eval_f(&m, s).unwrap().value).collect();
    assert!(v.windows(2).all(|w| w[1] > w[0]));
    assert!(v.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] < 0.0));
    let quotients: Vec<f64> = [1e-2, 1e-4, 1e-6, 1e-8]
        .iter()
        .map(|&s| eval_f(&m, s).unwrap().value / s)
        .collect();
    assert!(quotients.windows(2).all(|w| w[1] > 5.0 * w[0]));
}

#[test]
fn f_bisection_agrees_with_closed_form() {
    // Nudging alpha_h off alpha switches to the bisection path; the limit
    // must agree with the closed form.
    let m = trap();
    let nudged = m
        .with_params(Parameters { alpha_h: 0.5 - 1e-9, ..*m.params() })
        .unwrap();
    for s in [0.1, 1.0, 2.0, 30.0] {
        let exact = eval_f(&m, s).unwrap();
        let num = eval_f(&nudged, s).unwrap();
        assert!(close(num.value, exact.value, 1e-7), "S={s}");
        assert!((num.h - exact.h).abs() < 1e-6 * s);
    }
}

#[test]
fn g1_examples() {
    let m = growth();
    let n1 = m.derived().n1;
    assert!((n1 - 0.1f64.powf(1.0 / 0.6)).abs() < 1e-15);
    assert!((m.derived().x1 - 0.021724).abs() < 1e-5);

    let empty = eval_g1(&m, 0.01).unwrap();
    assert_eq!(empty.value, 0.0);
    assert_eq!(empty.branch, G1Branch::Empty);

    let corner = eval_g1(&m, 0.0216).unwrap();
    assert_eq!(corner.branch, G1Branch::Corner);
    assert_eq!(corner.n, n1);
    assert!(close(corner.value, (0.0216 - n1).sqrt(), 1e-12));

    let interior = eval_g1(&m, 1.0).unwrap();
    assert_eq!(interior.branch, G1Branch::Interior);
    assert!(rd_condition_residual(&m, 1.0, interior.n).abs() < 1e-9);
    // Brute force over the R&D spend.
    let p = m.params();
    let best = lin_space(n1, 1.0, 200_001)
        .into_iter()
        .map(|n| {
            let tfp = p.a_c + p.a * (p.b * n.powf(p.sigma) - p.x_bar);
            tfp * (1.0 - n).powf(p.alpha)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(close(interior.value, best, 1e-4), "{} vs {best}", interior.value);
    assert!(interior.value >= best);
    assert!(eval_g1(&m, -1.0).is_err());
}

#[test]
fn g1_prime_matches_central_difference() {
    let m = growth();
    for x in [0.0217, 0.05, 1.0, 40.0] {
        let h = 1e-7 * x;
        let fd = (eval_g1(&m, x + h).unwrap().value - eval_g1(&m, x - h).unwrap().value) / (2.0 * h);
        let d = g1_prime(&m, &eval_g1(&m, x).unwrap());
        assert!(close(d, fd, 1e-5), "x={x}: {d} vs {fd}");
    }
}

#[test]
fn g0_infeasible_below_minimal_rd() {
    let m = growth();
    assert!(eval_g0(&m, 0.5 * m.derived().n1).unwrap().is_none());
    assert!(eval_g0(&m, m.derived().n1).unwrap().is_some());
    assert!(eval_g0(&m, -1.0).is_err());
}

/// Exhaustive grid over the simplex restricted to `b N^sigma >= x_bar`.
fn constrained_grid_max(m: &Model, s: f64, n: usize) -> f64 {
    let p = m.params();
    let step = s / n as f64;
    let mut best = f64::NEG_INFINITY;
    for j in 0..=n {
        let rd = j as f64 * step;
        if p.b * rd.powf(p.sigma) < p.x_bar {
            continue;
        }
        for i in 0..=(n - j) {
            let x = i as f64 * step;
            let h = (s - rd - x).max(0.0);
            best = best.max(m.g(x / p.p, rd, h).unwrap());
        }
    }
    best
}

#[test]
fn g0_matches_constrained_brute_force() {
    let m = growth();
    let g0 = eval_g0(&m, 1.0).unwrap().unwrap();
    let oracle = constrained_grid_max(&m, 1.0, 1000);
    assert!(close(g0.value, oracle, 1e-3), "{} vs {oracle}", g0.value);
    assert!(g0.value >= oracle * (1.0 - 1e-12));
}

#[test]
fn g0_without_wage_is_g1() {
    let m = no_wage(&growth());
    for s in [0.03, 1.0, 17.0] {
        let g0 = eval_g0(&m, s).unwrap().unwrap();
        assert_eq!(g0.value, eval_g1(&m, s).unwrap().value);
        assert_eq!(g0.allocation.h, 0.0);
    }
}

#[test]
fn g0_derivative_matches_central_difference() {
    let m = growth();
    for s in [0.05, 1.0, 100.0, 1e5] {
        let h = 1e-6 * s;
        let up = eval_g0(&m, s + h).unwrap().unwrap().value;
        let down = eval_g0(&m, s - h).unwrap().unwrap().value;
        let d = eval_g0(&m, s).unwrap().unwrap().derivative;
        assert!(close(d, (up - down) / (2.0 * h), 1e-4), "S={s}");
    }
}

#[test]
fn eval_g_examples() {
    let t = eval_g(&trap(), 2.0).unwrap();
    assert!((t.g_val - 2.0).abs() < 1e-12);
    assert_eq!(t.g_val, t.f_val);
    assert_eq!(t.regime, Regime::NoRd);
    assert_eq!(t.allocation.n, 0.0);

    let zero = eval_g(&trap(), 0.0).unwrap();
    assert_eq!(zero.g_val, 0.0);
    assert!(zero.g0_val.is_none() && zero.f_prime.is_none());

    let g = eval_g(&growth(), 100.0).unwrap();
    assert_eq!(g.regime, Regime::Rd);
    assert!(g.g_val > g.f_val);
    assert!(rd_lower_bound_check(&growth(), 100.0).unwrap());
}

#[test]
fn eval_g_record_is_consistent() {
    for m in [trap(), growth()] {
        for s in log_space(1e-3, 1e3, 30) {
            let e = eval_g(&m, s).unwrap();
            assert_eq!(e.g_val, e.f_val.max(e.g0_val.unwrap_or(f64::NEG_INFINITY)));
            assert!(e.g_val >= e.f_val);
            if let Some(g0) = e.g0_val {
                assert!(g0 <= e.g_val);
            }
        }
    }
}

#[test]
fn allocate_examples() {
    let m = trap();
    let a = allocate(&m, 1.0).unwrap();
    let f = eval_f(&m, 1.0).unwrap();
    assert_eq!(a.n, 0.0);
    assert_eq!((a.k_c, a.h), (f.k_c, f.h));

    let z = allocate(&m, 0.0).unwrap();
    assert_eq!((z.k_c, z.n, z.h, z.value), (0.0, 0.0, 0.0, 0.0));

    let g = growth();
    let a = allocate(&g, 10.0).unwrap();
    assert!(a.n > 0.0 && a.rd_active);
    let oracle = brute_force_g(&g, 10.0, 800).unwrap();
    assert!(close(a.value, oracle.value, 1e-3));
}

#[test]
fn s_star_examples() {
    let m = growth();
    let s_star = find_s_star(&m).unwrap();
    let gap = |s: f64| eval_g0(&m, s).unwrap().unwrap().value - eval_f(&m, s).unwrap().value;
    assert!(gap(s_star).abs() < 1e-8);
    assert!(gap(0.9 * s_star) < 0.0 && gap(1.1 * s_star) > 0.0);
    let p = m.params();
    assert!(p.b * s_star.powf(p.sigma) > p.x_bar);

    let half = eval_g(&m, 0.5 * s_star).unwrap();
    assert_eq!(half.regime, Regime::NoRd);
    assert_eq!(half.g_val, half.f_val);

    let richer = m.with_params(Parameters { a: 100.0, ..*p }).unwrap();
    assert!(find_s_star(&richer).unwrap() < s_star);

    let drs = Model::new(Parameters::drs_baseline()).unwrap();
    assert!(matches!(find_s_star(&drs), Err(crate::ModelError::Precondition(_))));
}

#[test]
fn s_star_for_the_trap_economy() {
    // Increasing returns hold, so the threshold exists even though the
    // economy never reaches it.
    let m = trap();
    let s_star = find_s_star(&m).unwrap();
    assert!(s_star > 2.0);
    assert_eq!(allocate(&m, 0.99 * s_star).unwrap().n, 0.0);
    assert!(allocate(&m, 1.01 * s_star).unwrap().n > 0.0);
}

#[test]
fn gamma_examples() {
    let m = growth();
    let gamma = gamma_bound(&m);
    let p = *m.params();
    assert!(gamma_bound(&m.with_params(Parameters { a: 100.0, ..p }).unwrap()) > gamma);
    assert!(gamma_bound(&m.with_params(Parameters { b: 40.0, ..p }).unwrap()) > gamma);
    // Recorded after the first evaluation of the closed form.
    assert!((gamma - 45.7).abs() < 0.1, "Gamma = {gamma}");
    assert!(p.beta * gamma > 1.0);
}

#[test]
fn asymptotic_share_examples() {
    let (c, n, h) = asymptotic_shares(&growth()).unwrap();
    assert!((c - 5.0 / 11.0).abs() < 1e-15 && (n - 6.0 / 11.0).abs() < 1e-15 && h == 0.0);
    let sym = growth()
        .with_params(Parameters { sigma: 0.5, ..Parameters::growth_baseline() })
        .unwrap();
    assert_eq!(asymptotic_shares(&sym).unwrap(), (0.5, 0.5, 0.0));
    let drs = Model::new(Parameters::drs_baseline()).unwrap();
    assert!(asymptotic_shares(&drs).is_err());

    let a = allocate(&growth(), 1e4).unwrap();
    assert!((a.theta_c - c).abs() < 5e-2 && (a.theta_n - n).abs() < 5e-2 && a.theta_h < 5e-2);
}

#[test]
fn rd_lower_bound_cases() {
    assert!(rd_lower_bound_check(&growth(), 100.0).unwrap());
    // Just past feasibility of a weak research sector the capital term
    // vanishes.
    let weak = Parameters { a: 0.5 + 1e-3, b: 0.5, ..Parameters::trap_baseline() };
    let m = Model::new(weak).unwrap();
    let s = m.derived().n1 * (1.0 + 1e-6);
    assert!(!rd_lower_bound_check(&m, s).unwrap());
    assert!(matches!(rd_lower_bound_check(&m, 0.5 * m.derived().n1), Err(crate::ModelError::Precondition(_))));
}

#[test]
fn rd_lower_bound_implies_oracle_rd() {
    let m = growth();
    for s in [0.5, 3.0, 50.0] {
        if rd_lower_bound_check(&m, s).unwrap() {
            assert!(allocate(&m, s).unwrap().n > 0.0);
            assert!(brute_force_g(&m, s, 400).unwrap().n > 0.0);
        }
    }
}

#[test]
fn dini_examples() {
    let m = trap();
    let f = |s: f64| Ok(eval_f(&m, s)?.value);
    for side in [Side::Plus, Side::Minus] {
        assert!((numeric_dini(f, 2.0, side).unwrap().value - 0.5).abs() < 1e-4);
    }
    let g = growth();
    let s_star = find_s_star(&g).unwrap();
    let gv = |s: f64| g_value(&g, s);
    let right = numeric_dini(gv, s_star, Side::Plus).unwrap().value;
    let left = numeric_dini(gv, s_star, Side::Minus).unwrap().value;
    assert!(right > left, "{right} vs {left}");
    assert!(close(left, f_prime(&g, s_star).unwrap(), 1e-3));

    let lin = |s: f64| Ok(3.0 * s);
    for side in [Side::Plus, Side::Minus] {
        assert!((numeric_dini(lin, 2.0, side).unwrap().value - 3.0).abs() < 1e-9);
    }
    assert!(numeric_dini(lin, 0.0, Side::Plus).is_err());
    assert!(numeric_dini(|_| Ok(f64::NAN), 1.0, Side::Plus).is_err());
}

#[test]
fn threshold_dichotomy() {
    let m = growth();
    let s_star = find_s_star(&m).unwrap();
    for s in log_space(1e-3, 1e3, 200) {
        if (s - s_star).abs() < 1e-6 {
            continue;
        }
        let rd = eval_g(&m, s).unwrap().regime == Regime::Rd;
        assert_eq!(rd, s > s_star, "S={s}");
    }
}

#[test]
fn g_is_nondecreasing() {
    for m in [trap(), growth()] {
        let v: Vec<f64> = log_space(1e-4, 1e4, 400)
            .into_iter()
            .map(|s| g_value(&m, s).unwrap())
            .collect();
        assert!(v.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn g0_minus_f_is_increasing() {
    let m = growth();
    let n1 = m.derived().n1;
    let gaps: Vec<f64> = log_space(n1 * 1.001, 1e3, 100)
        .into_iter()
        .map(|s| eval_g0(&m, s).unwrap().unwrap().value - eval_f(&m, s).unwrap().value)
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn random_feasible_points_never_beat_g() {
    let mut rng = StdRng::seed_from_u64(7);
    for m in [trap(), growth()] {
        let price = m.params().p;
        for s in [0.05, 1.0, 10.0] {
            let g = g_value(&m, s).unwrap();
            for _ in 0..1000 {
                let (u, v): (f64, f64) = (rng.gen(), rng.gen());
                let (lo, hi) = (u.min(v), u.max(v));
                let value = m.g(lo * s / price, (hi - lo) * s, (1.0 - hi) * s).unwrap();
                assert!(value <= g * (1.0 + 1e-12), "S={s}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn allocations_exhaust_the_budget(ln_s in -6.0f64..8.0, growth_case in any::<bool>()) {
        let m = if growth_case { growth() } else { trap() };
        let s = ln_s.exp();
        let a = allocate(&m, s).unwrap();
        let p = m.params();
        prop_assert!((a.spending(p.p) - s).abs() <= 1e-8 * s);
        prop_assert!((a.theta_c + a.theta_n + a.theta_h - 1.0).abs() <= 1e-8);
        for share in [a.theta_c, a.theta_n, a.theta_h] {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&share));
        }
        if a.rd_active {
            prop_assert!(a.n >= m.derived().n1);
        }
        prop_assert!((a.value - g_value(&m, s).unwrap()).abs() <= 1e-12 * a.value);
    }

    #[test]
    fn no_rd_below_the_fixed_cost(
        a in 0.6f64..60.0,
        b in 0.05f64..30.0,
        x_bar in 0.5f64..4.0,
        frac in 0.01f64..1.0,
    ) {
        let params = Parameters { a, b, x_bar, ..Parameters::trap_baseline() };
        prop_assume!(params.validate().is_ok());
        let m = Model::new(params).unwrap();
        // Largest S with b S^sigma <= x_bar, scaled down.
        let s = frac * (x_bar / b).powf(1.0 / params.sigma);
        prop_assert_eq!(allocate(&m, s).unwrap().n, 0.0);
    }
}
