//! Steady states of the no-R&D dynamics and the regime classifier.

use crate::error::{numerical, Result};
use crate::model::{Model, Parameters};
use crate::numeric::bisect;
use crate::technology::{eval_f, f_prime, find_s_star, gamma_bound};

/// Conditions that feed the regime classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimeFlags {
    /// `alpha + sigma >= 1`.
    pub assumption_irs: bool,
    /// `alpha_h + 1/alpha >= 2`.
    pub curvature: bool,
    /// `beta * min(F'(S*), Gamma) > 1`.
    pub growth_cond: bool,
    /// `X_0 <= x*` and `b x*^sigma <= x_bar`.
    pub trap_cond: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateReport {
    /// Autarky steady state.
    pub s_a: f64,
    /// Steady state with FDI and no R&D.
    pub s_b: f64,
    /// Positive fixed point of `F`.
    pub x_star: f64,
    /// `max(X_0, x*)`, the bound on savings without R&D.
    pub s_bar: f64,
    /// Takeoff threshold; `None` under decreasing returns or when no sign
    /// change is found.
    pub s_star: Option<f64>,
    /// `F'(S*)`.
    pub f_prime_s_star: Option<f64>,
    pub gamma: f64,
    pub flags: RegimeFlags,
}

/// Steady state of the closed economy.
pub fn steady_autarky(params: &Parameters) -> f64 {
    let al = params.alpha;
    (al * params.beta * params.a_c / params.p.powf(al)).powf(1.0 / (1.0 - al))
}

/// Closed form of the no-R&D steady state when `alpha == alpha_h`.
pub fn steady_fdi_no_rd_closed_form(model: &Model) -> Option<f64> {
    let p = model.params();
    model
        .derived()
        .composite_tfp
        .map(|tfp| (p.alpha * p.beta * tfp).powf(1.0 / (1.0 - p.alpha)))
}

/// Brackets the sign change of a function that is positive near zero and
/// negative for large arguments.
fn bracket_decreasing<F>(mut f: F, what: &str) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (1.0, 1.0);
    while f(lo)? <= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(numerical(format!("{what}: no positive value near zero")));
        }
    }
    while f(hi)? > 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(numerical(format!("{what}: no sign change below 1e300")));
        }
    }
    Ok((lo, hi))
}

fn root_decreasing<F>(f: F, what: &str) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (lo, hi) = bracket_decreasing(&f, what)?;
    if lo == hi {
        return Ok(lo);
    }
    let mut err = None;
    let root = bisect(
        |s| {
            f(s).unwrap_or_else(|e| {
                err.get_or_insert(e);
                f64::NAN
            })
        },
        lo.min(hi),
        lo.max(hi),
    );
    match err {
        Some(e) => Err(e),
        None => root,
    }
}

/// Root of `beta F'(S) = 1`.
pub fn steady_fdi_no_rd(model: &Model) -> Result<f64> {
    let beta = model.params().beta;
    root_decreasing(|s| Ok(beta * f_prime(model, s)? - 1.0), "beta F'(S) = 1")
}

/// Positive root of `F(x) = x`.
pub fn fixed_point_xstar(model: &Model) -> Result<f64> {
    root_decreasing(|x| Ok(eval_f(model, x)?.value / x - 1.0), "F(x) = x")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DynamicRegime {
    Trap,
    SustainedGrowth,
    DrsConvergence,
    Indeterminate,
}

impl DynamicRegime {
    pub fn label(&self) -> &'static str {
        match self {
            DynamicRegime::Trap => "Trap",
            DynamicRegime::SustainedGrowth => "SustainedGrowth",
            DynamicRegime::DrsConvergence => "DRSConvergence",
            DynamicRegime::Indeterminate => "Indeterminate",
        }
    }
}

/// Names of the classifier inequalities, in the order they are reported.
pub const EVIDENCE_NAMES: [&str; 6] = [
    "x0_le_xstar",
    "b_xstar_sigma_le_xbar",
    "alpha_plus_sigma_ge_1",
    "alpha_h_plus_inv_alpha_ge_2",
    "beta_min_fprime_gamma_gt_1",
    "x0_lt_s_b",
];

/// One evaluated inequality `lhs <op> rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inequality {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Inequality {
    fn le(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Self { name, lhs, rhs, holds: lhs <= rhs }
    }
    fn ge(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Self { name, lhs, rhs, holds: lhs >= rhs }
    }
    fn lt(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Self { name, lhs, rhs, holds: lhs < rhs }
    }
    fn gt(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Self { name, lhs, rhs, holds: lhs > rhs }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub regime: DynamicRegime,
    pub evidence: Vec<Inequality>,
    pub report: SteadyStateReport,
}

impl Classification {
    pub fn evidence(&self, name: &str) -> Option<&Inequality> {
        self.evidence.iter().find(|e| e.name == name)
    }
}

/// Steady states, thresholds and the inequalities behind the classifier.
pub fn steady_state_report(model: &Model) -> Result<SteadyStateReport> {
    Ok(classify_with_evidence(model)?.report)
}

/// Classifies the long-run behavior. Trap takes precedence, then sustained
/// growth, then decreasing-returns convergence.
pub fn classify_regime(model: &Model) -> Result<Classification> {
    classify_with_evidence(model)
}

fn classify_with_evidence(model: &Model) -> Result<Classification> {
    let p = model.params();
    let s_a = steady_autarky(p);
    let s_b = steady_fdi_no_rd(model)?;
    let x_star = fixed_point_xstar(model)?;
    let gamma = gamma_bound(model);
    let irs = p.alpha + p.sigma >= 1.0;
    let s_star = if irs { find_s_star(model).ok() } else { None };
    let f_prime_s_star = s_star.map(|s| f_prime(model, s)).transpose()?;

    let mut evidence = vec![
        Inequality::le("x0_le_xstar", p.x0, x_star),
        Inequality::le("b_xstar_sigma_le_xbar", p.b * x_star.powf(p.sigma), p.x_bar),
        Inequality::ge("alpha_plus_sigma_ge_1", p.alpha + p.sigma, 1.0),
        Inequality::ge("alpha_h_plus_inv_alpha_ge_2", p.alpha_h + 1.0 / p.alpha, 2.0),
    ];
    let growth_lhs = f_prime_s_star.map_or(f64::NAN, |fp| p.beta * fp.min(gamma));
    evidence.push(Inequality::gt("beta_min_fprime_gamma_gt_1", growth_lhs, 1.0));
    evidence.push(Inequality::lt("x0_lt_s_b", p.x0, s_b));

    let holds = |i: usize| evidence[i].holds;
    let flags = RegimeFlags {
        assumption_irs: holds(2),
        curvature: holds(3),
        growth_cond: holds(4),
        trap_cond: holds(0) && holds(1),
    };
    let regime = if flags.trap_cond {
        DynamicRegime::Trap
    } else if flags.assumption_irs && flags.curvature && flags.growth_cond {
        DynamicRegime::SustainedGrowth
    } else if !flags.assumption_irs && holds(5) {
        DynamicRegime::DrsConvergence
    } else {
        DynamicRegime::Indeterminate
    };
    Ok(Classification {
        regime,
        evidence,
        report: SteadyStateReport {
            s_a,
            s_b,
            x_star,
            s_bar: p.x0.max(x_star),
            s_star,
            f_prime_s_star,
            gamma,
            flags,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::log_space;
    use proptest::prelude::*;

    fn trap() -> Model {
        Model::new(Parameters::trap_baseline()).unwrap()
    }

    #[test]
    fn evidence_follows_the_published_names() {
        let c = classify_regime(&trap()).unwrap();
        let names: Vec<&str> = c.evidence.iter().map(|e| e.name).collect();
        assert_eq!(names, EVIDENCE_NAMES);
    }

    #[test]
    fn autarky_examples() {
        let p = Parameters::trap_baseline();
        assert!((steady_autarky(&p) - 0.2304).abs() < 1e-12);
        let lower = Parameters { beta: 0.9, ..p };
        assert!(steady_autarky(&lower) < steady_autarky(&p));
        let big = Parameters { a_c: 4.0, ..p };
        assert!((steady_autarky(&big) - 3.6864).abs() < 1e-12);
    }

    #[test]
    fn fdi_steady_state_examples() {
        let m = trap();
        let s_b = steady_fdi_no_rd(&m).unwrap();
        assert!((s_b - 0.4608).abs() < 1e-6);
        assert!((s_b - steady_fdi_no_rd_closed_form(&m).unwrap()).abs() < 1e-10);

        let no_fdi = m.with_params(Parameters { a_e: 0.0, ..*m.params() }).unwrap();
        assert!((steady_fdi_no_rd(&no_fdi).unwrap() - 0.2304).abs() < 1e-10);

        let more_training = m.with_params(Parameters { a_h: 2.0, ..*m.params() }).unwrap();
        assert!(steady_fdi_no_rd(&more_training).unwrap() > s_b);
        assert!(s_b > steady_autarky(m.params()));
    }

    #[test]
    fn fdi_steady_state_without_closed_form() {
        let m = trap();
        let skewed = m.with_params(Parameters { alpha_h: 0.4, ..*m.params() }).unwrap();
        assert!(steady_fdi_no_rd_closed_form(&skewed).is_none());
        let s_b = steady_fdi_no_rd(&skewed).unwrap();
        let beta = skewed.params().beta;
        assert!((beta * f_prime(&skewed, s_b).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_point_examples() {
        let m = trap();
        let x = fixed_point_xstar(&m).unwrap();
        assert!((x - 2.0).abs() < 1e-10);
        let autarky = m.with_params(Parameters { a_e: 0.0, ..*m.params() }).unwrap();
        assert!((fixed_point_xstar(&autarky).unwrap() - 1.0).abs() < 1e-10);
        for s in log_space(1e-3, 50.0, 200) {
            let f = eval_f(&m, s).unwrap().value;
            if s < x * (1.0 - 1e-9) {
                assert!(f > s, "S={s}");
            } else if s > x * (1.0 + 1e-9) {
                assert!(f <= s, "S={s}");
            }
        }
    }

    #[test]
    fn classifier_examples() {
        let c = classify_regime(&trap()).unwrap();
        assert_eq!(c.regime, DynamicRegime::Trap);
        let e = c.evidence("b_xstar_sigma_le_xbar").unwrap();
        assert!((e.lhs - 0.5 * 2f64.powf(0.6)).abs() < 1e-9);

        let g = classify_regime(&Model::new(Parameters::growth_baseline()).unwrap()).unwrap();
        assert!(g.report.flags.assumption_irs && g.report.flags.curvature);
        assert!(g.report.s_star.is_some());
        let lhs = g.evidence("beta_min_fprime_gamma_gt_1").unwrap().lhs;
        assert_eq!(g.regime == DynamicRegime::SustainedGrowth, lhs > 1.0);

        let d = classify_regime(&Model::new(Parameters::drs_baseline()).unwrap()).unwrap();
        assert_eq!(d.regime, DynamicRegime::DrsConvergence);
        assert!(d.report.s_star.is_none());
    }

    #[test]
    fn classifier_is_pure() {
        let m = Model::new(Parameters::growth_baseline()).unwrap();
        assert_eq!(classify_regime(&m).unwrap(), classify_regime(&m).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn trap_and_growth_are_exclusive(
            a in 0.6f64..80.0,
            b in 0.05f64..30.0,
            x_bar in 0.5f64..4.0,
            sigma in 0.3f64..0.9,
            x0 in 0.05f64..5.0,
        ) {
            let base = Parameters::trap_baseline();
            let params = Parameters { a, b, x_bar, sigma, x0, ..base };
            prop_assume!(params.validate().is_ok());
            let m = Model::new(params).unwrap();
            let c = classify_regime(&m).unwrap();
            let f = c.report.flags;
            prop_assert!(
                !(f.trap_cond && f.assumption_irs && f.curvature && f.growth_cond),
                "both trap and growth conditions hold: {:?}", c.evidence
            );
        }

        #[test]
        fn report_invariants(a_h in 0.01f64..3.0, a_c in 0.3f64..1.9, fdi in any::<bool>()) {
            let base = Parameters::trap_baseline();
            let a_e = if fdi { base.a_e } else { 0.0 };
            let m = Model::new(Parameters { a_h, a_c, a_e, ..base }).unwrap();
            let r = steady_state_report(&m).unwrap();
            if fdi {
                prop_assert!(r.s_b > r.s_a);
            } else {
                prop_assert!((r.s_b - r.s_a).abs() <= 1e-10 * r.s_a);
            }
            let f = eval_f(&m, r.x_star).unwrap().value;
            prop_assert!((f - r.x_star).abs() <= 1e-8 * r.x_star);
        }
    }
}
