//! Forward simulation of the optimal policy and path-level checks.

use crate::bellman::Solution;
use crate::error::{domain, Result};
use crate::model::Model;
use crate::technology::{allocate, g_value, numeric_dini, Allocation, Side, TechCurve};
use crate::thresholds::{DynamicRegime, SteadyStateReport};

/// Consecutive near-constant steps needed to declare convergence.
pub const CONVERGENCE_RUN: usize = 10;
/// Relative step size below which savings count as constant.
pub const CONVERGENCE_TOL: f64 = 1e-9;

/// One date of a simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub t: usize,
    /// Resource available at `t`.
    pub x: f64,
    /// Savings `S_{t+1}` chosen at `t`.
    pub s_next: f64,
    /// Consumption at `t`.
    pub c: f64,
    /// Static split of `S_{t+1}`.
    pub alloc: Allocation,
    pub rd_active: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    /// Requested horizon.
    pub horizon: usize,
    /// The path left the policy grid before the horizon.
    pub truncated: bool,
    /// First date of a run of `CONVERGENCE_RUN` near-constant savings steps.
    pub converged_at: Option<usize>,
    pub regime: Option<DynamicRegime>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    /// Savings path `S_1, S_2, ...`.
    pub fn savings(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.s_next).collect()
    }

    pub fn last(&self) -> Option<&Step> {
        self.steps.last()
    }
}

fn converged_at(savings: &[f64]) -> Option<usize> {
    let mut run = 0;
    for (i, w) in savings.windows(2).enumerate() {
        if (w[1] - w[0]).abs() < CONVERGENCE_TOL * w[0].abs().max(1.0) {
            run += 1;
            if run == CONVERGENCE_RUN {
                return Some(i + 1 - (CONVERGENCE_RUN - 1));
            }
        } else {
            run = 0;
        }
    }
    None
}

/// Rolls the policy forward from `X_0` for `horizon` dates. Stops early,
/// with the truncation flag set, once resources leave the policy grid or the
/// optimal choice is capped by the grid top; a capped choice is not
/// recorded.
pub fn simulate(model: &Model, solution: &Solution<TechCurve>, horizon: usize) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(domain("horizon must be at least one period"));
    }
    let grid = solution.value.grid();
    let (x_lo, x_hi) = (grid[0], grid[grid.len() - 1]);
    let x0 = model.params().x0;
    if x0 < x_lo {
        return Err(domain(format!(
            "X_0 = {x0} lies below the policy grid [{x_lo}, {x_hi}]"
        )));
    }
    let mut steps = Vec::with_capacity(horizon);
    let mut truncated = x0 > x_hi;
    let mut x = x0;
    if !truncated {
        for t in 0..horizon {
            let choice = solution.savings_at(x);
            if choice.truncated {
                truncated = true;
                break;
            }
            let s_next = choice.savings;
            let alloc = allocate(model, s_next)?;
            steps.push(Step {
                t,
                x,
                s_next,
                c: x - s_next,
                alloc,
                rd_active: alloc.rd_active,
            });
            x = alloc.value;
            if x > x_hi {
                truncated = true;
                break;
            }
        }
    }
    let savings: Vec<f64> = steps.iter().map(|s| s.s_next).collect();
    Ok(Trajectory {
        steps,
        meta: TrajectoryMeta {
            horizon,
            truncated,
            converged_at: converged_at(&savings),
            regime: None,
        },
    })
}

/// Date at which R&D starts and whether it then continues for good.
#[derive(Debug, Clone, PartialEq)]
pub struct Takeoff {
    /// Smallest `t` with `N_{t+1} > 0`.
    pub t0: Option<usize>,
    /// Dates after `t0` where R&D stops again.
    pub violations: Vec<usize>,
}

impl Takeoff {
    pub fn single_switch(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn detect_rd_takeoff(traj: &Trajectory) -> Takeoff {
    let t0 = traj.steps.iter().find(|s| s.alloc.n > 0.0).map(|s| s.t);
    let violations = match t0 {
        Some(t0) => traj
            .steps
            .iter()
            .filter(|s| s.t > t0 && s.alloc.n == 0.0)
            .map(|s| s.t)
            .collect(),
        None => Vec::new(),
    };
    Takeoff { t0, violations }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathReport {
    pub regime: DynamicRegime,
    pub checks: Vec<PropertyCheck>,
    /// Limit of the savings path when it converged.
    pub s_limit: Option<f64>,
    /// `S_d - S_b` for decreasing-returns paths.
    pub margin_over_s_b: Option<f64>,
}

impl PathReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Dates excluded from the no-collapse check.
pub const NO_COLLAPSE_FROM: usize = 5;
/// Slack on the upper bound `S_bar`.
pub const S_BAR_TOL: f64 = 1e-6;
/// Slack on `S_d >= S_b`.
pub const S_D_TOL: f64 = 1e-3;

/// Checks monotonicity, no collapse to zero, the `S_bar` bound (trap and
/// decreasing-returns regimes) and `S_d >= S_b` (decreasing returns).
pub fn verify_path_properties(
    traj: &Trajectory,
    report: &SteadyStateReport,
    regime: DynamicRegime,
) -> PathReport {
    let s = traj.savings();
    let mut checks = Vec::new();

    let slack = |a: f64, b: f64| 1e-12 * a.abs().max(b.abs()).max(1.0);
    let nondecreasing = s.windows(2).all(|w| w[1] >= w[0] - slack(w[0], w[1]));
    let nonincreasing = s.windows(2).all(|w| w[1] <= w[0] + slack(w[0], w[1]));
    checks.push(PropertyCheck {
        name: "monotone",
        status: if nondecreasing || nonincreasing {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        detail: if nondecreasing {
            "nondecreasing".into()
        } else if nonincreasing {
            "nonincreasing".into()
        } else {
            "changes direction".into()
        },
    });

    let delta = s.first().map_or(0.0, |&s1| s1.min(1e-4));
    let tail_min = s
        .iter()
        .skip(NO_COLLAPSE_FROM)
        .copied()
        .fold(f64::INFINITY, f64::min);
    let tail_min = if tail_min.is_finite() {
        tail_min
    } else {
        s.iter().copied().fold(f64::INFINITY, f64::min)
    };
    checks.push(PropertyCheck {
        name: "no_collapse",
        status: if tail_min >= delta && delta > 0.0 {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        detail: format!("min S_t (t >= {NO_COLLAPSE_FROM}) = {tail_min:e}, delta = {delta:e}"),
    });

    let bounded = matches!(regime, DynamicRegime::Trap | DynamicRegime::DrsConvergence);
    let s_max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    checks.push(if bounded {
        PropertyCheck {
            name: "below_s_bar",
            status: if s_max <= report.s_bar + S_BAR_TOL {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            detail: format!("max S_t = {s_max:e}, S_bar = {:e}", report.s_bar),
        }
    } else {
        PropertyCheck {
            name: "below_s_bar",
            status: CheckStatus::Skipped("bound only claimed for bounded regimes"),
            detail: String::new(),
        }
    });

    let s_limit = traj.meta.converged_at.and(s.last().copied());
    let mut margin_over_s_b = None;
    checks.push(if regime == DynamicRegime::DrsConvergence {
        match s_limit {
            Some(s_d) => {
                margin_over_s_b = Some(s_d - report.s_b);
                PropertyCheck {
                    name: "limit_above_s_b",
                    status: if s_d >= report.s_b - S_D_TOL {
                        CheckStatus::Pass
                    } else {
                        CheckStatus::Fail
                    },
                    detail: format!("S_d = {s_d:e}, S_b = {:e}", report.s_b),
                }
            }
            None => PropertyCheck {
                name: "limit_above_s_b",
                status: CheckStatus::Fail,
                detail: "path did not converge".into(),
            },
        }
    } else {
        PropertyCheck {
            name: "limit_above_s_b",
            status: CheckStatus::Skipped("only for decreasing returns"),
            detail: String::new(),
        }
    });

    PathReport {
        regime,
        checks,
        s_limit,
        margin_over_s_b,
    }
}

/// Number of top grid points where `beta D^+G > 1` is spot-checked.
pub const GROWTH_SPOT_CHECKS: usize = 5;

/// Evidence that a path grows without bound: it is strictly increasing until
/// it escapes the grid, and discounted marginal returns exceed one at the
/// top of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCertificate {
    pub escaped: bool,
    pub strictly_increasing: bool,
    /// `(X, beta D^+G(X))` at the largest grid points.
    pub spot_checks: Vec<(f64, f64)>,
}

impl GrowthCertificate {
    pub fn certified(&self) -> bool {
        self.escaped && self.strictly_increasing && self.spot_checks.iter().all(|&(_, v)| v > 1.0)
    }
}

pub fn certify_growth(
    model: &Model,
    traj: &Trajectory,
    solution: &Solution<TechCurve>,
) -> Result<GrowthCertificate> {
    let s = traj.savings();
    let grid = solution.value.grid();
    let beta = model.params().beta;
    let spot_checks = grid[grid.len().saturating_sub(GROWTH_SPOT_CHECKS)..]
        .iter()
        .map(|&x| {
            let d = numeric_dini(|v| g_value(model, v), x, Side::Plus)?;
            Ok((x, beta * d.value))
        })
        .collect::<Result<_>>()?;
    Ok(GrowthCertificate {
        escaped: traj.meta.truncated,
        strictly_increasing: s.windows(2).all(|w| w[1] > w[0]),
        spot_checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Parameters;

    fn fake_step(model: &Model, t: usize, n: f64) -> Step {
        let alloc = allocate(model, 1.0).unwrap();
        let alloc = Allocation { n, ..alloc };
        Step {
            t,
            x: 2.0,
            s_next: 1.0,
            c: 1.0,
            alloc,
            rd_active: n > 0.0,
        }
    }

    fn fake_path(model: &Model, ns: &[f64]) -> Trajectory {
        Trajectory {
            steps: ns.iter().enumerate().map(|(t, &n)| fake_step(model, t, n)).collect(),
            meta: TrajectoryMeta {
                horizon: ns.len(),
                truncated: false,
                converged_at: None,
                regime: None,
            },
        }
    }

    #[test]
    fn takeoff_single_switch() {
        let m = Model::new(Parameters::trap_baseline()).unwrap();
        let t = detect_rd_takeoff(&fake_path(&m, &[0.0, 0.0, 1.0, 2.0]));
        assert_eq!(t.t0, Some(2));
        assert!(t.single_switch());
        let none = detect_rd_takeoff(&fake_path(&m, &[0.0, 0.0]));
        assert_eq!(none.t0, None);
    }

    #[test]
    fn takeoff_reversal_is_reported() {
        let m = Model::new(Parameters::trap_baseline()).unwrap();
        let t = detect_rd_takeoff(&fake_path(&m, &[0.0, 1.0, 0.0]));
        assert_eq!(t.t0, Some(1));
        assert_eq!(t.violations, vec![2]);
        assert!(!t.single_switch());
    }

    #[test]
    fn convergence_needs_a_full_run() {
        let mut s: Vec<f64> = (0..20).map(|i| 1.0 - 0.5f64.powi(i)).collect();
        assert_eq!(converged_at(&s[..5]), None);
        s.extend(std::iter::repeat_n(1.0, 12));
        assert!(converged_at(&s).is_some());
    }
}
