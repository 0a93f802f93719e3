//! Brute-force verifiers for the first-order-condition solvers and the
//! value function iteration. Nothing here shares a code path with the
//! solvers it checks beyond evaluating the primitives (`g`, `u`, `G` at
//! grid points) and the value-function interpolation rule.

use rayon::prelude::*;

use crate::bellman::{GridSpec, ValueFunction};
use crate::error::{domain, Result};
use crate::model::{Model, Utility};
use crate::numeric::rel_gap;
use crate::technology::{self, g_value};

/// Grid maximum of the static problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BruteForceG {
    pub value: f64,
    pub k_c: f64,
    pub n: f64,
    pub h: f64,
}

/// Exhaustive maximum of `g` over the budget simplex discretized with `n`
/// steps per axis: capital spend `i S / n`, R&D `j S / n`, training the
/// remainder, for all `i + j <= n`.
pub fn brute_force_g(model: &Model, s: f64, n: usize) -> Result<BruteForceG> {
    if !(s >= 0.0) {
        return Err(domain(format!("savings must be nonnegative, got {s}")));
    }
    if n == 0 {
        return Err(domain("grid resolution must be positive"));
    }
    if s == 0.0 {
        return Ok(BruteForceG {
            value: 0.0,
            k_c: 0.0,
            n: 0.0,
            h: 0.0,
        });
    }
    let price = model.params().p;
    let step = s / n as f64;
    let best = (0..=n)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 * step;
            let k_c = x / price;
            let mut row = BruteForceG {
                value: f64::NEG_INFINITY,
                k_c: 0.0,
                n: 0.0,
                h: 0.0,
            };
            for j in 0..=(n - i) {
                let rd = j as f64 * step;
                let h = (s - x - rd).max(0.0);
                let v = model.g_unchecked(k_c, rd, h);
                if v > row.value {
                    row = BruteForceG {
                        value: v,
                        k_c,
                        n: rd,
                        h,
                    };
                }
            }
            (i, row)
        })
        .reduce(
            || {
                (
                    usize::MAX,
                    BruteForceG {
                        value: f64::NEG_INFINITY,
                        k_c: 0.0,
                        n: 0.0,
                        h: 0.0,
                    },
                )
            },
            // Keep the earliest row on ties so the result is independent of
            // the reduction order.
            |a, b| {
                if b.1.value > a.1.value || (b.1.value == a.1.value && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    Ok(best.1)
}

/// Solver-versus-oracle comparison at one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub target: &'static str,
    pub instance: String,
    pub oracle_value: f64,
    pub solver_value: f64,
    /// `|oracle - solver| / max(1, |oracle|)`.
    pub rel_gap: f64,
    /// Per-coordinate argmax distance `(K_c, N, H)`.
    pub argmax_gap: [f64; 3],
}

/// Compares the static solver with the grid oracle at savings `s`.
pub fn check_static(model: &Model, s: f64, n: usize) -> Result<OracleReport> {
    let oracle = brute_force_g(model, s, n)?;
    let alloc = technology::allocate(model, s)?;
    Ok(OracleReport {
        target: "allocate",
        instance: format!("S={s:e}, n={n}"),
        oracle_value: oracle.value,
        solver_value: alloc.value,
        rel_gap: rel_gap(oracle.value, alloc.value),
        argmax_gap: [
            (oracle.k_c - alloc.k_c).abs(),
            (oracle.n - alloc.n).abs(),
            (oracle.h - alloc.h).abs(),
        ],
    })
}

/// Limit of the utility at zero consumption (`-inf` or `0`).
fn utility_at_zero(u: Utility) -> f64 {
    match u {
        Utility::Log => f64::NEG_INFINITY,
        Utility::Power { theta } if theta > 1.0 => f64::NEG_INFINITY,
        Utility::Power { .. } => 0.0,
    }
}

/// Finite-horizon values by backward induction with terminal value zero.
///
/// Element `t - 1` of the result holds `V_t` on the grid. Savings choices
/// are restricted to `0` and the grid points strictly below the current
/// resource; continuation values use the same interpolation and lower tail
/// as the value function iteration.
pub fn brute_force_dp(model: &Model, grid: &GridSpec, horizon: usize) -> Result<Vec<ValueFunction>> {
    if horizon == 0 {
        return Err(domain("horizon must be at least one period"));
    }
    let points = grid.points();
    let params = model.params();
    let u = params.utility;
    let beta = params.beta;
    let next: Vec<f64> = points
        .par_iter()
        .map(|&s| g_value(model, s))
        .collect::<Result<_>>()?;
    let u0 = utility_at_zero(u);

    let mut out: Vec<ValueFunction> = Vec::with_capacity(horizon);
    let mut prev: Option<ValueFunction> = None;
    // Value of entering a period with no resources, V_t(0).
    let mut prev_at_zero = 0.0;
    for t in 1..=horizon {
        let values: Vec<f64> = points
            .iter()
            .map(|&x| {
                let cont_zero = prev.as_ref().map_or(0.0, |_| prev_at_zero);
                let mut best = u.value_unchecked(x) + beta * cont_zero;
                for (j, &s) in points.iter().enumerate() {
                    if s >= x {
                        break;
                    }
                    let cont = prev.as_ref().map_or(0.0, |v| v.eval(next[j]));
                    let v = u.value_unchecked(x - s) + beta * cont;
                    if v > best {
                        best = v;
                    }
                }
                best
            })
            .collect();
        prev_at_zero = u0 + beta * prev_at_zero;
        // Same lower tail as the value iteration, scaled to t periods.
        let scale = (1.0 - beta.powi(t as i32)) / (1.0 - beta);
        let vf = ValueFunction::new(points.clone(), values)?.with_lower_tail(u, scale);
        prev = Some(vf.clone());
        out.push(vf);
    }
    Ok(out)
}
