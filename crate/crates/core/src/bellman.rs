//! Value function iteration on the resource state `X`.
//!
//! The Bellman operator is
//!
//! ```text
//! T V(X) = max_{0 < S' < X} u(X - S') + beta * V(G(S'))
//! ```
//!
//! on a log-spaced grid. `V` is interpolated piecewise linearly in `ln X`
//! (the grid coordinate), held constant above the grid and continued below
//! it by a utility tail; both keep `T` monotone and a `beta`-contraction in
//! the sup norm. Choices whose next resource reaches the top of the grid are
//! flagged as truncated.

use rayon::prelude::*;

use crate::error::{domain, numerical, Result};
use crate::model::{Model, Utility};
use crate::numeric::{bisect, golden_max, log_space};
use crate::simulate::Trajectory;
use crate::technology::{g_value, numeric_dini, Side, TechCurve};

/// Smallest grid the solver accepts.
pub const MIN_GRID_POINTS: usize = 10;
/// Sweep cap before the iteration is declared non-convergent.
pub const MAX_SWEEPS: usize = 20_000;

/// Fractions of `X` always probed by the inner maximization.
const SEED_FRACTIONS: [f64; 11] = [
    0.01, 0.05, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 0.97, 0.995,
];

/// Relative distance to the grid top at which a choice counts as truncated.
const TRUNCATION_BAND: f64 = 1e-6;

/// Next-period resources as a function of savings.
pub trait ResourceMap: Sync {
    fn next_resource(&self, savings: f64) -> f64;

    /// Elasticity `d ln G / d ln S`. Defaults to a central difference.
    fn log_slope(&self, savings: f64) -> f64 {
        let h = 1e-5_f64;
        let up = self.next_resource(savings * h.exp()).ln();
        let down = self.next_resource(savings * (-h).exp()).ln();
        (up - down) / (2.0 * h)
    }

    /// Savings levels where the map has a kink.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl ResourceMap for TechCurve {
    fn next_resource(&self, savings: f64) -> f64 {
        self.eval(savings)
    }

    fn log_slope(&self, savings: f64) -> f64 {
        TechCurve::log_slope(self, savings)
    }

    fn kinks(&self) -> Vec<f64> {
        self.switches().to_vec()
    }
}

impl<F> ResourceMap for F
where
    F: Fn(f64) -> f64 + Sync,
{
    fn next_resource(&self, savings: f64) -> f64 {
        self(savings)
    }
}

/// Log-spaced resource grid `[x_lo, x_hi]` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(x_lo: f64, x_hi: f64, n: usize) -> Result<Self> {
        if !(x_lo > 0.0 && x_lo.is_finite()) {
            return Err(domain(format!("grid x_lo must be positive, got {x_lo}")));
        }
        if !(x_hi > x_lo && x_hi.is_finite()) {
            return Err(domain(format!(
                "grid x_hi must exceed x_lo = {x_lo}, got {x_hi}"
            )));
        }
        if n < MIN_GRID_POINTS {
            return Err(domain(format!(
                "grid needs at least {MIN_GRID_POINTS} points, got {n}"
            )));
        }
        Ok(GridSpec { x_lo, x_hi, n })
    }

    pub fn points(&self) -> Vec<f64> {
        log_space(self.x_lo, self.x_hi, self.n)
    }
}

/// Value function on a log-spaced grid.
///
/// Between grid points values are linear in `ln X`. Above the grid the top
/// value is held. Below it the value is either held or, with a lower tail,
/// continued as `V(x_lo) + scale (u(X) - u(x_lo))`: the utility loss of a
/// permanently lower consumption level. The tail does not depend on the
/// other values, so the Bellman operator stays monotone and a contraction.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
    ln_lo: f64,
    ln_step: f64,
    tail: Option<(Utility, f64)>,
}

impl ValueFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(domain("value function needs matching grid and values"));
        }
        if !grid.windows(2).all(|w| w[0] < w[1]) || grid[0] <= 0.0 {
            return Err(domain("value function grid must be positive and increasing"));
        }
        let ln_lo = grid[0].ln();
        let ln_step = (grid[grid.len() - 1].ln() - ln_lo) / (grid.len() - 1) as f64;
        Ok(ValueFunction {
            grid,
            values,
            ln_lo,
            ln_step,
            tail: None,
        })
    }

    /// Continues the function below the grid with `scale (u(X) - u(x_lo))`.
    pub fn with_lower_tail(mut self, utility: Utility, scale: f64) -> Self {
        self.tail = Some((utility, scale));
        self
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn x_hi(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// Interpolated value; see the type documentation for the tails.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if !(x > self.grid[0]) {
            return match self.tail {
                Some((u, scale)) if x < self.grid[0] => {
                    let loss = u.value_unchecked(x.max(0.0)) - u.value_unchecked(self.grid[0]);
                    self.values[0] + scale * loss
                }
                _ => self.values[0],
            };
        }
        if x >= self.grid[n - 1] {
            return self.values[n - 1];
        }
        let t = x.ln();
        let mut i = (((t - self.ln_lo) / self.ln_step) as usize).min(n - 2);
        // The grid is only approximately uniform in ln X after rounding.
        while i > 0 && x < self.grid[i] {
            i -= 1;
        }
        while i + 2 < n && x >= self.grid[i + 1] {
            i += 1;
        }
        let (a, b) = (self.grid[i].ln(), self.grid[i + 1].ln());
        let w = ((t - a) / (b - a)).clamp(0.0, 1.0);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    /// `d V / d ln X` of the interpolant, from the right at grid points.
    pub fn log_slope(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x < self.grid[0] {
            return match self.tail {
                Some((u, scale)) => scale * x * u.marginal_unchecked(x),
                None => 0.0,
            };
        }
        if x >= self.grid[n - 1] {
            return 0.0;
        }
        let i = self.grid.partition_point(|&g| g <= x).saturating_sub(1).min(n - 2);
        (self.values[i + 1] - self.values[i]) / (self.grid[i + 1].ln() - self.grid[i].ln())
    }

    /// Sup-norm distance to another value function on the same grid.
    pub fn distance(&self, other: &ValueFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Greedy savings on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub grid: Vec<f64>,
    pub savings: Vec<f64>,
    /// The optimizer at this grid point sends next-period resources above
    /// the grid.
    pub truncated: Vec<bool>,
}

impl Policy {
    pub fn consumption(&self) -> Vec<f64> {
        self.grid
            .iter()
            .zip(&self.savings)
            .map(|(x, s)| x - s)
            .collect()
    }

    pub fn any_truncated(&self) -> bool {
        self.truncated.iter().any(|&t| t)
    }
}

/// Outcome of the one-period maximization at a resource level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Choice {
    pub savings: f64,
    pub value: f64,
    pub truncated: bool,
}

/// Result of value function iteration.
#[derive(Debug, Clone)]
pub struct Solution<T = TechCurve> {
    tech: T,
    utility: Utility,
    beta: f64,
    pub value: ValueFunction,
    pub policy: Policy,
    /// Sup-norm change of each sweep.
    pub sweep_distances: Vec<f64>,
    /// Smallest pointwise change `V_{k+1} - V_k` of each sweep.
    pub sweep_min_increments: Vec<f64>,
    /// Constant initial guess.
    pub initial_value: f64,
}

impl<T: ResourceMap> Solution<T> {
    pub fn technology(&self) -> &T {
        &self.tech
    }

    pub fn sweeps(&self) -> usize {
        self.sweep_distances.len()
    }

    pub fn grid_top(&self) -> f64 {
        self.value.x_hi()
    }

    /// Greedy choice at any resource level within the grid.
    pub fn savings_at(&self, x: f64) -> Choice {
        greedy(&self.tech, self.utility, self.beta, &self.value, x)
    }
}

/// One-period maximization of `u(X - S') + beta V(G(S'))` over `S'`.
///
/// Probes a fixed set of fractions of `X` plus the kinks of `G`, then refines
/// the best probe by golden section on the bracket formed by its neighbors.
fn greedy<T: ResourceMap>(
    tech: &T,
    utility: Utility,
    beta: f64,
    v: &ValueFunction,
    x: f64,
) -> Choice {
    let top = v.x_hi();
    let objective = |s: f64| -> f64 {
        let c = x - s;
        if !(c > 0.0) || !(s > 0.0) {
            return f64::NEG_INFINITY;
        }
        utility.value_unchecked(c) + beta * v.eval(tech.next_resource(s))
    };

    let mut probes: Vec<f64> = SEED_FRACTIONS.iter().map(|f| f * x).collect();
    probes.extend(tech.kinks().into_iter().filter(|&k| k > 0.0 && k < x));
    probes.sort_by(f64::total_cmp);
    let values: Vec<f64> = probes.iter().map(|&s| objective(s)).collect();
    let mut best = 0;
    for (i, val) in values.iter().enumerate() {
        if *val > values[best] {
            best = i;
        }
    }
    let lo = if best == 0 { 0.0 } else { probes[best - 1] };
    let hi = if best + 1 == probes.len() { x } else { probes[best + 1] };
    let (s_g, v_g) = golden_max(objective, lo, hi, 1e-12);
    let (mut savings, mut value) = if v_g > values[best] {
        (s_g, v_g)
    } else {
        (probes[best], values[best])
    };
    // Golden section only resolves a smooth peak to about the square root of
    // machine precision; polish on the sign of the derivative.
    let slope = |s: f64| -> f64 {
        -utility.marginal_unchecked(x - s)
            + beta * v.log_slope(tech.next_resource(s)) * tech.log_slope(s) / s
    };
    let (p_lo, p_hi) = (savings * (1.0 - 1e-6), (savings * (1.0 + 1e-6)).min(x * (1.0 - 1e-15)));
    if p_lo > 0.0 && p_lo < p_hi && slope(p_lo) > 0.0 && slope(p_hi) < 0.0 {
        if let Ok(r) = bisect(slope, p_lo, p_hi) {
            let v_r = objective(r);
            if v_r >= value - 1e-14 * value.abs().max(1.0) {
                savings = r;
                value = v_r.max(value);
            }
        }
    }
    Choice {
        savings,
        value,
        truncated: tech.next_resource(savings) >= top * (1.0 - TRUNCATION_BAND),
    }
}

fn bellman_sweep<T: ResourceMap>(
    tech: &T,
    utility: Utility,
    beta: f64,
    v: &ValueFunction,
) -> Vec<Choice> {
    v.grid()
        .par_iter()
        .map(|&x| greedy(tech, utility, beta, v, x))
        .collect()
}

/// Value function iteration for an arbitrary resource map.
///
/// Starts from a constant that `T` maps upward (the value of always saving
/// half of the bottom grid point), so sweeps improve monotonically. Stops
/// when the sup-norm change falls below `tol (1 - beta) / (2 beta)`.
pub fn vfi_with<T: ResourceMap>(
    tech: T,
    utility: Utility,
    beta: f64,
    grid: &GridSpec,
    tol: f64,
) -> Result<Solution<T>> {
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance must be positive, got {tol}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(domain(format!("beta must lie in (0,1), got {beta}")));
    }
    let points = grid.points();
    let scale = 1.0 / (1.0 - beta);
    let half = grid.x_lo / 2.0;
    let shortfall = (utility.value_unchecked(tech.next_resource(half))
        - utility.value_unchecked(grid.x_lo))
    .min(0.0);
    let initial_value = (utility.value_unchecked(half) + beta * scale * shortfall) / (1.0 - beta);
    if !initial_value.is_finite() {
        return Err(numerical(format!(
            "initial value is not finite at x_lo = {:e}",
            grid.x_lo
        )));
    }
    let mut v = ValueFunction::new(points.clone(), vec![initial_value; points.len()])?
        .with_lower_tail(utility, scale);
    let stop = tol * (1.0 - beta) / (2.0 * beta);
    let mut distances = Vec::new();
    let mut increments = Vec::new();
    loop {
        let choices = bellman_sweep(&tech, utility, beta, &v);
        let next = ValueFunction::new(points.clone(), choices.iter().map(|c| c.value).collect())?
            .with_lower_tail(utility, scale);
        if next.values().iter().any(|x| !x.is_finite()) {
            return Err(numerical(format!(
                "non-finite value after {} sweeps",
                distances.len() + 1
            )));
        }
        let d = next.distance(&v);
        distances.push(d);
        increments.push(
            next.values()
                .iter()
                .zip(v.values())
                .map(|(a, b)| a - b)
                .fold(f64::INFINITY, f64::min),
        );
        v = next;
        if d < stop {
            let policy = Policy {
                grid: points.clone(),
                savings: choices.iter().map(|c| c.savings).collect(),
                truncated: choices.iter().map(|c| c.truncated).collect(),
            };
            return Ok(Solution {
                tech,
                utility,
                beta,
                value: v,
                policy,
                sweep_distances: distances,
                sweep_min_increments: increments,
                initial_value,
            });
        }
        if distances.len() >= MAX_SWEEPS {
            return Err(numerical(format!(
                "value iteration did not converge in {MAX_SWEEPS} sweeps (last change {d:e})"
            )));
        }
    }
}

/// Value function iteration for the model's technology `G`.
pub fn vfi(model: &Model, grid: &GridSpec, tol: f64) -> Result<Solution<TechCurve>> {
    let curve = TechCurve::new(model, grid.x_hi)?;
    let p = model.params();
    vfi_with(curve, p.utility, p.beta, grid, tol)
}

/// Euler-inequality check at one date.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerStep {
    pub t: usize,
    /// `u'(c_t)`.
    pub marginal_now: f64,
    /// `beta u'(c_{t+1}) D^- G(S_{t+1})`; must not fall below `marginal_now`.
    pub upper: f64,
    /// `beta u'(c_{t+1}) D^+ G(S_{t+1})`; must not exceed `marginal_now`.
    pub lower: f64,
    /// `(lower - marginal_now) / marginal_now`, positive when violated.
    pub lower_violation: f64,
    /// `(marginal_now - upper) / marginal_now`, positive when violated.
    pub upper_violation: f64,
    pub flagged: bool,
}

impl EulerStep {
    pub fn worst(&self) -> f64 {
        self.lower_violation.max(self.upper_violation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerReport {
    pub tolerance: f64,
    pub steps: Vec<EulerStep>,
    /// Dates skipped because consumption or savings is not interior.
    pub skipped: Vec<usize>,
}

impl EulerReport {
    pub fn flagged(&self) -> Vec<usize> {
        self.steps.iter().filter(|s| s.flagged).map(|s| s.t).collect()
    }

    pub fn max_violation(&self) -> f64 {
        self.steps.iter().map(EulerStep::worst).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Checks `beta u'(c_{t+1}) D^-G(S_{t+1}) >= u'(c_t) >= beta u'(c_{t+1}) D^+G(S_{t+1})`
/// along a path, flagging relative violations above `tol`.
pub fn euler_residual(model: &Model, path: &Trajectory, tol: f64) -> Result<EulerReport> {
    let p = model.params();
    let mut steps = Vec::new();
    let mut skipped = Vec::new();
    for w in path.steps.windows(2) {
        let (now, next) = (&w[0], &w[1]);
        let s = now.s_next;
        if !(now.c > 0.0 && next.c > 0.0 && s > 0.0) {
            skipped.push(now.t);
            continue;
        }
        let g = |x: f64| g_value(model, x);
        let d_minus = numeric_dini(g, s, Side::Minus)?.value;
        let d_plus = numeric_dini(g, s, Side::Plus)?.value;
        let marginal_now = model.marginal_utility(now.c)?;
        let discounted = p.beta * model.marginal_utility(next.c)?;
        let upper = discounted * d_minus;
        let lower = discounted * d_plus;
        let lower_violation = (lower - marginal_now) / marginal_now;
        let upper_violation = (marginal_now - upper) / marginal_now;
        steps.push(EulerStep {
            t: now.t,
            marginal_now,
            upper,
            lower,
            lower_violation,
            upper_violation,
            flagged: lower_violation > tol || upper_violation > tol,
        });
    }
    Ok(EulerReport {
        tolerance: tol,
        steps,
        skipped,
    })
}
