//! The static allocation problem: split savings `S` between physical
//! capital, R&D and training so as to maximize next-period resources.
//!
//! Three nested technologies are solved here:
//!
//! * `F(S)`: capital and training only (no R&D). Smooth, strictly concave.
//! * `G_1(x)`: capital plus an R&D spend that clears the fixed cost.
//! * `G_0(S)`: `G_1` plus training.
//!
//! The full technology is `G(S) = max(F(S), G_0(S))`, which is continuous
//! and increasing but neither concave nor differentiable at the takeoff
//! threshold `S*`.

mod curve;

pub use curve::TechCurve;

use crate::error::{domain, numerical, precondition, Result};
use crate::model::Model;
use crate::numeric::{bisect, golden_max};

/// Number of seeds scanned in the outer problem of `G_0`.
const G0_SEEDS: usize = 64;
/// Hard cap on the bracket search for `S*`.
pub const S_STAR_CAP: f64 = 1e9;

/// A split of savings into capital, R&D and training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    pub s: f64,
    pub k_c: f64,
    pub n: f64,
    pub h: f64,
    pub theta_c: f64,
    pub theta_n: f64,
    pub theta_h: f64,
    /// `b N^sigma > x_bar`.
    pub rd_active: bool,
    /// Payoff `g(K_c, N, H)`.
    pub value: f64,
}

impl Allocation {
    fn new(model: &Model, s: f64, k_c: f64, n: f64, h: f64, value: f64) -> Self {
        let p = model.params();
        let (theta_c, theta_n, theta_h) = if s > 0.0 {
            (p.p * k_c / s, n / s, h / s)
        } else {
            (0.0, 0.0, 0.0)
        };
        Allocation {
            s,
            k_c,
            n,
            h,
            theta_c,
            theta_n,
            theta_h,
            rd_active: p.b * n.powf(p.sigma) > p.x_bar,
            value,
        }
    }

    fn zero(model: &Model) -> Self {
        Self::new(model, 0.0, 0.0, 0.0, 0.0, 0.0)
    }

    /// `p K_c + N + H`.
    pub fn spending(&self, p: f64) -> f64 {
        p * self.k_c + self.n + self.h
    }

    /// Specific labor supplied to the MNE, `A_h H^alpha_h`.
    pub fn labor(&self, model: &Model) -> f64 {
        let p = model.params();
        p.a_h * self.h.powf(p.alpha_h)
    }
}

/// Optimum of the no-R&D technology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FSolution {
    pub value: f64,
    pub k_c: f64,
    pub h: f64,
}

/// Capital spend `x = p K_c` and training `H` solving the no-R&D problem.
fn f_split(model: &Model, s: f64) -> Result<(f64, f64)> {
    let p = model.params();
    let wa = model.wage() * p.a_h;
    if s == 0.0 {
        return Ok((0.0, 0.0));
    }
    if wa == 0.0 {
        return Ok((s, 0.0));
    }
    if p.alpha == p.alpha_h {
        let e = 1.0 / (1.0 - p.alpha);
        let c1 = (p.a_c / p.p.powf(p.alpha)).powf(e);
        let c2 = wa.powf(e);
        let x = s * c1 / (c1 + c2);
        return Ok((x, s * c2 / (c1 + c2)));
    }
    let q = f_share_by_bisection(model, s)?;
    Ok((q * s, (1.0 - q) * s))
}

/// Capital share of the no-R&D optimum from the interior first-order
/// condition `alpha A_c / p^alpha x^(alpha-1) = alpha_h w A_h H^(alpha_h-1)`.
fn f_share_by_bisection(model: &Model, s: f64) -> Result<f64> {
    let p = model.params();
    let wa = model.wage() * p.a_h;
    let kc = p.alpha * p.a_c / p.p.powf(p.alpha);
    let kh = p.alpha_h * wa;
    bisect(
        |q| kc * (q * s).powf(p.alpha - 1.0) - kh * ((1.0 - q) * s).powf(p.alpha_h - 1.0),
        0.0,
        1.0,
    )
}

fn f_value(model: &Model, x: f64, h: f64) -> f64 {
    let p = model.params();
    p.a_c * (x / p.p).powf(p.alpha) + model.wage() * p.a_h * h.powf(p.alpha_h)
}

/// `F(S)`: best output from capital and training alone.
pub fn eval_f(model: &Model, s: f64) -> Result<FSolution> {
    if !(s >= 0.0) {
        return Err(domain(format!("savings must be nonnegative, got {s}")));
    }
    let (x, h) = f_split(model, s)?;
    Ok(FSolution {
        value: f_value(model, x, h),
        k_c: x / model.params().p,
        h,
    })
}

/// `F'(S)` by the envelope theorem.
pub fn f_prime(model: &Model, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(domain(format!("F' needs positive savings, got {s}")));
    }
    let p = model.params();
    let (x, h) = f_split(model, s)?;
    // Both marginal products agree at an interior optimum; evaluate the one
    // with the larger argument.
    if x >= h {
        Ok(p.alpha * p.a_c * x.powf(p.alpha - 1.0) / p.p.powf(p.alpha))
    } else {
        Ok(p.alpha_h * model.wage() * p.a_h * h.powf(p.alpha_h - 1.0))
    }
}

/// Which regime of the R&D-only technology an optimum lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum G1Branch {
    /// Budget does not exceed the minimal R&D spend; output is zero.
    Empty,
    /// R&D pinned at the minimal spend `N_1`.
    Corner,
    /// R&D above `N_1`, determined by the interior optimality condition.
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G1Point {
    pub value: f64,
    pub k_c: f64,
    pub n: f64,
    pub branch: G1Branch,
}

/// Residual of the interior condition for the R&D spend at budget `x`;
/// strictly decreasing in `n`.
pub fn rd_condition_residual(model: &Model, x: f64, n: f64) -> f64 {
    let p = model.params();
    let ab = p.a * p.b;
    p.sigma * ab * (x - n) / n + p.alpha * (p.a * p.x_bar - p.a_c) / n.powf(p.sigma)
        - p.alpha * ab
}

/// `G_1(x)`: capital plus R&D with `b N^sigma >= x_bar`, budget `x`.
pub fn eval_g1(model: &Model, x: f64) -> Result<G1Point> {
    if !(x >= 0.0) {
        return Err(domain(format!("budget must be nonnegative, got {x}")));
    }
    let p = model.params();
    let d = model.derived();
    if x <= d.n1 {
        return Ok(G1Point {
            value: 0.0,
            k_c: 0.0,
            n: x,
            branch: G1Branch::Empty,
        });
    }
    if x <= d.x1 {
        let k_c = (x - d.n1) / p.p;
        return Ok(G1Point {
            value: p.a_c * k_c.powf(p.alpha),
            k_c,
            n: d.n1,
            branch: G1Branch::Corner,
        });
    }
    let n = bisect(|n| rd_condition_residual(model, x, n), d.n1, x).map_err(|e| {
        numerical(format!("R&D spend at budget {x:e} not bracketed: {e}"))
    })?;
    let k_c = (x - n) / p.p;
    let tfp = p.a_c + p.a * (p.b * n.powf(p.sigma) - p.x_bar);
    Ok(G1Point {
        value: tfp * k_c.powf(p.alpha),
        k_c,
        n,
        branch: G1Branch::Interior,
    })
}

/// Marginal value of budget in `G_1`; infinite at and below `N_1`.
pub fn g1_prime(model: &Model, pt: &G1Point) -> f64 {
    let p = model.params();
    match pt.branch {
        G1Branch::Empty => f64::INFINITY,
        G1Branch::Corner | G1Branch::Interior => {
            let tfp = p.a_c + p.a * (p.b * pt.n.powf(p.sigma) - p.x_bar).max(0.0);
            tfp * p.alpha * pt.k_c.powf(p.alpha - 1.0) / p.p
        }
    }
}

/// Budget `x_2` where `G_1` first matches the pure-capital technology.
pub(crate) fn find_x2(model: &Model) -> Result<f64> {
    let p = model.params();
    let gap = |x: f64| -> Result<f64> {
        Ok(eval_g1(model, x)?.value - p.a_c * x.powf(p.alpha) / p.p.powf(p.alpha))
    };
    let lo = model.derived().n1;
    let mut hi = lo.max(1e-6) * 2.0;
    while gap(hi)? <= 0.0 {
        hi *= 2.0;
        if hi > S_STAR_CAP {
            return Err(numerical("x2: no sign change below cap"));
        }
    }
    let mut err = None;
    let root = bisect(
        |x| match gap(x) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                f64::NAN
            }
        },
        lo,
        hi,
    );
    match err {
        Some(e) => Err(e),
        None => root,
    }
}

/// Optimum of the technology constrained to clear the R&D fixed cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G0Solution {
    pub value: f64,
    pub allocation: Allocation,
    /// `G_0'(S)`, the multiplier on the budget.
    pub derivative: f64,
}

/// `G_0(S)`; `None` when no allocation reaches the fixed cost (`S < N_1`).
pub fn eval_g0(model: &Model, s: f64) -> Result<Option<G0Solution>> {
    if !(s >= 0.0) {
        return Err(domain(format!("savings must be nonnegative, got {s}")));
    }
    let d = model.derived();
    if s < d.n1 {
        return Ok(None);
    }
    let p = model.params();
    let wa = model.wage() * p.a_h;
    let span = s - d.n1;

    let h = if wa == 0.0 || span == 0.0 {
        0.0
    } else {
        best_training(model, s, span)?
    };
    let pt = eval_g1(model, (s - h).max(0.0))?;
    let value = pt.value + wa * h.powf(p.alpha_h);
    let allocation = Allocation::new(model, s, pt.k_c, pt.n, h, value);
    Ok(Some(G0Solution {
        value,
        allocation,
        derivative: g1_prime(model, &pt),
    }))
}

/// Training spend maximizing `G_1(S - H) + w A_h H^alpha_h` on
/// `[0, S - N_1]`. The objective need not be concave: seeds are scanned,
/// every local peak refined by golden section and polished by bisection on
/// the first-order condition.
fn best_training(model: &Model, s: f64, span: f64) -> Result<f64> {
    let p = model.params();
    let wa = model.wage() * p.a_h;
    // The budget left for capital and R&D, guarded against rounding when
    // `h` is at the top of its range.
    let rest = |h: f64| (s - h).max(0.0);
    let objective = |h: f64| -> f64 {
        match eval_g1(model, rest(h)) {
            Ok(pt) => pt.value + wa * h.powf(p.alpha_h),
            Err(_) => f64::NAN,
        }
    };
    let slope = |h: f64| -> f64 {
        if h <= 0.0 {
            return f64::INFINITY;
        }
        match eval_g1(model, rest(h)) {
            Ok(pt) => p.alpha_h * wa * h.powf(p.alpha_h - 1.0) - g1_prime(model, &pt),
            Err(_) => f64::NAN,
        }
    };

    let seeds: Vec<f64> = (0..G0_SEEDS)
        .map(|i| (span * i as f64 / (G0_SEEDS - 1) as f64).min(span))
        .collect();
    let values: Vec<f64> = seeds.iter().map(|&h| objective(h)).collect();
    if values.iter().any(|v| v.is_nan()) {
        return Err(numerical(format!("G_0 objective undefined at S = {s:e}")));
    }

    let (mut best_h, mut best_v) = (seeds[0], values[0]);
    for (i, &v) in values.iter().enumerate() {
        if v > best_v {
            best_h = seeds[i];
            best_v = v;
        }
    }
    let last = G0_SEEDS - 1;
    for i in 0..G0_SEEDS {
        let left_ok = i == 0 || values[i] >= values[i - 1];
        let right_ok = i == last || values[i] >= values[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let lo = seeds[i.saturating_sub(1)];
        let hi = seeds[(i + 1).min(last)];
        let (h_g, v_g) = golden_max(objective, lo, hi, 1e-12);
        if v_g > best_v {
            best_h = h_g;
            best_v = v_g;
        }
        let (s_lo, s_hi) = (slope(lo), slope(hi));
        if s_lo > 0.0 && s_hi < 0.0 {
            let h_p = bisect(slope, lo, hi)?;
            let v_p = objective(h_p);
            if v_p >= best_v {
                best_h = h_p;
                best_v = v_p;
            }
        }
    }
    Ok(best_h)
}

/// Regime of the static optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    NoRd,
    Rd,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::NoRd => "NoRD",
            Regime::Rd => "RD",
        }
    }
}

/// Values and one-sided derivatives of the technologies at one savings
/// level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TechEval {
    pub s: f64,
    pub f_val: f64,
    /// `None` at `S = 0` where the Inada condition makes it infinite.
    pub f_prime: Option<f64>,
    /// `None` when the fixed cost cannot be reached within budget.
    pub g0_val: Option<f64>,
    pub g_val: f64,
    pub left_deriv: Option<f64>,
    pub right_deriv: Option<f64>,
    pub regime: Regime,
    pub allocation: Allocation,
}

fn f_allocation(model: &Model, s: f64) -> Result<Allocation> {
    let f = eval_f(model, s)?;
    Ok(Allocation::new(model, s, f.k_c, 0.0, f.h, f.value))
}

/// Argmax of the full static problem. Ties between the branches resolve to
/// the no-R&D allocation.
pub fn allocate(model: &Model, s: f64) -> Result<Allocation> {
    if !(s >= 0.0) {
        return Err(domain(format!("savings must be nonnegative, got {s}")));
    }
    if s == 0.0 {
        return Ok(Allocation::zero(model));
    }
    let f_alloc = f_allocation(model, s)?;
    match eval_g0(model, s)? {
        Some(g0) if g0.value > f_alloc.value => Ok(g0.allocation),
        _ => Ok(f_alloc),
    }
}

/// `G(S)` value only.
pub fn g_value(model: &Model, s: f64) -> Result<f64> {
    let f = eval_f(model, s)?.value;
    Ok(match eval_g0(model, s)? {
        Some(g0) => f.max(g0.value),
        None => f,
    })
}

/// `G(S)` with both branches, the argmax and Dini derivative estimates.
pub fn eval_g(model: &Model, s: f64) -> Result<TechEval> {
    let f_alloc = if s == 0.0 {
        Allocation::zero(model)
    } else {
        f_allocation(model, s)?
    };
    let g0 = eval_g0(model, s)?;
    let (g_val, regime, allocation) = match g0 {
        Some(g0) if g0.value > f_alloc.value => (g0.value, Regime::Rd, g0.allocation),
        _ => (f_alloc.value, Regime::NoRd, f_alloc),
    };
    let (f_prime, left_deriv, right_deriv) = if s > 0.0 {
        let g = |x: f64| g_value(model, x);
        (
            Some(f_prime(model, s)?),
            Some(numeric_dini(g, s, Side::Minus)?.value),
            Some(numeric_dini(g, s, Side::Plus)?.value),
        )
    } else {
        (None, None, None)
    };
    Ok(TechEval {
        s,
        f_val: f_alloc.value,
        f_prime,
        g0_val: g0.map(|g| g.value),
        g_val,
        left_deriv,
        right_deriv,
        regime,
        allocation,
    })
}

/// Unique savings level above which the R&D branch strictly dominates.
/// Requires increasing returns `alpha + sigma >= 1`.
pub fn find_s_star(model: &Model) -> Result<f64> {
    let p = model.params();
    if p.alpha + p.sigma < 1.0 {
        return Err(precondition(format!(
            "takeoff threshold needs alpha + sigma >= 1, got {}",
            p.alpha + p.sigma
        )));
    }
    let gap = |s: f64| -> Result<f64> {
        let f = eval_f(model, s)?.value;
        let g0 = eval_g0(model, s)?.map_or(f64::NEG_INFINITY, |g| g.value);
        Ok(g0 - f)
    };
    let mut lo = model.derived().n1.max(1e-6);
    let mut hi = lo;
    loop {
        if gap(hi)? > 0.0 {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > S_STAR_CAP {
            return Err(numerical(format!(
                "G_0 - F has no sign change on [{:e}, {S_STAR_CAP:e}]; last gap {:e}",
                model.derived().n1,
                gap(lo)?
            )));
        }
    }
    let mut err = None;
    let root = bisect(
        |s| match gap(s) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let s_star = root?;
    if !(p.b * s_star.powf(p.sigma) > p.x_bar) {
        return Err(numerical(format!(
            "S* = {s_star:e} does not clear the fixed cost"
        )));
    }
    Ok(s_star)
}

/// Closed-form lower bound on the right derivative of `G` above `S*`.
pub fn gamma_bound(model: &Model) -> f64 {
    let p = model.params();
    let (al, ah, sg) = (p.alpha, p.alpha_h, p.sigma);
    let numerator = (al * p.a_c / (p.p * sg)).powf(al)
        * p.x_bar.powf(-(1.0 - al) * (1.0 - sg) / sg)
        * p.a.powf(1.0 - al)
        * p.b.powf((1.0 - al) / sg);
    let training = (ah * model.wage() * p.a_h * (p.p * sg).powf(al)
        / (sg * (al * p.a_c).powf(al)))
    .powf(1.0 / (1.0 - ah))
        / (p.a.powf((1.0 - al) / (1.0 - ah)) * p.b.powf((ah - al) / (sg * (1.0 - ah))));
    numerator / (1.0 + al / sg + training).powf(al)
}

/// Limits of the budget shares `(theta_c, theta_n, theta_h)` as savings grow
/// without bound.
pub fn asymptotic_shares(model: &Model) -> Result<(f64, f64, f64)> {
    let p = model.params();
    let sum = p.alpha + p.sigma;
    if sum < 1.0 {
        return Err(precondition(format!(
            "share limits need alpha + sigma >= 1, got {sum}"
        )));
    }
    Ok((p.alpha / sum, p.sigma / sum, 0.0))
}

/// Output of the feasible R&D allocation that spends half the slack above
/// the minimal R&D budget on capital (no training).
pub fn rd_lower_bound(model: &Model, s: f64) -> Result<f64> {
    let p = model.params();
    if !(p.b * s.powf(p.sigma) > p.x_bar) {
        return Err(precondition(format!(
            "R&D bound needs b S^sigma > x_bar at S = {s}"
        )));
    }
    let inv = 1.0 / p.sigma;
    let tech = (p.b.powf(inv) * s / 2.0 + p.x_bar.powf(inv) / 2.0).powf(p.sigma) - p.x_bar;
    let capital = s / 2.0 - p.x_bar.powf(inv) / (2.0 * p.b.powf(inv));
    Ok((p.a_c + p.a * tech) / p.p.powf(p.alpha) * capital.powf(p.alpha))
}

/// Sufficient condition for a positive R&D spend at savings `s`.
pub fn rd_lower_bound_check(model: &Model, s: f64) -> Result<bool> {
    Ok(rd_lower_bound(model, s)? > eval_f(model, s)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

/// A Dini derivative estimate and the step that attained it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dini {
    pub value: f64,
    pub step: f64,
}

/// Relative steps of the difference quotients, largest first.
pub const DINI_STEPS: [f64; 6] = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

/// Upper right (`Plus`: sup of forward quotients) or lower left (`Minus`:
/// inf of backward quotients) Dini derivative of `f` at `s`.
pub fn numeric_dini<F>(mut f: F, s: f64, side: Side) -> Result<Dini>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(s > 0.0 && s.is_finite()) {
        return Err(domain(format!("Dini derivative needs s > 0, got {s}")));
    }
    let f0 = f(s)?;
    if !f0.is_finite() {
        return Err(numerical(format!("f({s:e}) is not finite")));
    }
    let scale = s.max(1.0);
    let mut best: Option<Dini> = None;
    for rel in DINI_STEPS {
        let step = rel * scale;
        let q = match side {
            Side::Plus => {
                let h = (s + step) - s;
                let f1 = f(s + h)?;
                if !f1.is_finite() {
                    return Err(numerical(format!("f({:e}) is not finite", s + h)));
                }
                (f1 - f0) / h
            }
            Side::Minus => {
                if step >= s {
                    continue;
                }
                let h = s - (s - step);
                let f1 = f(s - h)?;
                if !f1.is_finite() {
                    return Err(numerical(format!("f({:e}) is not finite", s - h)));
                }
                (f0 - f1) / h
            }
        };
        let better = match (best, side) {
            (None, _) => true,
            (Some(b), Side::Plus) => q > b.value,
            (Some(b), Side::Minus) => q < b.value,
        };
        if better {
            best = Some(Dini { value: q, step });
        }
    }
    best.ok_or_else(|| domain(format!("no admissible step below s = {s:e}")))
}

#[cfg(test)]
mod tests;
