use rayon::prelude::*;

use super::{eval_f, eval_g0, f_prime, g_value};
use crate::error::{numerical, Result};
use crate::model::Model;
use crate::numeric::{bisect, log_space};

const NODES_PER_DECADE: f64 = 64.0;
const MIN_NODES: usize = 256;
/// Cells whose midpoint misses the exact value by more than this relative
/// error are split.
const CELL_TOL: f64 = 1e-10;
const MAX_REFINE_PASSES: usize = 40;

#[derive(Debug, Clone, Copy)]
struct Node {
    ln_s: f64,
    ln_g: f64,
    /// `d ln G / d ln S` approached from the left and from the right.
    slope_left: f64,
    slope_right: f64,
}

/// Pre-tabulated `G(S)` for repeated evaluation inside dynamic programming.
///
/// Nodes are log-spaced; every switch between the no-R&D and R&D branches
/// is located by bisection and inserted as a node with its two one-sided
/// slopes, so each cell is smooth. Cells use cubic Hermite interpolation of
/// `ln G` against `ln S` with exact envelope slopes. Below the table the
/// technology is `F` and is evaluated exactly; above it `G` is evaluated
/// exactly.
#[derive(Debug, Clone)]
pub struct TechCurve {
    model: Model,
    lo: f64,
    hi: f64,
    nodes: Vec<Node>,
    switches: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Branch {
    rd: bool,
    value: f64,
    slope: f64,
}

fn branch_at(model: &Model, s: f64) -> Result<Branch> {
    let f = eval_f(model, s)?.value;
    let fp = f_prime(model, s)?;
    Ok(match eval_g0(model, s)? {
        Some(g0) if g0.value > f => Branch {
            rd: true,
            value: g0.value,
            slope: s * g0.derivative / g0.value,
        },
        _ => Branch {
            rd: false,
            value: f,
            slope: s * fp / f,
        },
    })
}

/// Value and log-log slope of one branch, forced.
fn forced_branch(model: &Model, s: f64, rd: bool) -> Result<Branch> {
    if rd {
        let g0 = eval_g0(model, s)?
            .ok_or_else(|| numerical(format!("R&D branch infeasible at {s:e}")))?;
        Ok(Branch {
            rd,
            value: g0.value,
            slope: s * g0.derivative / g0.value,
        })
    } else {
        let f = eval_f(model, s)?.value;
        Ok(Branch {
            rd,
            value: f,
            slope: s * f_prime(model, s)? / f,
        })
    }
}

impl TechCurve {
    /// Tabulates `G` on `[min(N_1, 1e-8), s_max]`.
    pub fn new(model: &Model, s_max: f64) -> Result<Self> {
        let lo = model.derived().n1.min(1e-8);
        let hi = s_max.max(lo * 10.0);
        let decades = (hi / lo).log10();
        let count = ((decades * NODES_PER_DECADE).ceil() as usize).max(MIN_NODES);
        let grid = log_space(lo, hi, count);

        let branches: Vec<Branch> = grid
            .par_iter()
            .map(|&s| branch_at(model, s))
            .collect::<Result<_>>()?;

        let mut nodes = Vec::with_capacity(count + 8);
        let mut switches = Vec::new();
        for i in 0..count {
            let b = branches[i];
            if i > 0 && branches[i - 1].rd != b.rd {
                let (a_s, b_s) = (grid[i - 1], grid[i]);
                let gap = |s: f64| -> f64 {
                    let f = eval_f(model, s).map(|f| f.value).unwrap_or(f64::NAN);
                    match eval_g0(model, s) {
                        Ok(Some(g0)) => g0.value - f,
                        Ok(None) => f64::NEG_INFINITY,
                        Err(_) => f64::NAN,
                    }
                };
                let s_c = bisect(gap, a_s, b_s)?;
                if s_c > a_s && s_c < b_s {
                    let left = forced_branch(model, s_c, branches[i - 1].rd)?;
                    let right = forced_branch(model, s_c, b.rd)?;
                    let value = left.value.max(right.value);
                    nodes.push(Node {
                        ln_s: s_c.ln(),
                        ln_g: value.ln(),
                        slope_left: left.slope,
                        slope_right: right.slope,
                    });
                    switches.push(s_c);
                }
            }
            nodes.push(Node {
                ln_s: grid[i].ln(),
                ln_g: b.value.ln(),
                slope_left: b.slope,
                slope_right: b.slope,
            });
        }
        refine(model, &mut nodes)?;
        Ok(TechCurve {
            model: *model,
            lo,
            hi,
            nodes,
            switches,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// Upper end of the tabulated range.
    pub fn s_max(&self) -> f64 {
        self.hi
    }

    /// Savings levels where the optimum switches between the no-R&D and
    /// R&D branches.
    pub fn switches(&self) -> &[f64] {
        &self.switches
    }

    /// `G(s)`. Returns NaN for negative input.
    pub fn eval(&self, s: f64) -> f64 {
        if !(s >= 0.0) {
            return f64::NAN;
        }
        if s == 0.0 {
            return 0.0;
        }
        if s < self.lo {
            return eval_f(&self.model, s).map_or(f64::NAN, |f| f.value);
        }
        if s > self.hi {
            return g_value(&self.model, s).unwrap_or(f64::NAN);
        }
        let t = s.ln();
        let i = match self
            .nodes
            .partition_point(|n| n.ln_s <= t)
            .checked_sub(1)
        {
            Some(i) if i + 1 < self.nodes.len() => i,
            Some(i) => i - 1,
            None => 0,
        };
        hermite(&self.nodes[i], &self.nodes[i + 1], t).exp()
    }
}

impl TechCurve {
    /// Elasticity `d ln G / d ln S` of the interpolant, taken from the
    /// right at switch nodes.
    pub fn log_slope(&self, s: f64) -> f64 {
        if !(s > 0.0) {
            return f64::NAN;
        }
        if s < self.lo {
            return match (eval_f(&self.model, s), f_prime(&self.model, s)) {
                (Ok(f), Ok(fp)) => s * fp / f.value,
                _ => f64::NAN,
            };
        }
        if s > self.hi {
            return branch_at(&self.model, s).map_or(f64::NAN, |b| b.slope);
        }
        let t = s.ln();
        let i = self
            .nodes
            .partition_point(|n| n.ln_s <= t)
            .saturating_sub(1)
            .min(self.nodes.len() - 2);
        hermite_slope(&self.nodes[i], &self.nodes[i + 1], t)
    }
}

fn hermite_slope(a: &Node, b: &Node, t: f64) -> f64 {
    let dt = b.ln_s - a.ln_s;
    let u = ((t - a.ln_s) / dt).clamp(0.0, 1.0);
    let u2 = u * u;
    let d00 = 6.0 * u2 - 6.0 * u;
    let d10 = 3.0 * u2 - 4.0 * u + 1.0;
    let d01 = -6.0 * u2 + 6.0 * u;
    let d11 = 3.0 * u2 - 2.0 * u;
    (d00 * a.ln_g + d01 * b.ln_g) / dt + d10 * a.slope_right + d11 * b.slope_left
}

/// Cubic Hermite interpolant of `ln G` at `t = ln S` inside one cell.
fn hermite(a: &Node, b: &Node, t: f64) -> f64 {
    let dt = b.ln_s - a.ln_s;
    let u = ((t - a.ln_s) / dt).clamp(0.0, 1.0);
    let (u2, u3) = (u * u, u * u * u);
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    h00 * a.ln_g + h10 * dt * a.slope_right + h01 * b.ln_g + h11 * dt * b.slope_left
}

/// Splits cells at their midpoints until every midpoint is reproduced within
/// `CELL_TOL`. Near the fixed-cost threshold `ln G` has a logarithmic
/// singularity that uniform spacing cannot resolve.
fn refine(model: &Model, nodes: &mut Vec<Node>) -> Result<()> {
    for _ in 0..MAX_REFINE_PASSES {
        let inserts: Vec<(usize, Node)> = (0..nodes.len() - 1)
            .into_par_iter()
            .map(|i| -> Result<Option<(usize, Node)>> {
                let (a, b) = (&nodes[i], &nodes[i + 1]);
                let t = 0.5 * (a.ln_s + b.ln_s);
                if !(t > a.ln_s && t < b.ln_s) {
                    return Ok(None);
                }
                let s = t.exp();
                let exact = branch_at(model, s)?;
                let ln_g = exact.value.ln();
                if (hermite(a, b, t) - ln_g).abs() <= CELL_TOL {
                    return Ok(None);
                }
                Ok(Some((
                    i,
                    Node {
                        ln_s: t,
                        ln_g,
                        slope_left: exact.slope,
                        slope_right: exact.slope,
                    },
                )))
            })
            .filter_map(|r| r.transpose())
            .collect::<Result<_>>()?;
        if inserts.is_empty() {
            break;
        }
        let mut merged = Vec::with_capacity(nodes.len() + inserts.len());
        let mut pending = inserts.into_iter().peekable();
        for (i, node) in nodes.iter().enumerate() {
            merged.push(*node);
            if let Some((_, mid)) = pending.next_if(|(j, _)| *j == i) {
                merged.push(mid);
            }
        }
        *nodes = merged;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Parameters;

    #[test]
    fn curve_matches_exact_technology() {
        for params in [Parameters::trap_baseline(), Parameters::growth_baseline()] {
            let m = Model::new(params).unwrap();
            let curve = TechCurve::new(&m, 200.0).unwrap();
            for s in log_space(1e-4, 150.0, 97) {
                let exact = g_value(&m, s).unwrap();
                let approx = curve.eval(s);
                assert!(
                    (approx - exact).abs() <= 1e-7 * exact,
                    "S={s}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn log_slope_matches_exact_elasticity() {
        let m = Model::new(Parameters::growth_baseline()).unwrap();
        let curve = TechCurve::new(&m, 200.0).unwrap();
        for s in log_space(1e-9, 1e3, 37) {
            let exact = branch_at(&m, s).unwrap().slope;
            let approx = curve.log_slope(s);
            assert!((approx - exact).abs() <= 1e-4 * exact.abs().max(1.0), "S={s}: {approx} vs {exact}");
        }
    }

    #[test]
    fn curve_records_the_takeoff_switch() {
        let m = Model::new(Parameters::growth_baseline()).unwrap();
        let s_star = super::super::find_s_star(&m).unwrap();
        let curve = TechCurve::new(&m, 10.0).unwrap();
        assert_eq!(curve.switches().len(), 1);
        assert!((curve.switches()[0] - s_star).abs() < 1e-10 * s_star.max(1.0));
    }
}
