//! Regime maps over one or two parameter axes.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{domain, ModelError, Result};
use crate::model::{Model, Parameters};
use crate::numeric::lin_space;
use crate::thresholds::{classify_regime, Classification};

/// Parameters that may be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisName {
    A,
    B,
    XBar,
    Beta,
    Sigma,
}

impl AxisName {
    pub fn label(&self) -> &'static str {
        match self {
            AxisName::A => "a",
            AxisName::B => "b",
            AxisName::XBar => "x_bar",
            AxisName::Beta => "beta",
            AxisName::Sigma => "sigma",
        }
    }

    fn set(&self, params: &mut Parameters, v: f64) {
        match self {
            AxisName::A => params.a = v,
            AxisName::B => params.b = v,
            AxisName::XBar => params.x_bar = v,
            AxisName::Beta => params.beta = v,
            AxisName::Sigma => params.sigma = v,
        }
    }
}

impl FromStr for AxisName {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "a" => AxisName::A,
            "b" => AxisName::B,
            "x_bar" | "xbar" => AxisName::XBar,
            "beta" => AxisName::Beta,
            "sigma" => AxisName::Sigma,
            other => {
                return Err(domain(format!(
                    "unknown sweep axis '{other}' (expected a, b, x_bar, beta or sigma)"
                )))
            }
        })
    }
}

/// `n` evenly spaced values of one parameter on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub name: AxisName,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(name: AxisName, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(domain(format!("axis {} has no cells", name.label())));
        }
        if !(lo.is_finite() && hi.is_finite()) || (n > 1 && !(lo < hi)) {
            return Err(domain(format!(
                "axis {} needs finite lo < hi, got {lo}:{hi}",
                name.label()
            )));
        }
        Ok(Axis { name, lo, hi, n })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            vec![self.lo]
        } else {
            lin_space(self.lo, self.hi, self.n)
        }
    }
}

impl FromStr for Axis {
    type Err = ModelError;

    /// Parses `NAME:LO:HI:N`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [name, lo, hi, n] = parts[..] else {
            return Err(domain(format!("axis '{s}' is not NAME:LO:HI:N")));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| domain(format!("axis '{s}': '{t}' is not a number")))
        };
        let n = n
            .trim()
            .parse::<usize>()
            .map_err(|_| domain(format!("axis '{s}': '{n}' is not a cell count")))?;
        Axis::new(name.trim().parse()?, num(lo)?, num(hi)?, n)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.name.label(), self.lo, self.hi, self.n)
    }
}

/// One sweep cell: the axis values and either a classification or the
/// reason the parameters were rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub coords: Vec<f64>,
    pub outcome: std::result::Result<Classification, ModelError>,
}

/// Classifies every cell of the product grid. Cells come back in row-major
/// order (the last axis varies fastest) whatever the thread count.
pub fn sweep(base: &Parameters, axes: &[Axis]) -> Result<Vec<SweepCell>> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(domain(format!(
            "a sweep takes one or two axes, got {}",
            axes.len()
        )));
    }
    let values: Vec<Vec<f64>> = axes.iter().map(Axis::values).collect();
    let coords: Vec<Vec<f64>> = match values.as_slice() {
        [x] => x.iter().map(|&v| vec![v]).collect(),
        [x, y] => x
            .iter()
            .flat_map(|&u| y.iter().map(move |&v| vec![u, v]))
            .collect(),
        _ => unreachable!(),
    };
    Ok(coords
        .into_par_iter()
        .map(|c| {
            let mut params = *base;
            for (axis, &v) in axes.iter().zip(&c) {
                axis.name.set(&mut params, v);
            }
            let outcome = Model::new(params).and_then(|m| classify_regime(&m));
            SweepCell { coords: c, outcome }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::DynamicRegime;

    #[test]
    fn parses_axis_specs() {
        let a: Axis = "b:0.1:5:50".parse().unwrap();
        assert_eq!(a.name, AxisName::B);
        assert_eq!(a.values().len(), 50);
        assert!("q:0:1:3".parse::<Axis>().is_err());
        assert!("b:0:1".parse::<Axis>().is_err());
        assert!("b:0.1:5:0".parse::<Axis>().is_err());
        assert!("b:5:1:3".parse::<Axis>().is_err());
    }

    #[test]
    fn rejects_more_than_two_axes() {
        let ax: Axis = "a:1:2:2".parse().unwrap();
        assert!(sweep(&Parameters::trap_baseline(), &[ax, ax, ax]).is_err());
        assert!(sweep(&Parameters::trap_baseline(), &[]).is_err());
    }

    #[test]
    fn row_major_order() {
        let base = Parameters::trap_baseline();
        let axes = ["a:1:3:3".parse().unwrap(), "b:0.5:1:2".parse().unwrap()];
        let cells = sweep(&base, &axes).unwrap();
        let coords: Vec<Vec<f64>> = cells.iter().map(|c| c.coords.clone()).collect();
        assert_eq!(
            coords,
            vec![
                vec![1.0, 0.5],
                vec![1.0, 1.0],
                vec![2.0, 0.5],
                vec![2.0, 1.0],
                vec![3.0, 0.5],
                vec![3.0, 1.0]
            ]
        );
    }

    #[test]
    fn invalid_cells_are_reported() {
        // a * x_bar <= A_c at a = 0.25.
        let cells = sweep(&Parameters::trap_baseline(), &["a:0.25:1:2".parse().unwrap()]).unwrap();
        assert!(cells[0].outcome.is_err());
        assert!(cells[1].outcome.is_ok());
    }

    #[test]
    fn drs_sweep_never_reports_growth() {
        let base = Parameters::drs_baseline();
        let cells = sweep(&base, &["a:1:100:12".parse().unwrap()]).unwrap();
        for c in cells {
            let r = c.outcome.unwrap().regime;
            assert!(matches!(
                r,
                DynamicRegime::DrsConvergence | DynamicRegime::Indeterminate
            ));
        }
    }
}
