//! Model parameters, derived constants and the one-period primitives:
//! equilibrium wage, MNE factor demands, utility and the static payoff `g`.

use crate::error::{domain, Result};
use crate::technology;

/// Instantaneous utility of consumption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Utility {
    /// `u(c) = ln c`.
    Log,
    /// `u(c) = c^(1-theta) / (1-theta)` with `theta > 0`, `theta != 1`.
    Power { theta: f64 },
}

impl Utility {
    pub fn value(&self, c: f64) -> Result<f64> {
        check_consumption(c)?;
        Ok(self.value_unchecked(c))
    }

    pub fn marginal(&self, c: f64) -> Result<f64> {
        check_consumption(c)?;
        Ok(self.marginal_unchecked(c))
    }

    #[inline]
    pub(crate) fn value_unchecked(&self, c: f64) -> f64 {
        match *self {
            Utility::Log => c.ln(),
            Utility::Power { theta } => c.powf(1.0 - theta) / (1.0 - theta),
        }
    }

    #[inline]
    pub(crate) fn marginal_unchecked(&self, c: f64) -> f64 {
        match *self {
            Utility::Log => 1.0 / c,
            Utility::Power { theta } => c.powf(-theta),
        }
    }
}

fn check_consumption(c: f64) -> Result<()> {
    if c > 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(domain(format!(
            "consumption must be positive and finite, got {c}"
        )))
    }
}

/// Exogenous constants of the host-country economy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parameters {
    /// Capital elasticity of the consumption-good sector.
    pub alpha: f64,
    /// Training elasticity.
    pub alpha_h: f64,
    /// Capital elasticity of the MNE.
    pub alpha_e: f64,
    /// R&D elasticity.
    pub sigma: f64,
    /// Discount factor.
    pub beta: f64,
    /// TFP of the consumption-good sector.
    pub a_c: f64,
    /// Training efficiency.
    pub a_h: f64,
    /// TFP of the MNE.
    pub a_e: f64,
    /// Leverage of new technology on TFP.
    pub a: f64,
    /// Research-process efficiency.
    pub b: f64,
    /// Fixed-cost threshold in technology units.
    pub x_bar: f64,
    /// Price of physical capital.
    pub p: f64,
    /// Price of the new good.
    pub p_n: f64,
    pub utility: Utility,
    /// Initial resource.
    pub x0: f64,
}

impl Parameters {
    /// Reference economy stuck in the middle-income trap
    /// (`a = 1`, `b = 0.5`, `x_bar = 2`, log utility, `X_0 = 1`).
    pub fn trap_baseline() -> Self {
        Parameters {
            alpha: 0.5,
            alpha_h: 0.5,
            alpha_e: 0.5,
            sigma: 0.6,
            beta: 0.96,
            a_c: 1.0,
            a_h: 1.0,
            a_e: 2.0,
            a: 1.0,
            b: 0.5,
            x_bar: 2.0,
            p: 1.0,
            p_n: 1.0,
            utility: Utility::Log,
            x0: 1.0,
        }
    }

    /// Trap baseline with a productive research sector (`a = 50`, `b = 20`).
    pub fn growth_baseline() -> Self {
        Parameters {
            a: 50.0,
            b: 20.0,
            ..Self::trap_baseline()
        }
    }

    /// Decreasing-returns variant of the growth economy (`sigma = 0.4`,
    /// `X_0 = 0.1`).
    pub fn drs_baseline() -> Self {
        Parameters {
            sigma: 0.4,
            x0: 0.1,
            ..Self::growth_baseline()
        }
    }

    /// Checks every parameter restriction of the model.
    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("alpha", self.alpha),
            ("alpha_h", self.alpha_h),
            ("alpha_e", self.alpha_e),
            ("sigma", self.sigma),
            ("beta", self.beta),
        ];
        for (name, v) in unit {
            if !(v > 0.0 && v < 1.0) {
                return Err(domain(format!("{name} must lie in (0,1), got {v}")));
            }
        }
        let positive = [
            ("A_c", self.a_c),
            ("A_h", self.a_h),
            ("p", self.p),
            ("a", self.a),
            ("b", self.b),
            ("x_bar", self.x_bar),
            ("X_0", self.x0),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("A_e", self.a_e), ("p_n", self.p_n)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if self.a * self.x_bar <= self.a_c {
            return Err(domain(format!(
                "fixed cost too low: a*x_bar = {} <= A_c = {}",
                self.a * self.x_bar,
                self.a_c
            )));
        }
        if let Utility::Power { theta } = self.utility {
            if !(theta > 0.0 && theta.is_finite()) || theta == 1.0 {
                return Err(domain(format!(
                    "power utility needs theta > 0 and theta != 1, got {theta}"
                )));
            }
        }
        Ok(())
    }
}

/// Returns the parameters unchanged when every restriction holds.
pub fn validate(params: Parameters) -> Result<Parameters> {
    params.validate()?;
    Ok(params)
}

/// Equilibrium wage per unit of specific labor. Constant over time.
pub fn wage(params: &Parameters) -> f64 {
    let ae = params.alpha_e;
    let inner = ae.powf(ae) * (1.0 - ae).powf(1.0 - ae) * params.p_n * params.a_e
        / params.p.powf(ae);
    inner.powf(1.0 / (1.0 - ae))
}

/// Constants computed once from validated parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// Equilibrium wage.
    pub w: f64,
    /// Composite TFP of the no-R&D technology; only defined for
    /// `alpha == alpha_h`.
    pub composite_tfp: Option<f64>,
    /// Smallest R&D spend reaching the fixed cost: `b * n1^sigma = x_bar`.
    pub n1: f64,
    /// Budget where the R&D-only technology leaves its corner `N = n1`.
    pub x1: f64,
    /// Budget where the R&D-only technology first matches pure capital.
    /// Diagnostic.
    pub x2: Option<f64>,
}

/// Validated parameters together with their derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    params: Parameters,
    derived: DerivedConstants,
}

impl Model {
    pub fn new(params: Parameters) -> Result<Self> {
        params.validate()?;
        let w = wage(&params);
        let composite_tfp = (params.alpha == params.alpha_h).then(|| {
            let e = 1.0 / (1.0 - params.alpha);
            ((params.a_c / params.p.powf(params.alpha)).powf(e) + (w * params.a_h).powf(e))
                .powf(1.0 - params.alpha)
        });
        let n1 = (params.x_bar / params.b).powf(1.0 / params.sigma);
        let (alpha, sigma) = (params.alpha, params.sigma);
        let ax = params.a * params.x_bar;
        let x1 = ((alpha + sigma) / sigma - alpha / sigma * (ax - params.a_c) / ax) * n1;
        let mut model = Model {
            params,
            derived: DerivedConstants {
                w,
                composite_tfp,
                n1,
                x1,
                x2: None,
            },
        };
        model.derived.x2 = technology::find_x2(&model).ok();
        Ok(model)
    }

    #[inline]
    pub fn params(&self) -> &Parameters {
        &self.params
    }

    #[inline]
    pub fn derived(&self) -> &DerivedConstants {
        &self.derived
    }

    #[inline]
    pub fn wage(&self) -> f64 {
        self.derived.w
    }

    /// Copy of this model with different parameters, re-validated.
    pub fn with_params(&self, params: Parameters) -> Result<Self> {
        Model::new(params)
    }

    pub fn utility(&self, c: f64) -> Result<f64> {
        self.params.utility.value(c)
    }

    pub fn marginal_utility(&self, c: f64) -> Result<f64> {
        self.params.utility.marginal(c)
    }

    /// Static payoff `(A_c + a (b N^sigma - x_bar)^+) K_c^alpha + w A_h H^alpha_h`.
    pub fn g(&self, k_c: f64, n: f64, h: f64) -> Result<f64> {
        for (name, v) in [("K_c", k_c), ("N", n), ("H", h)] {
            if !(v >= 0.0) {
                return Err(domain(format!("{name} must be nonnegative, got {v}")));
            }
        }
        Ok(self.g_unchecked(k_c, n, h))
    }

    #[inline]
    pub(crate) fn g_unchecked(&self, k_c: f64, n: f64, h: f64) -> f64 {
        let p = &self.params;
        let tfp = p.a_c + p.a * (p.b * n.powf(p.sigma) - p.x_bar).max(0.0);
        tfp * k_c.powf(p.alpha) + self.derived.w * p.a_h * h.powf(p.alpha_h)
    }

    /// MNE capital demand and profit when it hires `l_e` units of labor at
    /// the equilibrium wage.
    pub fn mne_factor_demands(&self, l_e: f64) -> Result<(f64, f64)> {
        if !(l_e >= 0.0 && l_e.is_finite()) {
            return Err(domain(format!("L_e must be nonnegative, got {l_e}")));
        }
        let p = &self.params;
        let ae = p.alpha_e;
        let k_e = l_e * (p.p_n * p.a_e * ae / p.p).powf(1.0 / (1.0 - ae));
        let output = if l_e == 0.0 {
            0.0
        } else {
            p.a_e * k_e.powf(ae) * l_e.powf(1.0 - ae)
        };
        let profit = p.p_n * output - p.p * k_e - self.derived.w * l_e;
        Ok((k_e, profit))
    }
}
