//! Scenario files. Every model constant is spelled out; unknown keys are
//! rejected so that a typo never falls back to a default.

use std::path::{Path, PathBuf};

use fdi_growth::bellman::GridSpec;
use fdi_growth::{Model, Parameters, Utility};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub parameters: ParameterBlock,
    pub grid: Option<GridBlock>,
    pub run: Option<RunBlock>,
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterBlock {
    pub alpha: f64,
    pub alpha_h: f64,
    pub alpha_e: f64,
    pub sigma: f64,
    pub beta: f64,
    pub a_c: f64,
    pub a_h: f64,
    pub a_e: f64,
    pub a: f64,
    pub b: f64,
    pub x_bar: f64,
    pub p: f64,
    pub p_n: f64,
    /// `"log"` or `"power"`; the latter needs `theta`.
    pub utility: String,
    pub theta: Option<f64>,
    pub x0: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

/// What a command writes to the output directory. Reports always go to
/// stdout; `report` additionally saves them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Report,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e: toml::de::Error| {
            let msg = e.message().trim();
            match e.span() {
                Some(span) => {
                    let line = text[..span.start].matches('\n').count() + 1;
                    CliError::Config(format!("line {line}: {msg}"))
                }
                None => CliError::Config(msg.to_string()),
            }
        })
    }

    pub fn parameters(&self) -> CliResult<Parameters> {
        let b = &self.parameters;
        let utility = match (b.utility.as_str(), b.theta) {
            ("log", None) => Utility::Log,
            ("log", Some(_)) => {
                return Err(CliError::Config(
                    "parameters.theta is only valid with utility = \"power\"".into(),
                ))
            }
            ("power", Some(theta)) => Utility::Power { theta },
            ("power", None) => {
                return Err(CliError::Config(
                    "parameters.theta is required with utility = \"power\"".into(),
                ))
            }
            (other, _) => {
                return Err(CliError::Config(format!(
                    "parameters.utility must be \"log\" or \"power\", got \"{other}\""
                )))
            }
        };
        Ok(Parameters {
            alpha: b.alpha,
            alpha_h: b.alpha_h,
            alpha_e: b.alpha_e,
            sigma: b.sigma,
            beta: b.beta,
            a_c: b.a_c,
            a_h: b.a_h,
            a_e: b.a_e,
            a: b.a,
            b: b.b,
            x_bar: b.x_bar,
            p: b.p,
            p_n: b.p_n,
            utility,
            x0: b.x0,
        })
    }

    /// The validated model. Parameter restrictions are configuration errors.
    pub fn model(&self) -> CliResult<Model> {
        Model::new(self.parameters()?).map_err(|e| CliError::Config(format!("[parameters] {e}")))
    }

    pub fn grid(&self) -> CliResult<GridSpec> {
        let g = self
            .grid
            .ok_or_else(|| CliError::Config("missing [grid] section".into()))?;
        GridSpec::new(g.x_lo, g.x_hi, g.n).map_err(|e| CliError::Config(format!("[grid] {e}")))
    }

    pub fn run(&self) -> CliResult<RunBlock> {
        let r = self
            .run
            .ok_or_else(|| CliError::Config("missing [run] section".into()))?;
        if r.horizon == 0 {
            return Err(CliError::Config("[run] T must be positive".into()));
        }
        if !(r.tol > 0.0 && r.tol.is_finite()) {
            return Err(CliError::Config(format!("[run] tol must be positive, got {}", r.tol)));
        }
        Ok(r)
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }
}
