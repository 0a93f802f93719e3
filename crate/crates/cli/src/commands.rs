//! The subcommands. Each one validates its inputs, computes, writes its CSV
//! files and returns the report lines for stdout.

use std::path::{Path, PathBuf};

use fdi_growth::bellman::{vfi, Solution};
use fdi_growth::numeric::log_space;
use fdi_growth::simulate::{
    certify_growth, detect_rd_takeoff, simulate, verify_path_properties, CheckStatus, Trajectory,
};
use fdi_growth::sweep::{sweep, Axis};
use fdi_growth::technology::{asymptotic_shares, eval_g, TechCurve, TechEval};
use fdi_growth::thresholds::{classify_regime, Classification, DynamicRegime, EVIDENCE_NAMES};
use fdi_growth::Model;
use rayon::prelude::*;

use crate::config::{Format, ScenarioConfig};
use crate::error::{CliError, CliResult};

/// Seventeen significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Resolved destination for files written by a command.
pub struct Output<'a> {
    pub config: &'a ScenarioConfig,
    pub directory: PathBuf,
}

impl<'a> Output<'a> {
    pub fn new(config: &'a ScenarioConfig, out: Option<&Path>) -> Self {
        let directory = out.map_or_else(|| config.output.directory.clone(), Path::to_path_buf);
        Output { config, directory }
    }

    fn ensure_dir(&self) -> CliResult<()> {
        std::fs::create_dir_all(&self.directory).map_err(|e| {
            CliError::Io(format!("cannot create {}: {e}", self.directory.display()))
        })
    }

    fn csv(&self, name: &str, header: &[String], rows: &[Vec<String>]) -> CliResult<()> {
        if !self.config.wants(Format::Csv) {
            return Ok(());
        }
        self.ensure_dir()?;
        let mut w = csv::Writer::from_path(self.directory.join(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    fn report(&self, name: &str, lines: &[String]) -> CliResult<()> {
        if !self.config.wants(Format::Report) {
            return Ok(());
        }
        self.ensure_dir()?;
        let mut text = lines.join("\n");
        text.push('\n');
        std::fs::write(self.directory.join(name), text)?;
        Ok(())
    }
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

/// Savings levels for the technology table.
#[derive(Debug, Clone, Copy)]
pub struct SRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl SRange {
    fn values(&self) -> CliResult<Vec<f64>> {
        if self.points == 0 {
            return Err(CliError::Usage("--s-points must be at least 1".into()));
        }
        if !(self.min > 0.0 && self.min.is_finite() && self.max.is_finite()) {
            return Err(CliError::Usage(format!(
                "S range must be positive and finite, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.points == 1 {
            return Ok(vec![self.min]);
        }
        if !(self.min < self.max) {
            return Err(CliError::Usage(format!(
                "empty S range: --s-min {} is not below --s-max {}",
                self.min, self.max
            )));
        }
        Ok(log_space(self.min, self.max, self.points))
    }
}

fn tech_row(e: &TechEval) -> Vec<String> {
    let a = &e.allocation;
    vec![
        num(e.s),
        num(e.f_val),
        opt(e.g0_val),
        num(e.g_val),
        e.regime.label().to_string(),
        num(a.theta_c),
        num(a.theta_n),
        num(a.theta_h),
        opt(e.left_deriv),
        opt(e.right_deriv),
    ]
}

pub fn tech(out: &Output, range: SRange) -> CliResult<Vec<String>> {
    let model = out.config.model()?;
    let s = range.values()?;
    let evals = s
        .par_iter()
        .map(|&s| eval_g(&model, s))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Vec<String>> = evals.iter().map(tech_row).collect();
    let cols = [
        "S", "F", "G0", "G", "regime", "theta_c", "theta_n", "theta_h", "left_deriv",
        "right_deriv",
    ];
    out.csv("tech.csv", &header(&cols), &rows)?;
    let switches = evals.windows(2).filter(|w| w[0].regime != w[1].regime).count();
    Ok(vec![
        format!("rows={}", rows.len()),
        format!("regime_switches={switches}"),
    ])
}

fn classification_lines(c: &Classification) -> Vec<String> {
    let r = &c.report;
    let mut lines = vec![
        format!("S_a={}", num(r.s_a)),
        format!("S_b={}", num(r.s_b)),
        format!("x_star={}", num(r.x_star)),
        format!("S_bar={}", num(r.s_bar)),
        format!("S_star={}", r.s_star.map_or_else(|| "none".into(), num)),
        format!("F_prime_S_star={}", r.f_prime_s_star.map_or_else(|| "none".into(), num)),
        format!("Gamma={}", num(r.gamma)),
        format!("assumption_irs={}", r.flags.assumption_irs),
        format!("curvature={}", r.flags.curvature),
        format!("growth_cond={}", r.flags.growth_cond),
        format!("trap_cond={}", r.flags.trap_cond),
        format!("regime={}", c.regime.label()),
    ];
    for e in &c.evidence {
        lines.push(format!("evidence.{}.lhs={}", e.name, num(e.lhs)));
        lines.push(format!("evidence.{}.rhs={}", e.name, num(e.rhs)));
        lines.push(format!("evidence.{}.holds={}", e.name, e.holds));
    }
    lines
}

pub fn steady(out: &Output) -> CliResult<Vec<String>> {
    let model = out.config.model()?;
    let lines = classification_lines(&classify_regime(&model)?);
    out.report("steady.txt", &lines)?;
    Ok(lines)
}

struct Solved {
    model: Model,
    class: Classification,
    solution: Solution<TechCurve>,
    horizon: usize,
}

fn solve_scenario(config: &ScenarioConfig) -> CliResult<Solved> {
    let model = config.model()?;
    let grid = config.grid()?;
    let run = config.run()?;
    let class = classify_regime(&model)?;
    let solution = vfi(&model, &grid, run.tol)?;
    Ok(Solved { model, class, solution, horizon: run.horizon })
}

/// Bounded regimes must stay inside the grid.
fn bounded(regime: DynamicRegime) -> bool {
    matches!(regime, DynamicRegime::Trap | DynamicRegime::DrsConvergence)
}

pub fn solve(out: &Output) -> CliResult<Vec<String>> {
    let s = solve_scenario(out.config)?;
    let policy = &s.solution.policy;
    let values = s.solution.value.values();
    let rows: Vec<Vec<String>> = policy
        .grid
        .iter()
        .zip(values)
        .zip(policy.savings.iter().zip(policy.consumption()))
        .zip(&policy.truncated)
        .map(|(((&x, &v), (&sv, c)), &tr)| {
            vec![num(x), num(v), num(sv), num(c), tr.to_string()]
        })
        .collect();
    out.csv("policy.csv", &header(&["X", "V", "S_next", "c", "truncated"]), &rows)?;

    let truncated = policy.truncated.iter().filter(|&&t| t).count();
    let lines = vec![
        format!("regime={}", s.class.regime.label()),
        format!("sweeps={}", s.solution.sweeps()),
        format!(
            "final_distance={}",
            opt(s.solution.sweep_distances.last().copied())
        ),
        format!("truncated_points={truncated}"),
    ];
    out.report("solve.txt", &lines)?;
    if truncated > 0 && bounded(s.class.regime) {
        return Err(CliError::Contract(format!(
            "{} policy points leave the grid in the {} regime; raise grid.x_hi",
            truncated,
            s.class.regime.label()
        )));
    }
    Ok(lines)
}

fn trajectory_rows(traj: &Trajectory) -> Vec<Vec<String>> {
    traj.steps
        .iter()
        .map(|st| {
            vec![
                st.t.to_string(),
                num(st.x),
                num(st.s_next),
                num(st.c),
                num(st.alloc.k_c),
                num(st.alloc.n),
                num(st.alloc.h),
                st.rd_active.to_string(),
            ]
        })
        .collect()
}

pub fn run_simulation(out: &Output) -> CliResult<Vec<String>> {
    let s = solve_scenario(out.config)?;
    let traj = simulate(&s.model, &s.solution, s.horizon)?;
    let cols = ["t", "X", "S_next", "c", "K_c", "N", "H", "rd_active"];
    out.csv("trajectory.csv", &header(&cols), &trajectory_rows(&traj))?;

    let regime = s.class.regime;
    let takeoff = detect_rd_takeoff(&traj);
    let path = verify_path_properties(&traj, &s.class.report, regime);
    let mut lines = vec![
        format!("regime={}", regime.label()),
        format!("steps={}", traj.steps.len()),
        format!("truncated={}", traj.meta.truncated),
        format!("takeoff={}", takeoff.t0.map_or_else(|| "none".into(), |t| t.to_string())),
        format!("takeoff_single_switch={}", takeoff.single_switch()),
        format!(
            "converged_at={}",
            traj.meta.converged_at.map_or_else(|| "none".into(), |t| t.to_string())
        ),
    ];
    if let Some(last) = traj.last() {
        lines.push(format!("S_final={}", num(last.s_next)));
    }
    lines.push(format!("S_b={}", num(s.class.report.s_b)));
    for c in &path.checks {
        let status = match c.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Skipped(_) => "skipped",
        };
        lines.push(format!("check.{}={status}", c.name));
        let detail = match c.status {
            CheckStatus::Skipped(why) => why.to_string(),
            _ => c.detail.clone(),
        };
        lines.push(format!("check.{}.detail={detail}", c.name));
    }

    match regime {
        DynamicRegime::SustainedGrowth => {
            if traj.meta.truncated {
                lines.push(format!(
                    "escape=path left the grid after t={}; growth continues beyond grid.x_hi",
                    traj.steps.len().saturating_sub(1)
                ));
            }
            let cert = certify_growth(&s.model, &traj, &s.solution)?;
            lines.push(format!("growth_certified={}", cert.certified()));
            if let Some(last) = traj.last() {
                let (tc, tn, th) = asymptotic_shares(&s.model)?;
                let a = &last.alloc;
                for (name, v, target) in [
                    ("theta_c", a.theta_c, tc),
                    ("theta_n", a.theta_n, tn),
                    ("theta_h", a.theta_h, th),
                ] {
                    lines.push(format!("{name}={} target={}", num(v), num(target)));
                }
            }
        }
        DynamicRegime::DrsConvergence => {
            if let Some(s_d) = path.s_limit {
                lines.push(format!("S_d={}", num(s_d)));
                lines.push(format!("S_d_minus_S_b={}", num(s_d - s.class.report.s_b)));
                lines.push(format!("S_d_ge_S_b={}", s_d >= s.class.report.s_b));
            }
        }
        _ => {}
    }
    out.report("simulate.txt", &lines)?;

    if traj.meta.truncated && bounded(regime) {
        return Err(CliError::Contract(format!(
            "path left the grid in the {} regime after {} steps; raise grid.x_hi",
            regime.label(),
            traj.steps.len()
        )));
    }
    Ok(lines)
}

pub fn run_sweep(out: &Output, axes: &[Axis]) -> CliResult<Vec<String>> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(CliError::Usage(format!(
            "sweep takes one or two --axis specs, got {}",
            axes.len()
        )));
    }
    let base = out.config.parameters()?;
    let cells = sweep(&base, axes)?;

    let mut cols: Vec<String> = axes.iter().map(|a| a.name.label().to_string()).collect();
    cols.extend(header(&[
        "regime", "S_a", "S_b", "x_star", "S_bar", "S_star", "Gamma",
    ]));
    for name in EVIDENCE_NAMES {
        cols.push(format!("{name}_lhs"));
        cols.push(format!("{name}_rhs"));
    }
    cols.push("error".into());

    let mut counts = std::collections::BTreeMap::new();
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|cell| {
            let mut row: Vec<String> = cell.coords.iter().map(|&v| num(v)).collect();
            match &cell.outcome {
                Ok(c) => {
                    let r = &c.report;
                    *counts.entry(c.regime.label()).or_insert(0) += 1;
                    row.push(c.regime.label().into());
                    row.extend([r.s_a, r.s_b, r.x_star, r.s_bar].map(num));
                    row.push(opt(r.s_star));
                    row.push(num(r.gamma));
                    for name in EVIDENCE_NAMES {
                        let e = c.evidence(name);
                        row.push(opt(e.map(|e| e.lhs)));
                        row.push(opt(e.map(|e| e.rhs)));
                    }
                    row.push(String::new());
                }
                Err(e) => {
                    *counts.entry("Invalid").or_insert(0) += 1;
                    row.push("Invalid".into());
                    row.extend(std::iter::repeat_n(String::new(), 6 + 2 * EVIDENCE_NAMES.len()));
                    row.push(e.to_string());
                }
            }
            row
        })
        .collect();
    out.csv("sweep.csv", &cols, &rows)?;

    let mut lines = vec![format!("cells={}", rows.len())];
    lines.extend(counts.iter().map(|(k, v)| format!("count.{k}={v}")));
    out.report("sweep.txt", &lines)?;
    Ok(lines)
}
