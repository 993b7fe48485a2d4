//! Runs a validated scenario and writes its artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use adaptctl::sim::{lyapunov_violations, simulate_ct, simulate_dt, SimRun, LYAPUNOV_REL_TOL};

use crate::build::{assemble, System};
use crate::certify::{evaluate, CertificateResult};
use crate::config::{Comparison, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

/// Verdict on one declared criterion. `value` is absent when the metric is
/// non-finite or could not be computed; the latter sets `error` and fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub value: Option<f64>,
    pub op: Comparison,
    pub threshold: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub kind: String,
    pub config: ScenarioConfig,
    /// Criterion metrics plus `lyapunov_violations` whenever a `V` channel
    /// is logged. Non-finite values are omitted.
    pub metrics: BTreeMap<String, f64>,
    pub truth: BTreeMap<String, f64>,
    pub certificates: Vec<CertificateResult>,
    pub criteria: Vec<Verdict>,
    pub warnings: Vec<String>,
    /// Divergence guard or runtime error that stopped the run early.
    pub abort: Option<String>,
    pub samples: usize,
    pub artifacts: Vec<PathBuf>,
    pub passed: bool,
}

impl RunReport {
    /// Process exit code: 0 pass, 1 criteria failure, 3 runtime abort.
    pub fn exit_code(&self) -> i32 {
        if self.abort.is_some() {
            3
        } else if self.passed {
            0
        } else {
            1
        }
    }
}

/// Failure before any trajectory exists.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("assembly failed: {0}")]
    Assembly(#[from] adaptctl::Error),
    #[error("cannot write artifacts: {0}")]
    Io(#[from] std::io::Error),
}

fn simulate(system: System) -> adaptctl::Result<SimRun> {
    match system {
        System::Continuous { mut sys, x0, opts } => simulate_ct(sys.as_mut(), x0, &opts),
        System::Discrete { mut sys, steps, limit } => simulate_dt(sys.as_mut(), steps, limit),
    }
}

/// Runs `cfg`, evaluates its criteria and certificates, and writes
/// `trajectory.{csv,json}` and `report.json` under `out/<name>/`.
pub fn run_scenario(cfg: &ScenarioConfig, out: &Path, format: OutputFormat) -> Result<RunReport, RunError> {
    let assembled = assemble(cfg)?;
    let (run, runtime_error) = match simulate(assembled.system) {
        Ok(run) => (Some(run), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let dir = out.join(&cfg.name);
    fs::create_dir_all(&dir)?;
    let mut report = RunReport {
        name: cfg.name.clone(),
        kind: cfg.scenario.kind().into(),
        config: cfg.clone(),
        metrics: BTreeMap::new(),
        truth: assembled.truth.into_iter().collect(),
        certificates: Vec::new(),
        criteria: Vec::new(),
        warnings: assembled.warnings,
        abort: runtime_error,
        samples: 0,
        artifacts: Vec::new(),
        passed: false,
    };
    if let Some(run) = run {
        let traj = &run.trajectory;
        report.samples = traj.len();
        report.abort = run.abort.as_ref().map(ToString::to_string);
        if let Ok(v) = traj.channel("V") {
            report
                .metrics
                .insert("lyapunov_violations".into(), lyapunov_violations(v, LYAPUNOV_REL_TOL) as f64);
        }
        for c in &cfg.criteria {
            let name = c.metric.name().to_string();
            let verdict = match c.metric.evaluate(traj) {
                Ok(v) => {
                    if v.is_finite() {
                        report.metrics.insert(name.clone(), v);
                    }
                    Verdict {
                        name,
                        value: v.is_finite().then_some(v),
                        op: c.op,
                        threshold: c.threshold,
                        passed: c.op.holds(v, c.threshold),
                        error: None,
                    }
                }
                Err(e) => Verdict {
                    name,
                    value: None,
                    op: c.op,
                    threshold: c.threshold,
                    passed: false,
                    error: Some(e.to_string()),
                },
            };
            report.criteria.push(verdict);
        }
        report.certificates = cfg.analysis.certificates.iter().map(|c| evaluate(c, cfg, traj)).collect();
        if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
            let p = dir.join("trajectory.csv");
            traj.write_csv(&p)?;
            report.artifacts.push(p);
        }
        if matches!(format, OutputFormat::Json | OutputFormat::Both) {
            let p = dir.join("trajectory.json");
            traj.write_json(&p)?;
            report.artifacts.push(p);
        }
    } else {
        for c in &cfg.criteria {
            report.criteria.push(Verdict {
                name: c.metric.name().into(),
                value: None,
                op: c.op,
                threshold: c.threshold,
                passed: false,
                error: Some("no trajectory".into()),
            });
        }
    }
    report.passed = report.abort.is_none()
        && report.criteria.iter().all(|v| v.passed)
        && report.certificates.iter().all(|c| c.passed);
    let p = dir.join("report.json");
    report.artifacts.push(p.clone());
    fs::write(&p, serde_json::to_string_pretty(&report).expect("report serializes"))?;
    Ok(report)
}
