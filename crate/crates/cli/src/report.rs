//! Summary across run manifests: one row per checked property, in a fixed order, with
//! rows for experiments that were not run.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::config::Experiment;
use crate::error::{CliError, CliResult};
use crate::manifest::{RunManifest, Status};

/// Every property the suite checks and the experiment that owns it.
pub const PROPERTIES: [(&str, Experiment); 17] = [
    ("kernel oracle", Experiment::KernelCheck),
    ("boundary-hit law", Experiment::Simulate),
    ("Levy system jump census", Experiment::Simulate),
    ("mean exit time upper bound", Experiment::ExitTime),
    ("mean exit time lower bound", Experiment::ExitTime),
    ("vertical exit-time control", Experiment::ExitTime),
    ("exit-position comparability", Experiment::ExitTime),
    ("box hitting lower bound", Experiment::Hitting),
    ("Krylov-Safonov function", Experiment::Phi),
    ("Harnack inequality", Experiment::Harnack),
    ("Holder decay of oscillation", Experiment::Holder),
    ("resolvent identity", Experiment::Resolvent),
    ("Holder continuity of resolvents", Experiment::Resolvent),
    ("horizontal square function bound", Experiment::Lp),
    ("majorant inequality", Experiment::Lp),
    ("full horizontal square function", Experiment::Lp),
    ("maximal function domination", Experiment::Lp),
];

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub property: String,
    pub experiment: Experiment,
    /// `pass`, `fail`, `recorded` or `not run`.
    pub status: String,
    /// Parameter cells, as `d=.. alpha=..`.
    pub cells: Vec<String>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub rows: Vec<ReportRow>,
}

fn cell(m: &RunManifest) -> String {
    format!("d={} alpha={}", m.config.d, m.config.alpha)
}

/// Aggregates manifests from compatible runs: same code version and seed, and at most
/// one configuration per experiment and parameter cell.
pub fn emit_report(manifests: &[RunManifest]) -> CliResult<Report> {
    if let Some(first) = manifests.first() {
        for m in manifests {
            if m.version != first.version {
                return Err(CliError::Validation(format!(
                    "incompatible manifests: code versions `{}` and `{}`",
                    first.version, m.version
                )));
            }
            if m.config.seed != first.config.seed {
                return Err(CliError::Validation(format!(
                    "incompatible manifests: seeds {} and {}",
                    first.config.seed, m.config.seed
                )));
            }
        }
    }
    let mut by_cell: BTreeMap<(Experiment, String), &RunManifest> = BTreeMap::new();
    for m in manifests {
        if let Some(prev) = by_cell.insert((m.experiment, cell(m)), m) {
            if prev.config_toml != m.config_toml {
                return Err(CliError::Validation(format!(
                    "incompatible manifests: two different `{}` configurations for {}",
                    m.experiment.name(),
                    cell(m)
                )));
            }
        }
    }
    let rows = PROPERTIES
        .iter()
        .map(|&(property, experiment)| {
            let mut cells = Vec::new();
            let mut statuses = Vec::new();
            let mut details = Vec::new();
            for ((e, c), m) in &by_cell {
                if *e != experiment {
                    continue;
                }
                match m.checks.iter().find(|k| k.property == property) {
                    Some(k) => {
                        cells.push(c.clone());
                        statuses.push(k.status);
                        details.push(format!("[{c}] {}", k.detail));
                    }
                    None => details.push(format!("[{c}] not checked in this cell")),
                }
            }
            let status = if statuses.is_empty() {
                "not run"
            } else if statuses.contains(&Status::Fail) {
                "fail"
            } else if statuses.iter().all(|s| *s == Status::Recorded) {
                "recorded"
            } else {
                "pass"
            };
            ReportRow {
                property: property.to_string(),
                experiment,
                status: status.to_string(),
                cells,
                detail: details.join("; "),
            }
        })
        .collect();
    Ok(Report { rows })
}

impl Report {
    /// Plain-text table for reading.
    pub fn to_text(&self) -> String {
        let w = self.rows.iter().map(|r| r.property.len()).max().unwrap_or(8).max(8);
        let mut s = String::new();
        let _ = writeln!(s, "{:<w$}  {:<12}  {:<8}  cells", "property", "experiment", "status");
        for r in &self.rows {
            let _ = writeln!(s, "{:<w$}  {:<12}  {:<8}  {}", r.property, r.experiment.name(), r.status, r.cells.len());
        }
        s
    }

    /// Machine-readable form for plotting: property, experiment, status, cells, detail.
    pub fn to_csv(&self) -> String {
        let q = |v: &str| format!("\"{}\"", v.replace('"', "\"\""));
        let mut s = String::from("property,experiment,status,cells,detail\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                q(&r.property),
                r.experiment.name(),
                r.status,
                q(&r.cells.join(";")),
                q(&r.detail)
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::manifest::{Check, CODE_VERSION};

    fn manifest(e: Experiment, checks: Vec<Check>) -> RunManifest {
        let config = ExperimentConfig::defaults(e);
        RunManifest {
            experiment: e,
            version: CODE_VERSION.into(),
            config_toml: config.to_toml(),
            config,
            wall_time_s: 0.0,
            outputs: vec![],
            checks,
        }
    }

    fn kc() -> RunManifest {
        manifest(
            Experiment::KernelCheck,
            vec![Check { property: "kernel oracle".into(), status: Status::Pass, detail: "ok".into() }],
        )
    }

    #[test]
    fn missing_experiments_are_rows_not_gaps() {
        let r = emit_report(&[kc()]).unwrap();
        assert_eq!(r.rows.len(), PROPERTIES.len());
        assert_eq!(r.rows[0].status, "pass");
        assert!(r.rows[1..].iter().all(|row| row.status == "not run"));
    }

    #[test]
    fn seed_mismatch_is_incompatible() {
        let mut b = kc();
        b.config.seed += 1;
        assert!(emit_report(&[kc(), b]).is_err());
    }

    #[test]
    fn conflicting_configurations_are_incompatible() {
        let mut b = kc();
        b.config_toml.push_str("# changed\n");
        assert!(emit_report(&[kc(), b]).is_err());
        assert!(emit_report(&[kc(), kc()]).is_ok());
    }
}
