//! CSV results with a re-runnable metadata sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::experiment::{AggregateResult, ExperimentReport};
use crate::error::Result;

pub const CSV_HEADER: [&str; 4] = ["t", "metric_mean", "metric_ci_low", "metric_ci_high"];

/// `results.csv` → `results.meta.toml`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.toml")
}

/// Writes `t,metric_mean,metric_ci_low,metric_ci_high` rows and, next to the
/// CSV, the full config as TOML. Loading the sidecar with
/// [`ExperimentConfig::load`] reproduces the run.
pub fn emit_csv(result: &AggregateResult, config: &ExperimentConfig, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for p in &result.points {
        w.write_record([
            p.t.to_string(),
            p.mean.to_string(),
            p.ci_low().to_string(),
            p.ci_high().to_string(),
        ])?;
    }
    w.flush()?;

    let failed = result.failures().count();
    let header = format!(
        "# algorithm = {}\n# metric = {}\n# runs = {}\n# failed_runs = {failed}\n# seed = {}\n\n",
        result.algorithm.name(),
        result.metric.name(),
        result.runs.len(),
        config.seed,
    );
    fs::write(sidecar_path(path), header + &config.to_toml()?)?;
    Ok(())
}

/// One CSV (plus sidecar) per algorithm in `dir`, named
/// `<experiment>-<algorithm>.csv`. Returns the CSV paths.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(report.results.len());
    for r in &report.results {
        let path = dir.join(format!("{}-{}.csv", report.config.name, r.algorithm.name()));
        emit_csv(r, &report.config, &path)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Human-readable summary: the metric at each report point per algorithm, and
/// ETC identification statistics when an oracle was available.
pub fn summary(report: &ExperimentReport) -> String {
    let cfg = &report.config;
    let mut out = format!(
        "{} (seed {}, {} replications, metric {})\n",
        cfg.name,
        cfg.seed,
        cfg.replications,
        cfg.metric.name()
    );
    for r in &report.results {
        out.push_str(&format!("{}\n", r.algorithm.name()));
        let show: Vec<_> = if r.points.len() > 10 {
            r.points.iter().step_by(r.points.len().div_ceil(10)).chain(r.points.last()).collect()
        } else {
            r.points.iter().collect()
        };
        for p in show {
            out.push_str(&format!(
                "  t = {:>8}  {:.6} ± {:.6}  (n = {})\n",
                p.t, p.mean, p.half_width, p.n
            ));
        }
        for (run, err) in r.failures() {
            out.push_str(&format!("  run {run} failed: {err}\n"));
        }
    }
    let horizons = report.etc_runs.iter().map(Vec::len).max().unwrap_or(0);
    for h in 0..horizons {
        let infos: Vec<_> = report.etc_runs.iter().filter_map(|r| r.get(h)).collect();
        let Some(first) = infos.first() else { continue };
        let truncated = infos.iter().filter(|i| i.truncated).count();
        out.push_str(&format!(
            "etc-slate at T = {}: N̂ = {}, exploration rounds = {}, truncated in {truncated} of {} runs\n",
            first.horizon,
            first.n_hat,
            first.explore_rounds,
            infos.len()
        ));
        if let Some((rate, n)) = report.misidentification_rate(h) {
            out.push_str(&format!(
                "etc-slate at T = {}: misidentification rate {rate:.4} over {n} runs\n",
                first.horizon
            ));
        }
    }
    out
}
