use std::fs;
use std::path::{Path, PathBuf};

use crate::bounds::BoundCurve;
use crate::error::Result;
use crate::policies::format_float;

use super::metrics::{audit_robustness, batch_bounds, five_number_summary, metrics};
use super::run::BatchReport;

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(path)?)
}

fn opt_float(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// Writes a bound curve as `lambda,bound`.
pub fn write_curve(path: &Path, curve: &BoundCurve) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["lambda", "bound"])?;
    for (l, b) in &curve.points {
        w.write_record([format_float(*l), format_float(*b)])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes batch tables and bound curves into `dir`; returns the written paths.
///
/// * `summary.csv`: `policy,avg,cr,cr_excluded`
/// * `episodes.csv`: `episode,policy,cost,ratio_to_opt`
/// * `cost_quantiles.csv`, `ratio_quantiles.csv`: `policy,min,q25,median,q75,max`
/// * `audit.csv`: one row per lambda
/// * `batch_bounds.csv`: measured LADO average against the bound, when ML ran
/// * `bound_<name>.csv`: `lambda,bound` per curve
pub fn emit_tables(batch: &BatchReport, curves: &[BoundCurve], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let ms = metrics(batch)?;

    let path = dir.join("summary.csv");
    let mut w = writer(&path)?;
    w.write_record(["policy", "avg", "cr", "cr_excluded"])?;
    for m in &ms {
        w.write_record([m.policy.clone(), format_float(m.avg), opt_float(m.cr), m.cr_excluded.to_string()])?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("episodes.csv");
    let mut w = writer(&path)?;
    w.write_record(["episode", "policy", "cost", "ratio_to_opt"])?;
    for ep in &batch.episodes {
        let opt = ep.cost("OPT").filter(|c| *c > 0.0);
        for (policy, cost) in &ep.costs {
            w.write_record([
                ep.episode.to_string(),
                policy.clone(),
                format_float(*cost),
                opt_float(opt.map(|o| cost / o)),
            ])?;
        }
    }
    w.flush()?;
    written.push(path);

    let quantile_table = |name: &str, value: &dyn Fn(&str, usize) -> Option<f64>| -> Result<PathBuf> {
        let path = dir.join(name);
        let mut w = writer(&path)?;
        w.write_record(["policy", "min", "q25", "median", "q75", "max"])?;
        for policy in &batch.policies {
            let values: Vec<f64> = (0..batch.episodes.len()).filter_map(|i| value(policy, i)).collect();
            if values.is_empty() {
                continue;
            }
            let mut row = vec![policy.clone()];
            row.extend(five_number_summary(&values).iter().map(|x| format_float(*x)));
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(path)
    };
    written.push(quantile_table("cost_quantiles.csv", &|p, i| batch.episodes[i].cost(p))?);
    written.push(quantile_table("ratio_quantiles.csv", &|p, i| {
        let ep = &batch.episodes[i];
        let opt = ep.cost("OPT").filter(|c| *c > 0.0)?;
        ep.cost(p).map(|c| c / opt)
    })?);

    if !batch.lambdas.is_empty() {
        let path = dir.join("audit.csv");
        let mut w = writer(&path)?;
        w.write_record([
            "lambda",
            "episodes",
            "max_ratio",
            "ratio_violations",
            "slack_violations",
            "worst_slack",
        ])?;
        for &lambda in &batch.lambdas {
            let a = audit_robustness(batch, lambda)?;
            w.write_record([
                format_float(lambda),
                a.episodes.to_string(),
                format_float(a.max_ratio),
                a.ratio_violations.to_string(),
                a.slack_violations.to_string(),
                format_float(a.worst_slack),
            ])?;
        }
        w.flush()?;
        written.push(path);

        if batch.policies.iter().any(|p| p == "ML") {
            let path = dir.join("batch_bounds.csv");
            let mut w = writer(&path)?;
            w.write_record(["lambda", "avg_lado", "avg_expert", "avg_ml", "omega", "scale", "bound"])?;
            for b in batch_bounds(batch)? {
                w.write_record([
                    format_float(b.lambda),
                    format_float(b.avg_lado),
                    format_float(b.avg_expert),
                    format_float(b.avg_ml),
                    format_float(b.omega),
                    format_float(b.scale),
                    format_float(b.bound),
                ])?;
            }
            w.flush()?;
            written.push(path);
        }
    }

    for curve in curves {
        let path = dir.join(format!("bound_{}.csv", curve.name));
        write_curve(&path, curve)?;
        written.push(path);
    }
    Ok(written)
}
