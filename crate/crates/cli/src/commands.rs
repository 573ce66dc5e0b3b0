use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use projgate_core::estimators::EstimateBundle;
use projgate_core::montecarlo::{replicate_data, run_monte_carlo, MonteCarloReport};
use projgate_core::rt::{select_subsample, TrimResult};
use projgate_core::simgen::Family;
use serde::Serialize;

use crate::csvio::{self, read_table, read_weights, HeaderMode, Table};
use crate::error::{CliError, CliResult};
use crate::manifest::{self, DataRun, Run, RunManifest, SCHEMA_VERSION};

pub struct Context {
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.outer_iter().map(|r| r.to_vec()).collect()
}

#[derive(Serialize)]
struct AuditEntry<'a> {
    row: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<&'a str>,
    gap: f64,
    threshold: f64,
    distance_from_median: f64,
    direction: usize,
}

#[derive(Serialize)]
struct Audit<'a> {
    schema_version: u32,
    n: usize,
    kept: usize,
    gamma: f64,
    directions_consumed: usize,
    trimmed: Vec<AuditEntry<'a>>,
}

fn audit<'a>(result: &TrimResult, table: &'a Table) -> Audit<'a> {
    Audit {
        schema_version: SCHEMA_VERSION,
        n: result.n(),
        kept: result.kept.len(),
        gamma: result.gamma,
        directions_consumed: result.directions_consumed,
        trimmed: result
            .trimmed
            .iter()
            .map(|t| AuditEntry {
                row: t.trimmed_index + 1,
                name: table.row_name(t.trimmed_index),
                gap: t.gap,
                threshold: t.threshold,
                distance_from_median: t.distance_from_median,
                direction: t.direction_ordinal,
            })
            .collect(),
    }
}

fn load(input: &str, header: HeaderMode) -> CliResult<Table> {
    read_table(Path::new(input), header)
}

fn trim_and_record(table: &Table, run: &DataRun, out: &Path) -> CliResult<TrimResult> {
    let result = select_subsample(&table.data, &run.rt)?;
    csvio::write_weights(
        &out.join("weights.csv"),
        &result.weights,
        table.row_names.as_deref(),
    )?;
    write_json(&out.join("audit.json"), &audit(&result, table))?;
    Ok(result)
}

#[derive(Serialize)]
struct PcaOut {
    eigenvalues: Vec<f64>,
    components: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct Estimates<'a> {
    schema_version: u32,
    n: usize,
    d: usize,
    kept: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    columns: Option<&'a [String]>,
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
    correlation: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pca: Option<PcaOut>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_report_csv(path: &Path, report: &MonteCarloReport) -> CliResult<()> {
    let s = &report.config.scenario;
    let (family, case, p, x0) = match s.family {
        Family::Multivariate { p, x0 } => {
            ("multivariate", String::new(), p.to_string(), x0.to_string())
        }
        Family::Functional { case } => {
            ("functional", case.to_string(), String::new(), String::new())
        }
    };
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "family",
        "case",
        "n",
        "p",
        "eps",
        "x0",
        "estimator",
        "bound",
        "replicates",
        "successes",
        "location_error",
        "correlation_error",
        "outliers_pruned",
        "core_pruned",
        "gamma",
    ])?;
    for row in &report.rows {
        w.write_record([
            family.to_string(),
            case.clone(),
            s.n.to_string(),
            p.clone(),
            s.eps.to_string(),
            x0.clone(),
            row.estimator.as_str().to_string(),
            fmt_opt(row.bound),
            row.replicates.to_string(),
            row.successes.to_string(),
            fmt_opt(row.location_error),
            fmt_opt(row.correlation_error),
            fmt_opt(row.outliers_pruned),
            fmt_opt(row.core_pruned),
            fmt_opt(row.gamma),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Emitted {
    schema_version: u32,
    replicate: usize,
    /// Seed of the replicate; pass it as `--seed` to `trim` to reproduce the
    /// in-process trimming.
    seed: u64,
    n: usize,
    outliers: usize,
}

/// Runs the command a manifest describes, writing all outputs to `ctx.out_dir`.
pub fn execute(m: &RunManifest, ctx: &Context, stdout: &mut dyn Write) -> CliResult<()> {
    let out = ctx.out_dir.as_path();
    std::fs::create_dir_all(out).map_err(|e| CliError::data(format!("{}: {e}", out.display())))?;
    match &m.run {
        Run::Trim(run) => {
            let table = load(&run.input, run.header)?;
            let r = trim_and_record(&table, run, out)?;
            writeln!(
                stdout,
                "trimmed {} of {} rows (gamma {}) using {} directions",
                r.trimmed.len(),
                r.n(),
                r.gamma,
                r.directions_consumed
            )?;
        }
        Run::Estimate {
            input,
            header,
            rt,
            weights,
            pca,
        } => {
            let table = load(input, *header)?;
            let w = match weights {
                Some(path) => {
                    let w = read_weights(Path::new(path))?;
                    if w.len() != table.data.n() {
                        return Err(CliError::data(format!(
                            "shape mismatch: {path} has {} weights, data has {} rows",
                            w.len(),
                            table.data.n()
                        )));
                    }
                    w
                }
                None => {
                    let run = DataRun {
                        input: input.clone(),
                        header: *header,
                        rt: rt.clone(),
                    };
                    trim_and_record(&table, &run, out)?.weights
                }
            };
            let kept = w.iter().filter(|&&v| v == 1).count();
            if kept == 0 {
                return Err(CliError::data("empty subsample: every row has weight 0"));
            }
            let b = EstimateBundle::compute(&table.data, &w, *pca)?;
            let est = Estimates {
                schema_version: SCHEMA_VERSION,
                n: table.data.n(),
                d: table.data.d(),
                kept,
                grid: table.data.grid().map(|g| g.points()),
                columns: table.column_names.as_deref(),
                mean: b.mean.to_vec(),
                covariance: rows(&b.covariance),
                correlation: rows(&b.correlation),
                pca: b.pca.map(|p| PcaOut {
                    eigenvalues: p.eigenvalues,
                    components: rows(&p.components),
                }),
            };
            write_json(&out.join("estimates.json"), &est)?;
            writeln!(stdout, "estimates from {kept} of {} rows", table.data.n())?;
        }
        Run::Simulate { config, emit_data } => {
            let report = run_monte_carlo(config, ctx.threads)?;
            write_report_csv(&out.join("report.csv"), &report)?;
            write_json(&out.join("report.json"), &report)?;
            if *emit_data {
                let data = replicate_data(config, 0)?;
                csvio::write_sample(&out.join("data.csv"), &data)?;
                csvio::write_labels(&out.join("labels.csv"), data.labels().unwrap_or_default())?;
                write_json(
                    &out.join("emitted.json"),
                    &Emitted {
                        schema_version: SCHEMA_VERSION,
                        replicate: 0,
                        seed: config.replicate_seed(0),
                        n: data.n(),
                        outliers: config.scenario.outlier_count(),
                    },
                )?;
            }
            writeln!(
                stdout,
                "{} replicates, {} report rows",
                config.replicates,
                report.rows.len()
            )?;
        }
        Run::Detect(run) => {
            let table = load(&run.input, run.header)?;
            let r = select_subsample(&table.data, &run.rt)?;
            write_json(&out.join("audit.json"), &audit(&r, &table))?;
            writeln!(
                stdout,
                "row,name,gap,threshold,distance_from_median,direction"
            )?;
            for t in &r.trimmed {
                writeln!(
                    stdout,
                    "{},{},{},{},{},{}",
                    t.trimmed_index + 1,
                    table.row_name(t.trimmed_index).unwrap_or(""),
                    t.gap,
                    t.threshold,
                    t.distance_from_median,
                    t.direction_ordinal
                )?;
            }
        }
    }
    write_json(&out.join(manifest::FILE_NAME), m)
}
