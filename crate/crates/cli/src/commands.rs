use std::path::PathBuf;
use std::time::Instant;

use serde_json::{json, Value};
use uqd_core::bne::{
    bne_decompose_epistemic, grid_for_targets, linspace, predictive_mean, sample_nested, BneData, BneQuery, Nesting,
};
use uqd_core::entropy::decompose;
use uqd_core::gp::{gp_decompose, gp_fit};
use uqd_core::likelihood::{confidence_region, fisher_information, mle_fit, InformationMode};
use uqd_core::simgen::{bootstrap_ensemble, generate, Scenario};
use uqd_core::{Mat, MleResult, PosteriorEnsemble, ProbVector, Sample};

use crate::args::{BneArgs, Common, EntropyArgs, GpArgs, MleArgs, SimgenArgs};
use crate::config::{resolve, set_path, BneRunConfig, EntropyConfig, GpConfig, MleConfig, SimgenConfig};
use crate::error::{CliError, CliResult};
use crate::io::{curves_csv, dataset_csv, dataset_from_table, read_table, DatasetSchema, Table};
use crate::report::{Diagnostics, MleReport, QueryReport, RegimeDiagnostics, ReportEnvelope};

/// Everything a run produces. Nothing touches the filesystem until the
/// whole computation has succeeded.
#[derive(Debug, Default)]
pub struct Output {
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub stdout: Option<String>,
}

impl Output {
    fn with_report(common: &Common, json: String) -> Output {
        match &common.report {
            Some(p) => Output {
                files: vec![(p.clone(), json.into_bytes())],
                stdout: None,
            },
            None => Output {
                files: vec![],
                stdout: Some(json),
            },
        }
    }

    fn add_file(mut self, path: Option<&PathBuf>, bytes: impl FnOnce() -> CliResult<String>) -> CliResult<Output> {
        if let Some(p) = path {
            self.files.push((p.clone(), bytes()?.into_bytes()));
        }
        Ok(self)
    }
}

fn flags(args: &impl serde::Serialize) -> Value {
    serde_json::to_value(args).expect("flag structs serialize")
}

fn runtime(common: &Common, start: Instant) -> Option<f64> {
    common.timings.then(|| start.elapsed().as_secs_f64() * 1e3)
}

pub fn mle(args: &MleArgs) -> CliResult<Output> {
    let start = Instant::now();
    let cfg: MleConfig = resolve(args.common.config.as_deref(), flags(args))?;
    let family = cfg.family()?;
    let table = read_table(&cfg.data)?;
    let col = match &cfg.column {
        Some(name) => table.require(name)?,
        None if table.headers.len() == 1 => 0,
        None => {
            return Err(CliError::SchemaMismatch {
                path: table.path.clone(),
                column: "<column>".into(),
                detail: "file has several columns; choose one with --column".into(),
            })
        }
    };
    let sample = Sample::new(table.column(col))?;
    let fit = mle_fit(family, &sample)?;
    let information = match cfg.information {
        InformationMode::Observed => fit.fisher.clone(),
        InformationMode::Expected => fisher_information(family, &fit.theta_hat, &sample, InformationMode::Expected)?,
    };
    let confidence = confidence_region(
        &MleResult {
            fisher: information.clone(),
            ..fit.clone()
        },
        cfg.level,
    )?;
    let report = MleReport {
        family,
        n: fit.n,
        theta_hat: fit.theta_hat,
        loglik_at_max: fit.loglik_at_max,
        aic: fit.aic,
        information_mode: cfg.information,
        information: (0..information.rows()).map(|i| information.row(i).to_vec()).collect(),
        confidence,
    };
    let diagnostics = Diagnostics {
        rows: Some(table.rows.len()),
        runtime_ms: runtime(&args.common, start),
        ..Diagnostics::default()
    };
    let env = ReportEnvelope::new("mle", &cfg, vec![report], diagnostics);
    Ok(Output::with_report(&args.common, env.to_json()))
}

/// Query points carrying the given feature columns, in order.
fn query_points(table: &Table, names: &[String]) -> CliResult<Mat> {
    let cols = names.iter().map(|n| table.require(n)).collect::<CliResult<Vec<_>>>()?;
    Ok(table.select(&cols))
}

pub fn gp(args: &GpArgs) -> CliResult<Output> {
    let start = Instant::now();
    let cfg: GpConfig = resolve(args.common.config.as_deref(), flags(args))?;
    let kernel = cfg.kernel()?;
    let train = dataset_from_table(&read_table(&cfg.train)?, &DatasetSchema::regression("y"))?;
    let names = train.feature_names().to_vec();
    let queries = match (&cfg.query, cfg.grid) {
        (Some(path), None) => query_points(&read_table(path)?, &names)?,
        (None, Some(g)) => {
            if names.len() != 1 {
                return Err(CliError::Config(format!(
                    "--grid needs a single feature column, training data has {}",
                    names.len()
                )));
            }
            if g.n > 0 && !(g.lo <= g.hi) {
                return Err(CliError::Config(format!(
                    "grid lower end {} exceeds upper end {}",
                    g.lo, g.hi
                )));
            }
            Mat::column(&linspace(g.lo, g.hi, g.n))?
        }
        _ => return Err(CliError::Config("give exactly one of --query or --grid".into())),
    };
    let offset = if cfg.center_y && !train.is_empty() {
        train.target().iter().sum::<f64>() / train.len() as f64
    } else {
        0.0
    };
    let y: Vec<f64> = train.target().iter().map(|v| v - offset).collect();
    let model = gp_fit(train.features(), &y, kernel, cfg.noise_variance)?;
    let posts = model.predict_batch(&queries)?;

    let reports: Vec<QueryReport> = posts
        .iter()
        .enumerate()
        .map(|(i, p)| QueryReport {
            x: Some(queries.row(i).to_vec()),
            mean: Some(p.mean + offset),
            uncertainty: gp_decompose(p),
        })
        .collect();
    let diagnostics = Diagnostics {
        rows: Some(train.len()),
        jitter_used: Some(model.jitter_used()),
        runtime_ms: runtime(&args.common, start),
        ..Diagnostics::default()
    };
    let mu: Vec<f64> = reports.iter().map(|r| r.mean.expect("set above")).collect();
    let bands: Vec<_> = reports.iter().map(|r| r.uncertainty.clone()).collect();
    let env = ReportEnvelope::new("gp", &cfg, reports, diagnostics);
    Output::with_report(&args.common, env.to_json())
        .add_file(args.curves.as_ref(), || curves_csv(&names, &queries, Some(&mu), &bands))
}

/// Reads member rows; a header is optional, and a leading `weight` column
/// (by header name) carries member weights.
fn read_ensemble(path: &std::path::Path) -> CliResult<PosteriorEnsemble> {
    let shown = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut records = Vec::new();
    for r in reader.records() {
        records.push(r.map_err(|e| CliError::io(path, e))?);
    }
    let has_header = records
        .first()
        .is_some_and(|r| r.iter().any(|c| c.parse::<f64>().is_err()));
    let headers: Vec<String> = if has_header {
        records.remove(0).iter().map(str::to_string).collect()
    } else {
        let width = records.first().map_or(0, |r| r.len());
        (1..=width).map(|i| format!("p{i}")).collect()
    };
    let weighted = headers.first().is_some_and(|h| h == "weight");
    let mut members = Vec::with_capacity(records.len());
    let mut weights = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let row = i + 1;
        let mut values = Vec::with_capacity(rec.len());
        for (cell, name) in rec.iter().zip(&headers) {
            let v: f64 = cell.parse().map_err(|_| CliError::InvalidValue {
                path: shown.clone(),
                row,
                column: name.clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(CliError::NonFiniteValue {
                    path: shown,
                    row,
                    column: name.clone(),
                });
            }
            values.push(v);
        }
        if weighted {
            weights.push(values.remove(0));
        }
        members.push(ProbVector::new(values)?);
    }
    Ok(if weighted {
        PosteriorEnsemble::weighted(members, weights)?
    } else {
        PosteriorEnsemble::uniform(members)?
    })
}

pub fn entropy(args: &EntropyArgs) -> CliResult<Output> {
    let start = Instant::now();
    let cfg: EntropyConfig = resolve(args.common.config.as_deref(), flags(args))?;
    match (&cfg.ensemble, &cfg.train) {
        (Some(path), None) => {
            if cfg.query.is_some() || args.curves.is_some() {
                return Err(CliError::Config(
                    "--query and --curves apply to bootstrap mode (--train) only".into(),
                ));
            }
            let ens = read_ensemble(path)?;
            let report = QueryReport {
                x: None,
                mean: None,
                uncertainty: decompose(&ens),
            };
            let diagnostics = Diagnostics {
                rows: Some(ens.n_members()),
                runtime_ms: runtime(&args.common, start),
                ..Diagnostics::default()
            };
            let env = ReportEnvelope::new("entropy", &cfg, vec![report], diagnostics);
            Ok(Output::with_report(&args.common, env.to_json()))
        }
        (None, Some(train_path)) => {
            let query_path = cfg
                .query
                .as_ref()
                .ok_or_else(|| CliError::Config("bootstrap mode needs --query".into()))?;
            let train = dataset_from_table(&read_table(train_path)?, &DatasetSchema::regression("label"))?;
            let names = train.feature_names().to_vec();
            let queries = query_points(&read_table(query_path)?, &names)?;
            let ensembles = bootstrap_ensemble(&train, cfg.members, &queries, cfg.seed)?;
            let reports: Vec<QueryReport> = ensembles
                .iter()
                .enumerate()
                .map(|(i, e)| QueryReport {
                    x: Some(queries.row(i).to_vec()),
                    mean: None,
                    uncertainty: decompose(e),
                })
                .collect();
            let bands: Vec<_> = reports.iter().map(|r| r.uncertainty.clone()).collect();
            let diagnostics = Diagnostics {
                rows: Some(train.len()),
                runtime_ms: runtime(&args.common, start),
                ..Diagnostics::default()
            };
            let env = ReportEnvelope::new("entropy", &cfg, reports, diagnostics);
            Output::with_report(&args.common, env.to_json())
                .add_file(args.curves.as_ref(), || curves_csv(&names, &queries, None, &bands))
        }
        _ => Err(CliError::Config("give exactly one of --ensemble or --train".into())),
    }
}

/// Base-prediction columns `f1..fK` in order. They must be numbered
/// contiguously from 1.
fn base_columns(table: &Table) -> CliResult<Vec<usize>> {
    let mut found: Vec<(usize, usize)> = table
        .headers
        .iter()
        .enumerate()
        .filter_map(|(c, h)| {
            let k = h.strip_prefix('f')?.parse::<usize>().ok()?;
            Some((k, c))
        })
        .collect();
    found.sort_unstable();
    if found.is_empty() {
        return Err(CliError::SchemaMismatch {
            path: table.path.clone(),
            column: "f1".into(),
            detail: "no base-prediction columns f1..fK".into(),
        });
    }
    for (i, (k, _)) in found.iter().enumerate() {
        if *k != i + 1 {
            return Err(CliError::SchemaMismatch {
                path: table.path.clone(),
                column: format!("f{}", i + 1),
                detail: "base-prediction columns must be numbered f1..fK without gaps".into(),
            });
        }
    }
    Ok(found.into_iter().map(|(_, c)| c).collect())
}

pub fn bne(args: &BneArgs) -> CliResult<Output> {
    let start = Instant::now();
    let mut overrides = json!({});
    if let Some(p) = &args.train {
        set_path(&mut overrides, "train", json!(p));
    }
    if let Some(p) = &args.query {
        set_path(&mut overrides, "query", json!(p));
    }
    if let Some(v) = args.noise_variance {
        set_path(&mut overrides, "noise_variance", json!(v));
    }
    if let Some(s) = args.samples {
        set_path(&mut overrides, "sampler.n_samples", json!(s));
    }
    if let Some(s) = args.seed {
        set_path(&mut overrides, "sampler.seed", json!(s));
    }
    let cfg: BneRunConfig = resolve(args.common.config.as_deref(), overrides)?;

    let train = read_table(&cfg.train)?;
    let y_col = train.require("y")?;
    let base_cols = base_columns(&train)?;
    let feature_cols: Vec<usize> = (0..train.headers.len())
        .filter(|c| *c != y_col && !base_cols.contains(c))
        .collect();
    if feature_cols.is_empty() {
        return Err(CliError::SchemaMismatch {
            path: train.path.clone(),
            column: "<features>".into(),
            detail: "need at least one feature column besides y and f1..fK".into(),
        });
    }
    let feature_names = train.names(&feature_cols);
    let base_names = train.names(&base_cols);
    let x = train.select(&feature_cols);
    let y = train.column(y_col);

    if !(cfg.noise_variance > 0.0) {
        return Err(CliError::Config(format!(
            "noise_variance must be positive, got {}",
            cfg.noise_variance
        )));
    }
    let y_grid = match &cfg.grid.values {
        Some(v) => v.clone(),
        None => grid_for_targets(&y, cfg.noise_variance.sqrt(), cfg.grid.pad_sds, cfg.grid.edges),
    };
    let knots = match &cfg.knots.points {
        Some(rows) => Mat::from_rows(rows)?,
        None if feature_cols.len() == 1 => {
            let xs = x.col_to_vec(0);
            let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Mat::column(&linspace(lo, hi, cfg.knots.count))?
        }
        None => {
            return Err(CliError::Config(
                "knots.points is required when there is more than one feature column".into(),
            ))
        }
    };
    let core = cfg.to_core(y_grid, knots);
    core.validate()?;
    let data = BneData::new(x, y, train.select(&base_cols))?;

    let query_table = read_table(&cfg.query)?;
    let qx = query_points(&query_table, &feature_names)?;
    let qf = query_points(&query_table, &base_names)?;

    let posteriors = sample_nested(&core, &data)?;
    let mut reports = Vec::with_capacity(qx.rows());
    for i in 0..qx.rows() {
        let q = BneQuery {
            x: qx.row(i).to_vec(),
            base: qf.row(i).to_vec(),
        };
        reports.push(QueryReport {
            x: Some(q.x.clone()),
            mean: Some(predictive_mean(&posteriors.m2, &core, &q)?),
            uncertainty: bne_decompose_epistemic(&posteriors, &core, &q)?,
        });
    }
    let sampler = Nesting::ALL
        .iter()
        .map(|&n| {
            let p = posteriors.get(n);
            RegimeDiagnostics {
                nesting: n,
                draws: p.len(),
                acceptance_rate: p.acceptance_rate,
                blocks: p.blocks.clone(),
            }
        })
        .collect();
    let diagnostics = Diagnostics {
        rows: Some(data.len()),
        sampler: Some(sampler),
        runtime_ms: runtime(&args.common, start),
        ..Diagnostics::default()
    };
    let env = ReportEnvelope::new("bne", &cfg, reports, diagnostics);
    Ok(Output::with_report(&args.common, env.to_json()))
}

pub fn simgen(args: &SimgenArgs) -> CliResult<Output> {
    let cfg: SimgenConfig = resolve(args.config.as_deref(), flags(args))?;
    let data = generate(&Scenario::new(cfg.scenario, cfg.n, cfg.seed));
    Ok(Output {
        files: vec![(args.out.clone(), dataset_csv(&data).into_bytes())],
        stdout: None,
    })
}
