use std::fs;
use std::path::Path;

use oclust_core::{
    error_rates, gen_dataset, oclust_run, separation_experiment, BinMethod, BinPolicy, DeltaMode, ErrorRates,
    FitConfig, OclustConfig, OclustError, OclustResult, Proportions, RejectionRule, SimModel, SimModelSpec,
};
use serde_json::json;

use crate::args::{BinMethodArg, ModeArg, OclustArgs, ProportionsArg, RejectionArg, ScoreArgs, SeparationArgs, SimulateArgs};
use crate::error::{CliError, CliResult};
use crate::io::{self, fmt_f64, TraceRow};
use crate::manifest::{digest_bytes, sidecar_path, RunManifest};

pub fn oclust_config(args: &OclustArgs) -> OclustConfig {
    let method = match args.bin_method {
        BinMethodArg::EqualProbability => BinMethod::EqualProbability,
        BinMethodArg::EqualWidth => BinMethod::EqualWidth,
    };
    OclustConfig {
        clusters: args.clusters,
        max_outliers: args.max_outliers,
        fit: FitConfig {
            restarts: args.restarts,
            max_iter: args.max_iter,
            rel_tol: args.rel_tol,
            seed: args.seed,
            ..FitConfig::default()
        },
        bins: match args.bins {
            Some(b) => BinPolicy::Fixed(b, method),
            None => BinPolicy::Auto(method),
        },
        delta_mode: match args.mode {
            ModeArg::Refit => DeltaMode::Refit,
            ModeArg::Frozen => DeltaMode::Frozen,
        },
    }
}

fn summary_json(result: &OclustResult, p: usize, max_outliers: usize) -> serde_json::Value {
    let model = &result.final_model;
    json!({
        "manifest": "manifest.json",
        "n": result.n,
        "p": p,
        "clusters": model.num_components(),
        "max_outliers": max_outliers,
        "chosen_num_outliers": result.chosen_num_outliers,
        "alpha_hat": result.alpha_hat,
        "outlier_rows": result.outlier_indices,
        "final_loglik": result.final_loglik,
        "cluster_sizes": result.final_labels.counts(),
        "weights": model.weights(),
        "means": model.components().iter().map(|c| c.mean().as_slice().to_vec()).collect::<Vec<_>>(),
        "covariances": model.components().iter().map(|c| {
            let s = c.cov();
            (0..s.nrows()).map(|i| (0..s.ncols()).map(|j| s[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>()
        }).collect::<Vec<_>>(),
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json serializes");
    text.push('\n');
    io::write_text(path, &text)
}

pub fn cmd_oclust(args: &OclustArgs) -> CliResult<()> {
    let bytes = fs::read(&args.input).map_err(|e| CliError::io(&args.input, e))?;
    let dataset = io::read_dataset(&args.input)?;
    let config = oclust_config(args);
    let data = &dataset.data;
    let max_outliers = config.validate(data.n(), data.p())?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;

    let mut manifest = RunManifest::new(
        "oclust",
        args.seed,
        json!({
            "input": args.input.display().to_string(),
            "features": dataset.feature_names,
            "oclust": config,
            "resolved_max_outliers": max_outliers,
        }),
        Some(digest_bytes(&bytes)),
    );
    let trace_path = args.out.join("trace.csv");
    let result = match oclust_run(data, &config) {
        Ok(r) => r,
        Err(OclustError::Aborted { iteration, source, partial_trace }) => {
            let rows: Vec<TraceRow> = partial_trace.iter().map(TraceRow::from).collect();
            io::write_trace(&trace_path, &rows)?;
            manifest.add_output("trace.csv", &trace_path)?;
            manifest.write(&args.out.join("manifest.json"))?;
            return Err(OclustError::Aborted { iteration, source, partial_trace }.into());
        }
        Err(e) => return Err(e.into()),
    };

    io::write_trace(&trace_path, &io::trace_rows(&result))?;
    manifest.add_output("trace.csv", &trace_path)?;
    let labels_path = args.out.join("labels.csv");
    io::write_labels(&labels_path, &result.row_labels())?;
    manifest.add_output("labels.csv", &labels_path)?;
    let summary_path = args.out.join("summary.json");
    write_json(&summary_path, &summary_json(&result, data.p(), max_outliers))?;
    manifest.add_output("summary.json", &summary_path)?;
    manifest.write(&args.out.join("manifest.json"))?;
    eprintln!(
        "{} of {} rows flagged as outliers (alpha_hat = {:.4})",
        result.chosen_num_outliers, result.n, result.alpha_hat
    );
    Ok(())
}

pub fn simulate_spec(args: &SimulateArgs) -> CliResult<SimModelSpec> {
    let model: SimModel = args.model.parse()?;
    let proportions = match args.proportions {
        ProportionsArg::Equal => Proportions::Equal,
        ProportionsArg::Unequal => Proportions::Unequal,
    };
    let mut spec = SimModelSpec::new(model, args.dim, proportions, args.n_good, args.n_out, args.seed);
    spec.rejection = match args.rejection {
        RejectionArg::All => RejectionRule::AllClusters,
        RejectionArg::Nearest => RejectionRule::NearestCluster,
    };
    Ok(spec)
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<()> {
    let spec = simulate_spec(args)?;
    let ds = gen_dataset(&spec)?;
    io::write_simulated(&args.out, &ds)?;
    let mut manifest = RunManifest::new("simulate", args.seed, json!(spec), None);
    let name = args.out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    manifest.add_output(&name, &args.out)?;
    manifest.write(&sidecar_path(&args.out))
}

pub fn parse_dims(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(p) if p >= 2 => Ok(p),
            _ => Err(CliError::Input(format!("bad dimension '{t}' (need an integer >= 2)"))),
        })
        .collect()
}

/// `start:stop:step` (inclusive, values rounded to 10 decimals) or a comma list.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Input(format!("bad grid '{s}'"));
    let num = |t: &str| t.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    let values: Vec<f64> = if s.contains(':') {
        let parts: Vec<f64> = s.split(':').map(|t| num(t).ok_or_else(bad)).collect::<CliResult<_>>()?;
        let [start, stop, step] = parts[..] else { return Err(bad()) };
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=count).map(|k| ((start + k as f64 * step) * 1e10).round() / 1e10).collect()
    } else {
        s.split(',').map(|t| num(t).ok_or_else(bad)).collect::<CliResult<_>>()?
    };
    if values.is_empty() {
        return Err(bad());
    }
    if let Some(v) = values.iter().find(|v| !(-0.9 - 1e-12..=0.9 + 1e-12).contains(*v)) {
        return Err(CliError::Input(format!("grid value {v} outside [-0.9, 0.9]")));
    }
    Ok(values)
}

pub fn cmd_separation_study(args: &SeparationArgs) -> CliResult<usize> {
    let dims = parse_dims(&args.dims)?;
    let grid = parse_grid(&args.grid)?;
    if args.replicates == 0 {
        return Err(CliError::Input("need at least one replicate".into()));
    }
    let mut rows = vec![vec![
        "separation".to_string(),
        "p".into(),
        "replicates".into(),
        "achieved_jstar".into(),
        "mean_relative_gap".into(),
    ]];
    let mut missing = 0;
    for &target in &grid {
        for &p in &dims {
            let (achieved, gap) = match separation_experiment(p, target, args.replicates, args.seed) {
                Ok(r) => (fmt_f64(r.achieved), fmt_f64(r.relative_gap)),
                Err(e) => {
                    eprintln!("warning: J* = {target}, p = {p}: {e}");
                    missing += 1;
                    (String::new(), String::new())
                }
            };
            rows.push(vec![format!("{target}"), p.to_string(), args.replicates.to_string(), achieved, gap]);
        }
    }
    let file = fs::File::create(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file);
    for r in &rows {
        w.write_record(r).map_err(|e| CliError::csv(&args.out, e))?;
    }
    w.flush().map_err(|e| CliError::io(&args.out, e))?;
    drop(w);

    let config = json!({ "dims": dims, "grid": grid, "replicates": args.replicates });
    let mut manifest = RunManifest::new("separation-study", args.seed, config, None);
    let name = args.out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    manifest.add_output(&name, &args.out)?;
    manifest.write(&sidecar_path(&args.out))?;
    if missing > 0 {
        eprintln!("{missing} cell(s) missing");
    }
    Ok(missing)
}

pub fn score(args: &ScoreArgs) -> CliResult<ErrorRates> {
    let pred = io::read_labels(&args.pred)?;
    let truth = io::read_dataset(&args.truth)?;
    let mask = match (truth.outlier_mask, truth.true_labels) {
        (Some(m), _) => m,
        (None, Some(l)) => l.iter().map(|&v| v == 0).collect(),
        (None, None) => {
            return Err(CliError::Input(format!("{} has no is_outlier or true_label column", args.truth.display())))
        }
    };
    if pred.len() != mask.len() {
        return Err(CliError::Input(format!("{} predicted rows but {} truth rows", pred.len(), mask.len())));
    }
    let predicted: Vec<bool> = pred.iter().map(Option::is_none).collect();
    Ok(error_rates(&predicted, &mask)?)
}

pub fn cmd_score(args: &ScoreArgs) -> CliResult<()> {
    let rates = score(args)?;
    println!("{}", serde_json::to_string_pretty(&rates).expect("json serializes"));
    Ok(())
}
