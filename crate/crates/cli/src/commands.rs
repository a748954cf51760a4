use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use l1sc_core::dataset::{inject_noise, save_dataset, synth_gmm, Format};
use l1sc_core::eval::{best_dimension_table, fit_method, run_protocol, EvalReport, CSV_HEADER};
use l1sc_core::projection::{Method, Projection};
use l1sc_core::rng::derive_seed;
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::CliError;

const NOISE_STREAM: u64 = 0x6e6f697365;

/// CSV text with the reproducibility header: command, seed and config hash.
fn write_csv(cfg: &ExperimentConfig, name: &str, command: &str, header: &str, rows: &[String]) -> Result<PathBuf, CliError> {
    let path = cfg.out.join(name);
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "# l1sc {command}")?;
    writeln!(w, "# seed={}", cfg.seed)?;
    writeln!(w, "# config_sha256={}", cfg.hash())?;
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(path)
}

fn write_json(cfg: &ExperimentConfig, name: &str, value: &serde_json::Value) -> Result<PathBuf, CliError> {
    let path = cfg.out.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).expect("valid json") + "\n")?;
    Ok(path)
}

/// Keeps the settings next to the results so a run can be repeated with
/// `--config <out>/config.txt`.
fn write_config(cfg: &ExperimentConfig) -> Result<(), CliError> {
    std::fs::write(cfg.out.join("config.txt"), cfg.to_text())?;
    Ok(())
}

fn single_method(cfg: &ExperimentConfig) -> Result<Method, CliError> {
    match cfg.methods.as_slice() {
        [m] => Ok(*m),
        _ => Err(CliError::Usage("this command takes exactly one method".into())),
    }
}

pub fn fit(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let method = single_method(cfg)?;
    let ds = cfg.load()?;
    let solver = cfg.protocol(method).solver;
    let projection = fit_method(method, &ds, cfg.d, &solver)?;
    let path = cfg.out.join("projection.bin");
    let mut w = BufWriter::new(File::create(&path)?);
    projection.write(&mut w)?;
    w.flush()?;
    write_json(
        cfg,
        "fit.json",
        &json!({
            "method": method,
            "input_dim": projection.input_dim(),
            "output_dim": projection.output_dim(),
            "seed": cfg.seed,
            "config_sha256": cfg.hash(),
            "solver": projection.solver(),
            "columns": projection.columns(),
            "notes": projection.notes(),
        }),
    )?;
    write_config(cfg)?;
    println!("{method}: {} -> {} dimensions, written to {}", projection.input_dim(), projection.output_dim(), path.display());
    Ok(())
}

pub fn transform(cfg: &ExperimentConfig, projection: &Path, output: Option<PathBuf>) -> Result<(), CliError> {
    let projection = Projection::read(BufReader::new(File::open(projection)?))?;
    let ds = cfg.load()?;
    let y = projection.transform(&ds)?;
    let path = output.unwrap_or_else(|| cfg.out.join("transformed.csv"));
    save_dataset(&y, &path, Format::from_path(&path))?;
    println!("{} samples projected to {} dimensions, written to {}", y.n_samples(), y.n_features(), path.display());
    Ok(())
}

fn report_rows(reports: &[EvalReport]) -> Vec<String> {
    reports.iter().flat_map(EvalReport::csv_rows).collect()
}

pub fn eval(cfg: &ExperimentConfig, noise: f64) -> Result<(), CliError> {
    let ds = cfg.load()?;
    let mut reports = cfg
        .methods
        .par_iter()
        .map(|&m| {
            let protocol = l1sc_core::eval::ProtocolConfig {
                noise_percent: noise,
                ..cfg.protocol(m)
            };
            run_protocol(&ds, &protocol)
        })
        .collect::<Result<Vec<_>, _>>()?;
    reports.sort_by_key(|r| r.method);
    write_csv(cfg, "eval.csv", "eval", CSV_HEADER, &report_rows(&reports))?;
    write_json(cfg, "eval.json", &serde_json::to_value(&reports).expect("serializable"))?;
    write_config(cfg)?;
    for r in &reports {
        println!("{}: OA {:.4} ± {:.4}, macro-F1 {:.4}", r.method, r.mean_oa, r.std_oa, r.macro_f1);
    }
    Ok(())
}

/// One aggregate report per `(method, value)` cell, in canonical order.
fn sweep<F>(cfg: &ExperimentConfig, values: &[f64], make: F) -> Result<Vec<(Method, f64, EvalReport)>, CliError>
where
    F: Fn(Method, f64) -> l1sc_core::eval::ProtocolConfig + Sync,
{
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    let ds = cfg.load()?;
    let cells: Vec<(Method, f64)> = cfg
        .methods
        .iter()
        .flat_map(|&m| values.iter().map(move |&v| (m, v)))
        .collect();
    let mut results = cells
        .par_iter()
        .map(|&(m, v)| run_protocol(&ds, &make(m, v)).map(|r| (m, v, r)))
        .collect::<Result<Vec<_>, _>>()?;
    results.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(results)
}

fn sweep_rows(results: &[(Method, f64, EvalReport)]) -> Vec<String> {
    results
        .iter()
        .map(|(m, v, r)| format!("{m},{v},{},{},{}", r.mean_oa, r.std_oa, r.macro_f1))
        .collect()
}

pub fn sweep_samples(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let sizes: Vec<f64> = cfg.sizes.iter().map(|&s| s as f64).collect();
    let results = sweep(cfg, &sizes, |m, size| l1sc_core::eval::ProtocolConfig {
        train_per_class: size as usize,
        ..cfg.protocol(m)
    })?;
    let path = write_csv(cfg, "sweep_samples.csv", "sweep-samples", "method,size,mean_oa,std_oa,macro_f1", &sweep_rows(&results))?;
    write_config(cfg)?;
    println!("{} rows written to {}", results.len(), path.display());
    Ok(())
}

pub fn sweep_noise(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let results = sweep(cfg, &cfg.noise_percents, |m, p| l1sc_core::eval::ProtocolConfig {
        noise_percent: p,
        ..cfg.protocol(m)
    })?;
    let path = write_csv(
        cfg,
        "sweep_noise.csv",
        "sweep-noise",
        "method,noise_percent,mean_oa,std_oa,macro_f1",
        &sweep_rows(&results),
    )?;
    write_config(cfg)?;
    println!("{} rows written to {}", results.len(), path.display());
    Ok(())
}

pub fn table1(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let ds = cfg.load()?;
    let mut methods = cfg.methods.clone();
    methods.sort();
    let mut rows = methods
        .par_iter()
        .map(|&m| best_dimension_table(&ds, &cfg.protocol(m), &[m], &cfg.dims).map(|mut r| r.remove(0)))
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by_key(|r| r.method);
    let best: Vec<String> = rows
        .iter()
        .map(|r| format!("{},{},{},{},{}", r.method, r.best.d, r.best.mean_oa, r.best.std_oa, r.best.macro_f1))
        .collect();
    let curve: Vec<String> = rows
        .iter()
        .flat_map(|r| r.curve.iter().map(move |(d, oa)| format!("{},{d},{oa}", r.method)))
        .collect();
    write_csv(cfg, "table1.csv", "table1", "method,d,mean_oa,std_oa,macro_f1", &best)?;
    write_csv(cfg, "table1_curve.csv", "table1", "method,d,mean_oa", &curve)?;
    write_json(cfg, "table1.json", &serde_json::to_value(&rows).expect("serializable"))?;
    write_config(cfg)?;
    for r in &rows {
        println!(
            "{}: OA {:.2} ± {:.2} at d = {}, macro-F1 {:.4}",
            r.method,
            100.0 * r.best.mean_oa,
            100.0 * r.best.std_oa,
            r.best.d,
            r.best.macro_f1
        );
    }
    Ok(())
}

pub fn synth(cfg: &ExperimentConfig, output: Option<PathBuf>) -> Result<(), CliError> {
    let ds = synth_gmm(&cfg.synth.spec(), cfg.seed)?;
    let path = output.unwrap_or_else(|| cfg.out.join("synth.csv"));
    save_dataset(&ds, &path, Format::from_path(&path))?;
    println!("{} samples, {} features, {} classes written to {}", ds.n_samples(), ds.n_features(), ds.n_classes(), path.display());
    Ok(())
}

pub fn noise(cfg: &ExperimentConfig, output: Option<PathBuf>) -> Result<(), CliError> {
    let [percent] = cfg.noise_percents.as_slice() else {
        return Err(CliError::Usage("noise takes a single --percent".into()));
    };
    let ds = cfg.load()?;
    let noisy = inject_noise(&ds, *percent, derive_seed(cfg.seed, NOISE_STREAM))?;
    let path = output.unwrap_or_else(|| cfg.out.join("noisy.csv"));
    save_dataset(&noisy, &path, Format::from_path(&path))?;
    println!("{percent}% noise added, written to {}", path.display());
    Ok(())
}
