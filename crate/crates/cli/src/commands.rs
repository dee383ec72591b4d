use std::path::PathBuf;
use std::time::Instant;

use robmix_core::evaluation::adjusted_rand_index;
use robmix_core::mixture::{self, FitConfig};
use robmix_core::simulation::{simulate, GroundTruth, ScenarioSpec};
use robmix_core::{FitResult, RecoveryConfig};
use serde::Serialize;

use crate::args::{parse_k_range, BenchmarkArgs, Command, FitArgs, GenerateArgs, PresetArg, RerunArgs};
use crate::error::{CliError, Result};
use crate::grid::{write_results, Grid};
use crate::io::{self, fmt_f64, fmt_opt};
use crate::manifest::{manifest_path_for, RunManifest};
use crate::model::ModelDocument;

/// Outcome of one command: files written plus the resolved configuration.
struct Run {
    config: serde_json::Value,
    seed: u64,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    manifest: PathBuf,
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

/// Executes a command and writes its manifest. Returns the manifest path.
pub fn execute(command: &Command) -> Result<PathBuf> {
    let start = Instant::now();
    let run = match command {
        Command::Generate(a) => generate(a)?,
        Command::Fit(a) => fit(a, false)?,
        Command::Select(a) => fit(a, true)?,
        Command::Benchmark(a) => benchmark(a)?,
        Command::Rerun(a) => return rerun(a),
    };
    let manifest = RunManifest {
        command: command.name().into(),
        invocation: command.clone(),
        config: run.config,
        seed: run.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        inputs: run.inputs,
        outputs: run.outputs,
        duration_secs: start.elapsed().as_secs_f64(),
    };
    manifest.write(&run.manifest)?;
    Ok(run.manifest)
}

fn generate(a: &GenerateArgs) -> Result<Run> {
    let mut inputs = Vec::new();
    let truth = match (a.preset, &a.mu_file) {
        (Some(PresetArg::Paper3), None) => GroundTruth::paper3(),
        (Some(PresetArg::Sigma0), None) => GroundTruth::sigma0(),
        (None, Some(path)) => {
            inputs.push(path.clone());
            GroundTruth::with_identity(io::read_matrix(path)?)?
        }
        _ => return Err(CliError::usage("give exactly one of --preset and --mu-file")),
    };
    let spec = ScenarioSpec {
        scenario: a.scenario.into(),
        delta: a.delta,
        family: a.family.with_df(a.df),
        nk: a.nk.clone(),
        truth,
    };
    let ds = simulate(&spec, a.seed)?;
    io::write_dataset(&a.out, &ds)?;
    let flagged = ds.outliers.as_ref().map_or(0, |o| o.iter().filter(|&&f| f).count());
    println!("wrote {} rows ({} contaminated) to {}", ds.len(), flagged, a.out.display());
    let config = serde_json::json!({
        "scenario": spec.scenario,
        "delta": spec.delta,
        "family": spec.family,
        "nk": spec.nk,
        "centers": spec.truth.centers,
        "covariances": spec.truth.covariances.iter().map(|s| s.to_rows()).collect::<Vec<_>>(),
    });
    Ok(Run { config, seed: a.seed, inputs, outputs: vec![a.out.clone()], manifest: manifest_path_for(&a.out) })
}

fn fit_config(a: &FitArgs) -> FitConfig {
    let base = FitConfig::default();
    FitConfig {
        method: a.method.into(),
        init: a.init.into(),
        restarts: a.restarts,
        max_outer_iter: a.max_iter,
        recovery: RecoveryConfig {
            solver: a.solver.into(),
            mc_samples: a.mc_samples,
            iterations: a.mc_iterations,
            ..base.recovery
        },
        seed: a.seed,
        ..base
    }
}

fn criterion_row(k: usize, f: &robmix_core::Result<FitResult>, selected: usize) -> Vec<String> {
    match f {
        Ok(f) => vec![
            k.to_string(),
            fmt_f64(f.loglik),
            fmt_f64(f.bic),
            fmt_f64(f.icl),
            f.converged.to_string(),
            f.n_iter.to_string(),
            (k == selected).to_string(),
            String::new(),
        ],
        Err(e) => {
            vec![
                k.to_string(),
                fmt_opt(None),
                fmt_opt(None),
                fmt_opt(None),
                "false".into(),
                String::new(),
                "false".into(),
                e.to_string(),
            ]
        }
    }
}

fn fit(a: &FitArgs, select: bool) -> Result<Run> {
    let ks = match (a.k, &a.k_range) {
        (Some(_), _) if select => return Err(CliError::usage("select takes --k-range, not --k")),
        (Some(k), None) => vec![k as usize],
        (None, Some(r)) => parse_k_range(r)?,
        _ => return Err(CliError::usage("give exactly one of --k and --k-range")),
    };
    let ds = io::read_dataset(&a.input)?;
    let family = a.family.with_df(a.df);
    let cfg = fit_config(a);
    if let Some(&kmax) = ks.last() {
        cfg.validate(kmax)?;
    }
    let (best, table) = if ks.len() == 1 && a.k_range.is_none() {
        let f = mixture::fit(ds.points(), ks[0], family, &cfg)?;
        let row = criterion_row(ks[0], &Ok(f.clone()), ks[0]);
        (f, vec![row])
    } else {
        let sel = mixture::select_k(ds.points(), &ks, a.criterion.into(), family, &cfg)?;
        let rows = sel.fits.iter().map(|(k, f)| criterion_row(*k, f, sel.best_k)).collect();
        (sel.best().clone(), rows)
    };

    let model_path = a.out_dir.join("model.json");
    let assign_path = a.out_dir.join("assignments.csv");
    let crit_path = a.out_dir.join("criteria.csv");
    ModelDocument::new(&best, &cfg).write(&model_path)?;
    io::write_assignments(&assign_path, &best.tau)?;
    io::write_table(&crit_path, &["k", "loglik", "bic", "icl", "converged", "n_iter", "selected", "error"], table)?;

    print!("K = {}, loglik = {}, converged = {}", best.k(), best.loglik, best.converged);
    if let Some(labels) = &ds.labels {
        if let Ok(ari) = adjusted_rand_index(labels, &best.labels()) {
            print!(", ARI vs label column = {ari:.4}");
        }
    }
    println!();

    let config = serde_json::json!({ "fit": to_value(&cfg), "family": family, "ks": ks, "criterion": a.criterion });
    Ok(Run {
        config,
        seed: a.seed,
        inputs: vec![a.input.clone()],
        outputs: vec![model_path, assign_path, crit_path],
        manifest: a.out_dir.join("manifest.json"),
    })
}

fn benchmark(a: &BenchmarkArgs) -> Result<Run> {
    let grid = Grid::read(&a.grid)?;
    let rows = grid.run(a.seed, a.jobs)?;
    write_results(&a.out, &rows)?;
    let failed: Vec<_> = rows.iter().filter(|r| r.error.is_some()).collect();
    for r in &failed {
        eprintln!(
            "cell {:?}/{}/{}/{} failed: {}",
            r.method,
            r.scenario,
            r.delta,
            r.seed,
            r.error.as_deref().unwrap_or("")
        );
    }
    println!("wrote {} rows ({} failed) to {}", rows.len(), failed.len(), a.out.display());
    Ok(Run {
        config: to_value(&grid),
        seed: a.seed,
        inputs: vec![a.grid.clone()],
        outputs: vec![a.out.clone()],
        manifest: manifest_path_for(&a.out),
    })
}

fn rerun(a: &RerunArgs) -> Result<PathBuf> {
    let manifest = RunManifest::read(&a.manifest)?;
    if matches!(manifest.invocation, Command::Rerun(_)) {
        return Err(CliError::usage("manifest records a rerun; replay the original manifest"));
    }
    execute(&manifest.invocation)
}
