//! Subcommand implementations; thin wrappers over the library crate plus
//! file plumbing and manifests.

use std::path::{Path, PathBuf};

use imuda_core::adapt::{
    adapt_baseline_swd, adapt_imuda, adapt_imuda_regen, pretrain, report_summary, write_report_csv,
    TrainReport,
};
use imuda_core::data::{gen_blobs, gen_two_moons, load_csv, save_csv, Dataset};
use imuda_core::error::{Error, Result};
use imuda_core::gmm::{estimate_map, load_gmm, save_gmm};
use imuda_core::metrics::{bound_diagnostics, evaluate, pca2, BoundDiagnostics, EvalReport};
use imuda_core::nn::{forward_encoder, load_checkpoint, save_checkpoint};
use imuda_core::pseudo::{generate_pseudo, load_pseudo_csv, save_pseudo_csv, PseudoDataset};
use imuda_core::rng;
use imuda_core::swd::{swd_empirical, ProjectionSet};
use serde::Serialize;

use crate::config::{parse_shift, RunConfig};
use crate::manifest::write_manifest;
use crate::Command;

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::MakeSynth { task, shift, n, seed, out, noise, classes, dim, separation } => {
            make_synth(&task, &shift, n, seed, &out, noise, classes, dim, separation)
        }
        Command::Pretrain { config, source, out, report } => {
            cmd_pretrain(&config, &source, &out, report.as_deref())
        }
        Command::EstimateGmm { model, source, out, eps, diagonal } => {
            cmd_estimate_gmm(&model, &source, &out, eps, diagonal)
        }
        Command::GenPseudo { model, gmm, tau, n, seed, out, max_attempt_factor } => {
            cmd_gen_pseudo(&model, &gmm, tau, n, seed, &out, max_attempt_factor)
        }
        Command::Adapt {
            config,
            model,
            source,
            target,
            pseudo,
            baseline_swd,
            drop_term3,
            drop_term4,
            out,
            report,
        } => cmd_adapt(
            &config,
            &model,
            &source,
            &target,
            pseudo.as_deref(),
            baseline_swd,
            drop_term3,
            drop_term4,
            &out,
            &report,
        ),
        Command::Eval { model, data, out } => cmd_eval(&model, &data, &out),
        Command::Swd { a, b, projections, seed } => cmd_swd(&a, &b, projections, seed),
        Command::DiagnoseBound { model, source, target, pseudo, tau, projections, seed, out } => {
            cmd_diagnose(&model, &source, &target, &pseudo, tau, projections, seed, out.as_deref())
        }
        Command::ExportEmbeddings { model, data, pca2, out } => {
            cmd_export(&model, &data, pca2, &out)
        }
        Command::RunAll { config } => cmd_run_all(&config),
    }
}

#[derive(Serialize)]
struct SynthManifestConfig {
    task: String,
    shift: String,
    n: usize,
    seed: u64,
    noise: f64,
    classes: usize,
    dim: usize,
    separation: f64,
}

#[allow(clippy::too_many_arguments)]
fn make_synth(
    task: &str,
    shift_str: &str,
    n: usize,
    seed: u64,
    out: &Path,
    noise: f64,
    classes: usize,
    dim: usize,
    separation: f64,
) -> Result<()> {
    let shift = parse_shift(shift_str)?;
    let (source, target) = match task {
        "twomoons" => gen_two_moons(n, noise, &shift, rng::derive(seed, "data"))?,
        "blobs" => gen_blobs(classes, n, separation, &shift, dim, rng::derive(seed, "data"))?,
        other => {
            return Err(Error::Config(format!(
                "unknown task '{other}'; expected twomoons or blobs"
            )))
        }
    };
    std::fs::create_dir_all(out)?;
    save_csv(&source, out.join("source.csv"))?;
    save_csv(&target.without_labels(), out.join("target.csv"))?;
    save_csv(&target, out.join("target_labels.csv"))?;
    let config = SynthManifestConfig {
        task: task.into(),
        shift: shift_str.into(),
        n,
        seed,
        noise,
        classes,
        dim,
        separation,
    };
    write_manifest(out.join("manifest.toml"), "make-synth", &config, &[])?;
    eprintln!(
        "wrote {} source rows and {} target rows to {}",
        source.len(),
        target.len(),
        out.display()
    );
    Ok(())
}

fn load_labeled(path: &Path) -> Result<Dataset> {
    let ds = load_csv(path)?;
    ds.require_labels()?;
    Ok(ds)
}

fn default_report_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".report.csv");
    PathBuf::from(s)
}

fn summary_path(report: &Path) -> PathBuf {
    let mut s = report.as_os_str().to_owned();
    s.push(".summary.toml");
    PathBuf::from(s)
}

fn write_report_files(report: &TrainReport, report_path: &Path) -> Result<()> {
    write_report_csv(report, report_path)?;
    std::fs::write(summary_path(report_path), report_summary(report))?;
    Ok(())
}

fn cmd_pretrain(
    config_path: &Path,
    source_path: &Path,
    out: &Path,
    report_path: Option<&Path>,
) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let source = load_labeled(source_path)?;
    let (params, report) = pretrain(&config.train, &config.arch, &source)?;
    save_checkpoint(&params, out)?;
    let report_path = report_path.map(Path::to_path_buf).unwrap_or_else(|| default_report_path(out));
    write_report_files(&report, &report_path)?;
    write_manifest(
        manifest_path(out),
        "pretrain",
        &config,
        &[("config", config_path), ("source", source_path)],
    )?;
    let last = report.final_record();
    eprintln!(
        "pretrained for {} epochs; source accuracy {:.4} ({:.1}s)",
        report.epochs.len(),
        last.source_accuracy,
        report.wall_time_secs
    );
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.toml");
    PathBuf::from(s)
}

#[derive(Serialize)]
struct GmmManifestConfig {
    eps: Option<f64>,
    diagonal: bool,
}

fn cmd_estimate_gmm(
    model_path: &Path,
    source_path: &Path,
    out: &Path,
    eps: Option<f64>,
    diagonal: bool,
) -> Result<()> {
    let params = load_checkpoint(model_path)?;
    let source = load_labeled(source_path)?;
    let z = forward_encoder(&params, source.x.view())?;
    let gmm = estimate_map(
        &z,
        source.require_labels()?,
        params.num_classes(),
        eps,
        diagonal,
    )?;
    save_gmm(&gmm, out)?;
    write_manifest(
        manifest_path(out),
        "estimate-gmm",
        &GmmManifestConfig { eps, diagonal },
        &[("model", model_path), ("source", source_path)],
    )?;
    eprintln!("estimated {}-component mixture (eps {:.3e})", gmm.num_components(), gmm.eps);
    Ok(())
}

#[derive(Serialize)]
struct PseudoManifestConfig {
    tau: f64,
    n: usize,
    seed: u64,
    max_attempt_factor: usize,
}

fn cmd_gen_pseudo(
    model_path: &Path,
    gmm_path: &Path,
    tau: f64,
    n: usize,
    seed: u64,
    out: &Path,
    max_attempt_factor: usize,
) -> Result<()> {
    let params = load_checkpoint(model_path)?;
    let gmm = load_gmm(gmm_path)?;
    let pseudo = generate_pseudo(&gmm, &params, tau, n, max_attempt_factor, seed)?;
    warn_missing_classes(&pseudo);
    save_pseudo_csv(&pseudo, out)?;
    write_manifest(
        manifest_path(out),
        "gen-pseudo",
        &PseudoManifestConfig { tau, n, seed, max_attempt_factor },
        &[("model", model_path), ("gmm", gmm_path)],
    )?;
    eprintln!(
        "accepted {} of {} requested points (acceptance rate {:.3})",
        pseudo.len(),
        n,
        pseudo.acceptance_rate
    );
    Ok(())
}

fn warn_missing_classes(pseudo: &PseudoDataset) {
    if !pseudo.missing_classes.is_empty() {
        eprintln!(
            "warning: no pseudo points for class(es) {:?}; consider lowering tau",
            pseudo.missing_classes
        );
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_adapt(
    config_path: &Path,
    model_path: &Path,
    source_path: &Path,
    target_path: &Path,
    pseudo_path: Option<&Path>,
    baseline_swd: bool,
    drop_term3: bool,
    drop_term4: bool,
    out: &Path,
    report_path: &Path,
) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let mut train = config.train.clone();
    if drop_term3 {
        train.enable_target_pseudo_swd = false;
    }
    if drop_term4 {
        train.enable_source_pseudo_swd = false;
    }
    let params = load_checkpoint(model_path)?;
    let source = load_labeled(source_path)?;
    let target = load_csv(target_path)?;

    let mut inputs: Vec<(&str, &Path)> =
        vec![("config", config_path), ("model", model_path), ("source", source_path), ("target", target_path)];
    let (adapted, report) = if baseline_swd {
        adapt_baseline_swd(&params, &source, &target, &train)?
    } else {
        let pseudo_path = pseudo_path.ok_or_else(|| {
            Error::Config("adapt needs --pseudo unless --baseline-swd is set".into())
        })?;
        inputs.push(("pseudo", pseudo_path));
        let pseudo = load_pseudo_csv(pseudo_path)?;
        adapt_imuda(&params, &source, &target, &pseudo, &train)?
    };
    save_checkpoint(&adapted, out)?;
    write_report_files(&report, report_path)?;
    write_manifest(manifest_path(out), "adapt", &train, &inputs)?;
    let last = report.final_record();
    match last.target_accuracy {
        Some(acc) => eprintln!(
            "adapted for {} epochs; target accuracy {:.4} ({:.1}s)",
            report.epochs.len(),
            acc,
            report.wall_time_secs
        ),
        None => eprintln!(
            "adapted for {} epochs ({:.1}s)",
            report.epochs.len(),
            report.wall_time_secs
        ),
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalFile {
    accuracy: f64,
    n: usize,
    per_class: Vec<f64>,
    confusion: Vec<Vec<usize>>,
}

fn eval_to_toml(report: &EvalReport) -> Result<String> {
    let file = EvalFile {
        accuracy: report.accuracy,
        n: report.n,
        per_class: report.per_class.clone(),
        confusion: report
            .confusion
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect(),
    };
    toml::to_string(&file).map_err(|e| Error::Format(format!("cannot render eval report: {e}")))
}

fn cmd_eval(model_path: &Path, data_path: &Path, out: &Path) -> Result<()> {
    let params = load_checkpoint(model_path)?;
    let data = load_labeled(data_path)?;
    let report = evaluate(&params, &data)?;
    std::fs::write(out, eval_to_toml(&report)?)?;
    println!("{}", report.accuracy);
    Ok(())
}

fn cmd_swd(a_path: &Path, b_path: &Path, projections: usize, seed: u64) -> Result<()> {
    let a = load_csv(a_path)?;
    let b = load_csv(b_path)?;
    if a.dim() != b.dim() {
        return Err(Error::Input(format!(
            "point sets have different dimensions: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let proj = ProjectionSet::sample(a.dim(), projections, seed)?;
    let value = swd_empirical(&a.x, &b.x, &proj)?;
    println!("{}", value.value);
    Ok(())
}

#[derive(Serialize)]
struct BoundFile {
    source_error: f64,
    swd_source_pseudo: f64,
    swd_target_pseudo: f64,
    one_minus_tau: f64,
    n_source: usize,
    n_target: usize,
}

fn bound_to_toml(d: &BoundDiagnostics) -> Result<String> {
    let file = BoundFile {
        source_error: d.source_error,
        swd_source_pseudo: d.swd_source_pseudo,
        swd_target_pseudo: d.swd_target_pseudo,
        one_minus_tau: d.one_minus_tau,
        n_source: d.n_source,
        n_target: d.n_target,
    };
    toml::to_string(&file).map_err(|e| Error::Format(format!("cannot render diagnostics: {e}")))
}

#[allow(clippy::too_many_arguments)]
fn cmd_diagnose(
    model_path: &Path,
    source_path: &Path,
    target_path: &Path,
    pseudo_path: &Path,
    tau: f64,
    projections: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let params = load_checkpoint(model_path)?;
    let source = load_labeled(source_path)?;
    let target = load_csv(target_path)?;
    let pseudo = load_pseudo_csv(pseudo_path)?;
    let d = bound_diagnostics(&params, &source, &target, &pseudo, tau, projections, seed)?;
    let text = bound_to_toml(&d)?;
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, &text)?;
    }
    Ok(())
}

fn cmd_export(model_path: &Path, data_path: &Path, reduce: bool, out: &Path) -> Result<()> {
    let params = load_checkpoint(model_path)?;
    let data = load_csv(data_path)?;
    let z = forward_encoder(&params, data.x.view())?;
    let coords = if reduce { pca2(&z)? } else { z };
    let export = Dataset::new(coords, data.labels.clone(), format!("{}-embeddings", data.name))?;
    save_csv(&export, out)?;
    write_manifest(
        manifest_path(out),
        "export-embeddings",
        &reduce,
        &[("model", model_path), ("data", data_path)],
    )?;
    Ok(())
}

fn cmd_run_all(config_path: &Path) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let out = config.out_dir.clone();
    std::fs::create_dir_all(&out)?;
    let seed = config.train.seed;

    // resolve or synthesize the datasets
    let (source_path, target_path) = match (&config.data.source, &config.data.target) {
        (Some(s), Some(t)) => (s.clone(), t.clone()),
        _ => {
            let synth = config.data.synth.as_ref().ok_or_else(|| {
                Error::Config(
                    "config needs either data.source/data.target paths or a [data.synth] table"
                        .into(),
                )
            })?;
            let dir = out.join("data");
            std::fs::create_dir_all(&dir)?;
            let shift = synth.parse_shift()?;
            let (source, target) = match synth.task.as_str() {
                "twomoons" => gen_two_moons(synth.n, synth.noise, &shift, rng::derive(seed, "data"))?,
                "blobs" => gen_blobs(
                    synth.classes,
                    synth.n,
                    synth.separation,
                    &shift,
                    synth.dim,
                    rng::derive(seed, "data"),
                )?,
                other => return Err(Error::Config(format!("unknown synth task '{other}'"))),
            };
            save_csv(&source, dir.join("source.csv"))?;
            save_csv(&target.without_labels(), dir.join("target.csv"))?;
            save_csv(&target, dir.join("target_labels.csv"))?;
            eprintln!("synthesized {} into {}", synth.task, dir.display());
            (dir.join("source.csv"), dir.join("target_labels.csv"))
        }
    };
    let source = load_labeled(&source_path)?;
    // the target used during adaptation: labels, when present, are used for
    // per-epoch accuracy reporting only
    let target_eval_path = config.data.target_labels.clone().unwrap_or_else(|| target_path.clone());
    let target = load_csv(&target_eval_path)?;

    eprintln!("pretraining on {} source rows", source.len());
    let (pre, pre_report) = pretrain(&config.train, &config.arch, &source)?;
    save_checkpoint(&pre, out.join("model.toml"))?;
    write_report_files(&pre_report, &out.join("pretrain_report.csv"))?;
    std::fs::write(out.join("eval_source.toml"), eval_to_toml(&evaluate(&pre, &source)?)?)?;
    if target.labels.is_some() {
        let pre_eval = evaluate(&pre, &target)?;
        std::fs::write(out.join("eval_target_pre.toml"), eval_to_toml(&pre_eval)?)?;
        eprintln!("source-only target accuracy {:.4}", pre_eval.accuracy);
    }

    eprintln!("estimating the mixture");
    let z = forward_encoder(&pre, source.x.view())?;
    let gmm = estimate_map(
        &z,
        source.require_labels()?,
        pre.num_classes(),
        config.train.cov_reg,
        config.train.diagonal_cov,
    )?;
    save_gmm(&gmm, out.join("gmm.toml"))?;

    let n_pseudo = config.train.n_pseudo.unwrap_or_else(|| source.len());
    let pseudo = generate_pseudo(
        &gmm,
        &pre,
        config.train.tau,
        n_pseudo,
        config.train.max_attempt_factor,
        rng::derive(seed, "pseudo"),
    )?;
    warn_missing_classes(&pseudo);
    save_pseudo_csv(&pseudo, out.join("pseudo.csv"))?;
    eprintln!(
        "generated {} pseudo points (acceptance rate {:.3})",
        pseudo.len(),
        pseudo.acceptance_rate
    );

    let diag_pre = bound_diagnostics(
        &pre,
        &source,
        &target,
        &pseudo,
        config.train.tau,
        config.train.num_projections,
        rng::derive(seed, "diagnostics"),
    )?;
    std::fs::write(out.join("diagnostics_pre.toml"), bound_to_toml(&diag_pre)?)?;

    eprintln!("adapting for up to {} epochs", config.train.adapt_epochs);
    let (adapted, adapt_report) = if config.train.regen_pseudo_each_epoch {
        adapt_imuda_regen(&pre, &source, &target, &gmm, &config.train)?
    } else {
        adapt_imuda(&pre, &source, &target, &pseudo, &config.train)?
    };
    save_checkpoint(&adapted, out.join("model_adapted.toml"))?;
    write_report_files(&adapt_report, &out.join("adapt_report.csv"))?;
    if target.labels.is_some() {
        let post = evaluate(&adapted, &target)?;
        std::fs::write(out.join("eval_target_post.toml"), eval_to_toml(&post)?)?;
        eprintln!("adapted target accuracy {:.4}", post.accuracy);
    }
    let diag_post = bound_diagnostics(
        &adapted,
        &source,
        &target,
        &pseudo,
        config.train.tau,
        config.train.num_projections,
        rng::derive(seed, "diagnostics"),
    )?;
    std::fs::write(out.join("diagnostics_post.toml"), bound_to_toml(&diag_post)?)?;

    let mut inputs: Vec<(&str, &Path)> = vec![("config", config_path)];
    inputs.push(("source", &source_path));
    inputs.push(("target", &target_eval_path));
    write_manifest(out.join("manifest.toml"), "run-all", &config, &inputs)?;
    eprintln!("pipeline complete: {}", out.display());
    Ok(())
}
