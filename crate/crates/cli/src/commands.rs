use std::collections::{BTreeSet, HashSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use anyhow::{anyhow, bail, Context as _, Result};
use icl_core::baselines::{LASSO_ALPHA_MULTITASK, MlpConfig};
use icl_core::bridge::{
    run_batch, write_failures, write_records, read_records, Context, PredictionFile, PredictionRecord, Predictor,
    PredictorSpec, QueryMode, Request, Response,
};
use icl_core::eval::{
    build_multitask_suite, checkpoint_sweep, curve_from_losses, squared_errors, write_curves_csv, write_svg,
    BootstrapConfig, CheckpointDump, SuiteConfig, SuiteKind, SvgOptions,
};
use icl_core::linalg::design_matrix;
use icl_core::probe::{dft_spectrum, probe_prompt};
use icl_core::rng::derive_seed;
use icl_core::sampler::{mcmc_pme, McmcDiagnostics, McmcPrior, SamplerConfig, DEFAULT_SAMPLER_EPS2};
use icl_core::tasks::{
    generate_prompt_set, MixtureSpec, Prompt, PromptSet, PromptSetConfig, PromptSetHeader, FORMAT_VERSION,
};
use nalgebra::DVector;
use serde::Serialize;

use crate::resolve::{self, load_prompts, parse_k_list};
use crate::{
    BaselineArgs, BaselineKind, BatchArgs, DftArgs, EvalArgs, GenerateArgs, PmeArgs, PmeKind, PredictArgs,
    PredictorArgs, ProbeArgs, SamplePmeArgs, ServeArgs, SuiteArgs, SuiteKindArg, SweepArgs,
};

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

fn shortest_prompt(prompts: &[Prompt]) -> usize {
    prompts.iter().map(Prompt::len).min().unwrap_or(0)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

/// Runs `handle` over the prompt set and writes records plus, on partial
/// failure, a manifest of the failed contexts.
fn write_batch(handle: &dyn Predictor, set: &PromptSet, batch: &BatchArgs) -> Result<()> {
    let p = shortest_prompt(&set.prompts);
    let mode = if batch.queries {
        QueryMode::ProbeQueries
    } else {
        QueryMode::NextTarget
    };
    let ks = match &batch.k_list {
        Some(s) => parse_k_list(s)?,
        None if batch.queries => (0..=p).collect(),
        None if p == 0 => bail!("prompts have no pairs to predict"),
        None => (0..p).collect(),
    };
    let out = run_batch(handle, &set.prompts, &ks, mode, batch.workers.max(1))?;
    write_records(&batch.out, &out.records)?;
    eprintln!("{}: {} records", batch.out.display(), out.records.len());
    if !out.failures.is_empty() {
        let manifest = batch.failures.clone().unwrap_or_else(|| sibling(&batch.out, ".failures.json"));
        write_failures(&manifest, &out.failures)?;
        bail!(
            "{} of {} contexts failed; manifest written to {}",
            out.failures.len(),
            set.prompts.len() * ks.len(),
            manifest.display()
        );
    }
    Ok(())
}

fn predictor_from(args: &PredictorArgs, timeout: Option<Duration>) -> Result<Box<dyn Predictor>> {
    match (&args.predictor, &args.predictor_cmd) {
        (_, Some(cmd)) => resolve::subprocess(cmd, timeout),
        (Some(arg), None) => resolve::predictor(arg, timeout),
        (None, None) => bail!("pass --predictor or --predictor-cmd"),
    }
}

pub fn generate(a: GenerateArgs) -> Result<()> {
    let config: PromptSetConfig = read_json(&a.config)?;
    let set = generate_prompt_set(&config, a.seed, a.count)?;
    set.write_jsonl(&a.out)?;
    eprintln!("{}: {} prompts", a.out.display(), set.prompts.len());
    Ok(())
}

pub fn pme(a: PmeArgs) -> Result<()> {
    let set = load_prompts(&a.batch.prompts)?;
    let name = match a.predictor {
        PmeKind::Gaussian => "gaussian",
        PmeKind::Skewed => "skewed",
        PmeKind::Gmm => "gmm",
        PmeKind::Dmmse => "dmmse",
        PmeKind::Ridge => "ridge",
    };
    let params = a.params.as_deref().map(read_json).transpose()?;
    let handle = resolve::pme_spec(name, params, &set.header)?.build();
    write_batch(&handle, &set, &a.batch)
}

pub fn baseline(a: BaselineArgs) -> Result<()> {
    let set = load_prompts(&a.batch.prompts)?;
    let basis = a.basis.as_deref().map(|b| resolve::parse_basis(b, &set.header)).transpose()?;
    let d = set.header.input.dim();
    let spec = match a.name {
        BaselineKind::Ols => match basis {
            Some(map) => PredictorSpec::OlsFeatures { map },
            None => PredictorSpec::Ols,
        },
        BaselineKind::OlsFeatures => {
            let map = match basis {
                Some(map) => map,
                None => resolve::sole_family(&set.header)
                    .and_then(|f| f.feature_map())
                    .ok_or_else(|| anyhow!("ols-features needs --basis for this prompt set"))?,
            };
            PredictorSpec::OlsFeatures { map }
        }
        BaselineKind::Ridge => {
            let noise_var = match a.alpha {
                Some(v) => v,
                None => resolve::sole_family(&set.header)
                    .map(|f| f.noise_var())
                    .filter(|v| *v > 0.0)
                    .ok_or_else(|| anyhow!("ridge needs --alpha for noiseless prompt sets"))?,
            };
            PredictorSpec::Ridge { noise_var }
        }
        BaselineKind::Lasso => PredictorSpec::Lasso {
            alpha: a.alpha.unwrap_or(LASSO_ALPHA_MULTITASK),
            features: basis,
        },
        BaselineKind::Linf => PredictorSpec::Linf,
        BaselineKind::Nuclear => {
            let q = (d as f64).sqrt().round() as usize;
            if q * q != d {
                bail!("nuclear-norm minimization needs a square input dimension, got {d}");
            }
            PredictorSpec::Nuclear { q }
        }
        BaselineKind::Tree => PredictorSpec::Tree { depth: a.depth },
        BaselineKind::Mlp => PredictorSpec::Mlp {
            config: MlpConfig {
                seed: a.seed,
                ..MlpConfig::default()
            },
        },
    };
    write_batch(&spec.build(), &set, &a.batch)
}

#[derive(Serialize)]
struct FitDiagnostics {
    prompt_id: u64,
    k: usize,
    #[serde(flatten)]
    diagnostics: McmcDiagnostics,
}

/// MCMC posterior mean per context; every fit keeps its diagnostics.
struct Sampled {
    prior: McmcPrior,
    config: SamplerConfig,
    d: usize,
    fits: Mutex<Vec<FitDiagnostics>>,
}

impl Predictor for Sampled {
    fn name(&self) -> &str {
        "sample-pme"
    }

    fn predict_batch(&self, ctx: &Context, queries: &[Vec<f64>]) -> icl_core::error::Result<Vec<f64>> {
        let x = design_matrix(ctx.xs, self.d)?;
        let y = DVector::from_column_slice(ctx.ys);
        let config = SamplerConfig {
            seed: derive_seed(derive_seed(self.config.seed, ctx.prompt_id), ctx.k() as u64),
            ..self.config.clone()
        };
        let fit = mcmc_pme(&self.prior, &x, &y, &config)?;
        self.fits.lock().unwrap().push(FitDiagnostics {
            prompt_id: ctx.prompt_id,
            k: ctx.k(),
            diagnostics: fit.diagnostics,
        });
        Ok(queries.iter().map(|q| q.iter().zip(&fit.mean).map(|(a, b)| a * b).sum()).collect())
    }
}

pub fn sample_pme(a: SamplePmeArgs) -> Result<()> {
    let set = load_prompts(&a.batch.prompts)?;
    let prior = resolve::parse_prior(&a.prior, &set.header)?;
    let config = SamplerConfig {
        n_samples: a.samples,
        burn_in: a.burn,
        step_size: a.step_size,
        eps2: a.eps2.unwrap_or(DEFAULT_SAMPLER_EPS2),
        seed: a.seed,
        n_chains: a.chains,
        ..SamplerConfig::default()
    };
    config.validate()?;
    let sampled = Sampled {
        prior: prior.clone(),
        config: config.clone(),
        d: set.header.input.dim(),
        fits: Mutex::new(Vec::new()),
    };
    let result = write_batch(&sampled, &set, &a.batch);
    let mut fits = sampled.fits.into_inner().unwrap();
    fits.sort_by_key(|f| (f.prompt_id, f.k));
    let max_rhat = fits.iter().map(|f| f.diagnostics.rhat).fold(f64::NEG_INFINITY, f64::max);
    let min_ess = fits.iter().map(|f| f.diagnostics.ess).fold(f64::INFINITY, f64::min);
    let sidecar = serde_json::json!({
        "prior": prior,
        "config": config,
        "max_rhat": if fits.is_empty() { None } else { Some(max_rhat) },
        "min_ess": if fits.is_empty() { None } else { Some(min_ess) },
        "fits": fits,
    });
    let path = a.diagnostics.clone().unwrap_or_else(|| sibling(&a.batch.out, ".diagnostics.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&sidecar)?).with_context(|| format!("writing {}", path.display()))?;
    result
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let set = load_prompts(&a.batch.prompts)?;
    let timeout = a.timeout.map(Duration::from_secs_f64);
    let handle = predictor_from(&a.predictor, timeout)?;
    write_batch(handle.as_ref(), &set, &a.batch)
}

fn serve_one(handle: &dyn Predictor, line: &str) -> Response {
    let req: Request = match serde_json::from_str(line) {
        Ok(r) => r,
        Err(e) => {
            let id = serde_json::from_str::<serde_json::Value>(line)
                .ok()
                .and_then(|v| v.get("id").and_then(serde_json::Value::as_u64))
                .unwrap_or(0);
            return Response {
                id,
                prediction: None,
                error: Some(format!("malformed request: {e}")),
            };
        }
    };
    match handle.predict(&Context::new(0, &req.xs, &req.ys), &req.query) {
        Ok(v) => Response {
            id: req.id,
            prediction: Some(v),
            error: None,
        },
        Err(e) => Response {
            id: req.id,
            prediction: None,
            error: Some(e.to_string()),
        },
    }
}

pub fn serve(a: ServeArgs) -> Result<()> {
    let spec = resolve::builtin_spec(&a.predictor)?
        .ok_or_else(|| anyhow!("`{}` is not a built-in predictor", a.predictor))?;
    let handle = spec.build();
    let stdin = std::io::stdin().lock();
    let mut stdout = std::io::stdout().lock();
    for line in stdin.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = serve_one(&handle, &line);
        writeln!(stdout, "{}", serde_json::to_string(&reply)?)?;
        stdout.flush()?;
    }
    Ok(())
}

pub fn probe(a: ProbeArgs) -> Result<()> {
    let set = load_prompts(&a.prompts)?;
    let handle = predictor_from(&a.predictor, None)?;
    let ks = match &a.k_list {
        Some(s) => parse_k_list(s)?,
        None => (0..=shortest_prompt(&set.prompts)).collect(),
    };
    let d = set.header.input.dim();
    let mut w = csv_writer(&a.out)?;
    let mut header: Vec<String> = ["prompt_id", "k", "n_queries", "residual"].map(String::from).to_vec();
    header.extend((1..=d).map(|i| format!("w{i}")));
    w.write_record(&header)?;
    for prompt in &set.prompts {
        for &k in &ks {
            let r = probe_prompt(handle.as_ref(), prompt, k, &set.header.input, a.n_queries, a.seed)
                .with_context(|| format!("prompt {}, k = {k}", prompt.id))?;
            let mut row = vec![prompt.id.to_string(), k.to_string(), r.n_queries.to_string(), r.residual.to_string()];
            row.extend(r.w_probe.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn dft(a: DftArgs) -> Result<()> {
    let handle = predictor_from(&a.predictor, None)?;
    let set = a.prompts.as_deref().map(load_prompts).transpose()?;
    let mut w = csv_writer(&a.out)?;
    w.write_record(["prompt_id", "k", "n", "a", "b", "power"])?;
    let emit = |w: &mut csv::Writer<std::fs::File>, ctx: Context| -> Result<()> {
        let s = dft_spectrum(handle.as_ref(), &ctx, a.max_freq, a.half_width, a.grid)
            .with_context(|| format!("prompt {}, k = {}", ctx.prompt_id, ctx.k()))?;
        for n in 0..s.a.len() {
            w.write_record([
                ctx.prompt_id.to_string(),
                ctx.k().to_string(),
                n.to_string(),
                s.a[n].to_string(),
                s.b[n].to_string(),
                s.power[n].to_string(),
            ])?;
        }
        Ok(())
    };
    match &set {
        None => emit(&mut w, Context::new(0, &[], &[]))?,
        Some(set) => {
            let ks = match &a.k_list {
                Some(s) => parse_k_list(s)?,
                None => vec![shortest_prompt(&set.prompts)],
            };
            for prompt in &set.prompts {
                for &k in &ks {
                    if k > prompt.len() {
                        bail!("k = {k} exceeds the length of prompt {}", prompt.id);
                    }
                    emit(&mut w, Context::new(prompt.id, &prompt.xs[..k], &prompt.ys[..k]))?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let gold = load_prompts(&a.gold)?;
    let config = BootstrapConfig {
        n_boot: a.bootstrap,
        ci_level: a.ci,
        seed: a.seed,
    };
    let fixed_ks = a.k_list.as_deref().map(parse_k_list).transpose()?;
    let mut names = HashSet::new();
    let mut curves = Vec::new();
    for path in &a.preds {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| anyhow!("{}: no file name", path.display()))?;
        if !names.insert(name.clone()) {
            bail!("two prediction files are both named `{name}`");
        }
        let records = read_records(path)?;
        let ks = match &fixed_ks {
            Some(ks) => ks.clone(),
            None => records.iter().map(|r| r.k).collect::<BTreeSet<_>>().into_iter().collect(),
        };
        if ks.is_empty() {
            bail!("{}: no predictions", path.display());
        }
        let handle = PredictionFile::from_records(name.clone(), &records);
        let losses = squared_errors(&handle, &gold.prompts, &ks).with_context(|| format!("scoring {}", path.display()))?;
        curves.push(curve_from_losses(&name, &ks, &losses, &config)?);
    }
    write_curves_csv(&a.out, &curves)?;
    if let Some(svg) = &a.svg {
        let opts = SvgOptions {
            log_y: a.log_y,
            title: a.title.clone(),
            ..SvgOptions::default()
        };
        write_svg(svg, &curves, &opts)?;
    }
    Ok(())
}

fn prompt_file(path: &Path, mixture: MixtureSpec, suite: &icl_core::eval::MultiTaskSuite, prompts: Vec<Prompt>) -> Result<()> {
    let set = PromptSet {
        header: PromptSetHeader {
            format_version: FORMAT_VERSION,
            mixture,
            input: suite.input.clone(),
            p: suite.config.p,
            n_queries: suite.config.n_queries,
            seed: suite.config.seed,
        },
        prompts,
    };
    set.write_jsonl(path)?;
    eprintln!("{}: {} prompts", path.display(), set.prompts.len());
    Ok(())
}

pub fn suite(a: SuiteArgs) -> Result<()> {
    let kind = match a.kind {
        SuiteKindArg::Monomials => SuiteKind::Monomials {
            d: a.d.unwrap_or(10),
            subset_size: a.subset_size,
        },
        SuiteKindArg::Fourier => SuiteKind::FourierSubset {
            max_freq: a.max_freq,
            subset_size: a.subset_size,
            half_width: a.half_width,
        },
        SuiteKindArg::Nlr => SuiteKind::NlrDiscrete {
            d: a.d.unwrap_or(8),
            noise_var: a.noise_var,
        },
    };
    let config = SuiteConfig {
        kind,
        k_tasks: a.k_tasks,
        p: a.p,
        n_id: a.n_id,
        n_ood: a.n_ood,
        n_queries: a.n_queries,
        seed: a.seed,
    };
    let mut suite = build_multitask_suite(&config)?;
    let id_prompts = std::mem::take(&mut suite.id_prompts);
    let ood_prompts = std::mem::take(&mut suite.ood_prompts);
    let id_mixture = match suite.pretrain_families.as_slice() {
        [one] => MixtureSpec::single(one.clone()),
        many => MixtureSpec::uniform(many.to_vec()),
    };
    prompt_file(&a.id_out, id_mixture, &suite, id_prompts)?;
    let ood_mixture = MixtureSpec::uniform(suite.ood_families.clone());
    prompt_file(&a.ood_out, ood_mixture, &suite, ood_prompts)?;
    if let Some(meta) = &a.meta_out {
        let summary = serde_json::json!({
            "config": suite.config,
            "pool_size": suite.pool_size.map(|n| n.to_string()),
            "input": suite.input,
            "pretrain_families": suite.pretrain_families,
            "ood_families": suite.ood_families,
        });
        std::fs::write(meta, serde_json::to_string_pretty(&summary)?).with_context(|| format!("writing {}", meta.display()))?;
    }
    Ok(())
}

/// Checkpoint dumps laid out as `<dir>/<step>/id.jsonl` and `<dir>/<step>/ood.jsonl`.
fn read_dumps(dir: &Path) -> Result<Vec<CheckpointDump>> {
    let mut steps = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let entry = entry?;
        if !entry.file_type()?.is_dir() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        let step: u64 = name
            .parse()
            .with_context(|| format!("{}: checkpoint directories are named by step", entry.path().display()))?;
        steps.push((step, entry.path()));
    }
    if steps.is_empty() {
        bail!("{}: no checkpoint directories", dir.display());
    }
    steps.sort();
    steps
        .into_iter()
        .map(|(step, path)| {
            let read = |f: &str| -> Result<Vec<PredictionRecord>> { Ok(read_records(&path.join(f))?) };
            Ok(CheckpointDump {
                step,
                id_preds: read("id.jsonl")?,
                ood_preds: read("ood.jsonl")?,
            })
        })
        .collect()
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let id_gold = load_prompts(&a.id_gold)?;
    let ood_gold = load_prompts(&a.ood_gold)?;
    let dumps = read_dumps(&a.dumps_dir)?;
    let ks = match &a.k_list {
        Some(s) => parse_k_list(s)?,
        None => dumps[0].id_preds.iter().map(|r| r.k).collect::<BTreeSet<_>>().into_iter().collect(),
    };
    let report = checkpoint_sweep(&dumps, &id_gold.prompts, &ood_gold.prompts, &ks, a.window)?;
    let mut w = csv_writer(&a.out)?;
    w.write_record(["step", "id_loss", "ood_loss", "id_smoothed", "ood_smoothed"])?;
    for i in 0..report.steps.len() {
        w.write_record([
            report.steps[i].to_string(),
            report.id_loss[i].to_string(),
            report.ood_loss[i].to_string(),
            report.id_smoothed[i].to_string(),
            report.ood_smoothed[i].to_string(),
        ])?;
    }
    w.flush()?;
    println!("t_min = {}, final/min OOD loss = {}", report.t_min, report.ratio);
    Ok(())
}
