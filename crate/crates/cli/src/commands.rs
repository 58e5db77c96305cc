use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use gptcm::evaluation::{
    brier_score, kaplan_meier, predict_survival, recovery, summarize_chains, time_grid, PredictionCurve,
    PredictionMode, PosteriorSummary,
};
use gptcm::io::chains::FIT_FILE;
use gptcm::io::manifest::MANIFEST_FILE;
use gptcm::io::{
    fmt_f64, read_dataset, read_fit, read_graph, write_brier, write_dataset, write_fit, write_graph,
    write_recovery, write_summary, write_table, JobConfig, RunManifest, StoreFormat,
};
use gptcm::mcmc::{run_fit, FitResult};
use gptcm::model::types::{Selection, Variant};
use gptcm::simulation::{simulate, SimulationTruth};
use gptcm::{GptcmError, Result};

use crate::{Cli, Command, EvaluateArgs, FitArgs, Global, PredictArgs, SimulateArgs, SummarizeArgs};

pub const TRUTH_FILE: &str = "truth.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";

/// 2 for problems with the user's input, 3 for runtime failures.
pub fn exit_code(e: &GptcmError) -> u8 {
    match e {
        GptcmError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 2,
        e if e.is_input_error() => 2,
        _ => 3,
    }
}

struct Ctx<'a> {
    global: &'a Global,
    started: Instant,
    started_unix: u64,
}

impl Ctx<'_> {
    fn say(&self, msg: impl AsRef<str>) {
        if self.global.verbose {
            eprintln!("[{:>7.1}s] {}", self.started.elapsed().as_secs_f64(), msg.as_ref());
        }
    }

    fn out(&self) -> &Path {
        &self.global.out_dir
    }

    fn finish(&self, mut m: RunManifest, outputs: &[String]) -> Result<()> {
        m.add_outputs(self.out(), outputs)?;
        m.started_unix = self.started_unix;
        m.elapsed_seconds = self.started.elapsed().as_secs_f64();
        m.write(self.out())?;
        self.say(format!("wrote {} files and {MANIFEST_FILE} to {}", outputs.len(), self.out().display()));
        Ok(())
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let ctx = Ctx {
        global: &cli.global,
        started: Instant::now(),
        started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    if cli.global.threads == Some(0) {
        return Err(GptcmError::Config("--threads must be at least 1".into()));
    }
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(&ctx, base_config(&cli.global, None)?, a),
        Command::Fit(a) => cmd_fit(&ctx, base_config(&cli.global, None)?, a),
        Command::Summarize(a) => cmd_summarize(&ctx, base_config(&cli.global, Some(&a.fit))?, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, base_config(&cli.global, a.fit.first().map(|p| p.as_path()))?, a),
        Command::Predict(a) => cmd_predict(&ctx, base_config(&cli.global, Some(&a.fit))?, a),
    }
}

/// `--config` if given, else the configuration a fit was produced with.
fn base_config(global: &Global, fit_dir: Option<&Path>) -> Result<JobConfig> {
    if let Some(p) = &global.config {
        return JobConfig::load(p);
    }
    if let Some(dir) = fit_dir {
        let m = dir.join(MANIFEST_FILE);
        if m.exists() {
            return JobConfig::load(&m);
        }
    }
    Ok(JobConfig::default())
}

fn ensure_distinct(out: &Path, input: &Path) -> Result<()> {
    if let (Ok(a), Ok(b)) = (fs::canonicalize(out), fs::canonicalize(input)) {
        if a == b {
            return Err(GptcmError::Config(format!(
                "--out-dir {} is also an input directory; choose another",
                out.display()
            )));
        }
    }
    Ok(())
}

fn files_under(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d)? {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|f| f != MANIFEST_FILE) {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn add_inputs(m: &mut RunManifest, dir: &Path) -> Result<()> {
    for p in files_under(dir)? {
        m.add_input(&p)?;
    }
    Ok(())
}

fn cmd_simulate(ctx: &Ctx, mut cfg: JobConfig, a: &SimulateArgs) -> Result<()> {
    if let Some(p) = &a.preset {
        cfg.preset = Some(p.clone());
    }
    let mut sim = cfg.sim_config()?;
    if let Some(n) = a.n {
        sim.n = n;
    }
    if let Some(s) = ctx.global.seed {
        sim.seed = s;
    }
    if let Some(r) = a.replicate {
        cfg.replicate = r;
    }
    sim.validate()?;
    cfg.simulation = Some(serde_json::to_value(&sim)?);
    ctx.say(format!("simulating n = {}, p = {}, L = {} (replicate {})", sim.n, sim.p, sim.n_types, cfg.replicate));
    let (ds, truth) = simulate(&sim, cfg.replicate)?;
    let out = ctx.out();
    write_dataset(&ds, out)?;
    write_graph(&sim.graph(cfg.hyper.mrf_sparsity(), cfg.mrf_b)?, &out.join("graph.csv"))?;
    fs::write(out.join(TRUTH_FILE), serde_json::to_string_pretty(&truth)? + "\n")?;
    ctx.say(format!(
        "censored {:.1}%, cured {:.1}%",
        100.0 * truth.censoring_fraction(),
        100.0 * truth.cured_fraction()
    ));
    let mut outputs: Vec<String> = vec!["survival.csv".into()];
    outputs.extend((1..=ds.n_types()).map(|l| format!("X{l}.csv")));
    outputs.extend(["proportions.csv", "dataset.json", "graph.csv", TRUTH_FILE].map(String::from));
    ctx.finish(RunManifest::new("simulate", &cfg, sim.seed, None), &outputs)
}

fn cmd_fit(ctx: &Ctx, mut cfg: JobConfig, a: &FitArgs) -> Result<()> {
    ensure_distinct(ctx.out(), &a.data)?;
    if let Some(v) = &a.variant {
        cfg.variant = v.parse()?;
    }
    let run = &mut cfg.run;
    if let Some(x) = a.iterations {
        run.n_iterations = x;
    }
    if let Some(x) = a.warmup {
        run.n_warmup = x;
    }
    if let Some(x) = a.thin {
        run.thin = x;
    }
    if let Some(x) = a.chains {
        run.n_chains = x;
    }
    if let Some(s) = ctx.global.seed {
        run.seed = s;
    }
    if let Some(f) = &a.format {
        cfg.store_format = f.parse::<StoreFormat>()?;
    }
    cfg.validate()?;

    let ds = read_dataset(&a.data)?;
    let mut manifest = RunManifest::new("fit", &cfg, cfg.run.seed, Some(cfg.variant));
    add_inputs(&mut manifest, &a.data)?;
    let graph = if cfg.variant.selection() == Selection::Mrf {
        let path = a.graph.clone().unwrap_or_else(|| a.data.join("graph.csv"));
        if !path.exists() {
            return Err(GptcmError::Config(format!(
                "{} needs an MRF graph; {} does not exist (pass --graph)",
                cfg.variant,
                path.display()
            )));
        }
        if a.graph.is_some() {
            manifest.add_input(&path)?;
        }
        let dim = ds.p_per_type().iter().sum();
        Some(read_graph(&path, dim, cfg.hyper.mrf_sparsity(), cfg.mrf_b)?)
    } else {
        None
    };
    let spec = cfg.spec(graph.as_ref())?;
    spec.check_data(&ds)?;
    if a.dry_run {
        fs::create_dir_all(ctx.out())?;
        return ctx.finish(manifest, &[]);
    }
    ctx.say(format!(
        "fitting {} on n = {}: {} chains x {} iterations ({} warmup)",
        cfg.variant,
        ds.n(),
        cfg.run.n_chains,
        cfg.run.n_iterations,
        cfg.run.n_warmup
    ));
    let fit = run_fit(&spec, &ds, &cfg.run, ctx.global.threads)?;
    for c in &fit.chains {
        ctx.say(format!(
            "chain {}: {} draws, {:.1}s, {} incidents, {} clamps",
            c.chain_id,
            c.n_draws(),
            c.elapsed_secs,
            c.incidents.len(),
            c.clamp_events
        ));
    }
    let high: Vec<(f64, &str)> = fit
        .convergence
        .iter()
        .filter_map(|d| d.rhat.filter(|r| *r > 1.1).map(|r| (r, d.name.as_str())))
        .collect();
    if let Some((r, name)) = high.iter().copied().max_by(|a, b| a.0.total_cmp(&b.0)) {
        ctx.say(format!(
            "warning: R-hat above 1.1 for {} of {} scalars (largest {r:.3} for {name})",
            high.len(),
            fit.convergence.len()
        ));
    }
    let written = write_fit(&fit, ctx.out(), cfg.store_format)?;
    ctx.finish(manifest, &written)?;
    if !fit.complete {
        let msgs: Vec<String> = fit.failures.iter().map(|(id, m)| format!("chain {id}: {m}")).collect();
        return Err(GptcmError::Convergence(msgs.join("; ")));
    }
    Ok(())
}

struct LoadedFit {
    label: String,
    fit: FitResult,
    summary: PosteriorSummary,
}

fn load_fit(dir: &Path, threshold: f64, manifest: &mut RunManifest) -> Result<LoadedFit> {
    if !dir.join(FIT_FILE).exists() {
        return Err(GptcmError::Config(format!("{} is not a chain store (no {FIT_FILE})", dir.display())));
    }
    add_inputs(manifest, dir)?;
    let fit = read_fit(dir)?;
    let summary = summarize_chains(&fit.chains, threshold)?;
    Ok(LoadedFit {
        label: fit.spec.variant.name().to_string(),
        fit,
        summary,
    })
}

fn cmd_summarize(ctx: &Ctx, mut cfg: JobConfig, a: &SummarizeArgs) -> Result<()> {
    ensure_distinct(ctx.out(), &a.fit)?;
    if let Some(t) = a.threshold {
        cfg.mpm_threshold = t;
    }
    cfg.validate()?;
    let mut m = RunManifest::new("summarize", &cfg, cfg.run.seed, None);
    let f = load_fit(&a.fit, cfg.mpm_threshold, &mut m)?;
    m.variant = Some(f.fit.spec.variant);
    ctx.say(format!("{} pooled draws from {} chains", f.summary.n_draws, f.fit.chains.len()));
    let written = write_summary(&f.summary, ctx.out())?;
    ctx.finish(m, &written)
}

fn mode_for(cfg: &JobConfig, flag: Option<&str>, variant: Variant) -> Result<PredictionMode> {
    Ok(match flag {
        Some(s) => s.parse()?,
        None => cfg.prediction.mode.unwrap_or_else(|| PredictionMode::default_for(variant)),
    })
}

fn cmd_evaluate(ctx: &Ctx, cfg: JobConfig, a: &EvaluateArgs) -> Result<()> {
    for f in &a.fit {
        ensure_distinct(ctx.out(), f)?;
    }
    if a.truth.is_none() && a.validation.is_none() {
        return Err(GptcmError::Config("evaluate needs --truth and/or --validation".into()));
    }
    if a.train.is_some() && a.validation.is_none() {
        return Err(GptcmError::Config("--train is only used with --validation".into()));
    }
    cfg.validate()?;
    let mut m = RunManifest::new("evaluate", &cfg, cfg.run.seed, None);
    let mut fits = Vec::new();
    for dir in &a.fit {
        let mut f = load_fit(dir, cfg.mpm_threshold, &mut m)?;
        let dup = fits.iter().filter(|g: &&LoadedFit| g.label.starts_with(&f.label)).count();
        if dup > 0 {
            f.label = format!("{}#{}", f.label, dup + 1);
        }
        fits.push(f);
    }
    fs::create_dir_all(ctx.out())?;
    let mut written = Vec::new();

    if let Some(path) = &a.truth {
        m.add_input(path)?;
        let text = fs::read_to_string(path)?;
        let truth: SimulationTruth = serde_json::from_str(&text).map_err(|e| GptcmError::Parse {
            file: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let mut reports = Vec::new();
        for f in &fits {
            let r = recovery(&f.summary, &truth.state)?;
            ctx.say(format!("{}: beta RMSE {:.4}", f.label, r.beta_rmse));
            reports.push((f.label.clone(), r));
        }
        written.extend(write_recovery(&reports, ctx.out())?);
    }

    if let Some(vdir) = &a.validation {
        add_inputs(&mut m, vdir)?;
        let vds = read_dataset(vdir)?;
        let grid = time_grid(&vds.time, cfg.prediction.grid_quantile, cfg.prediction.grid_points)?;
        let mut rows = Vec::new();
        for f in &fits {
            let mode = mode_for(&cfg, a.mode.as_deref(), f.fit.spec.variant)?;
            let curve = predict_survival(&f.fit, &f.summary, &vds, &grid, mode)?;
            rows.push((f.label.clone(), brier_score(&curve, &vds.time, &vds.event)?));
        }
        if let Some(tdir) = &a.train {
            add_inputs(&mut m, tdir)?;
            let train = read_dataset(tdir)?;
            let km = kaplan_meier(&train.time, &train.event)?;
            let curve = PredictionCurve::reference(&km, vds.n(), &grid)?;
            rows.push(("KM".to_string(), brier_score(&curve, &vds.time, &vds.event)?));
        }
        for (label, pts) in &rows {
            if let Some(ibs) = gptcm::evaluation::integrated_brier(pts) {
                ctx.say(format!("{label}: integrated Brier {ibs:.5}"));
            }
        }
        written.extend(write_brier(&rows, ctx.out())?);
    }
    ctx.finish(m, &written)
}

fn cmd_predict(ctx: &Ctx, cfg: JobConfig, a: &PredictArgs) -> Result<()> {
    ensure_distinct(ctx.out(), &a.fit)?;
    cfg.validate()?;
    let mut m = RunManifest::new("predict", &cfg, cfg.run.seed, None);
    let f = load_fit(&a.fit, cfg.mpm_threshold, &mut m)?;
    m.variant = Some(f.fit.spec.variant);
    add_inputs(&mut m, &a.data)?;
    let ds = read_dataset(&a.data)?;
    let times = match &a.times {
        Some(t) => t.clone(),
        None => time_grid(&ds.time, cfg.prediction.grid_quantile, cfg.prediction.grid_points)?,
    };
    let mode = mode_for(&cfg, a.mode.as_deref(), f.fit.spec.variant)?;
    let curve = predict_survival(&f.fit, &f.summary, &ds, &times, mode)?;
    let mut rows = Vec::with_capacity(ds.n() * times.len());
    for (i, s) in curve.survival.iter().enumerate() {
        for (t, v) in times.iter().zip(s) {
            rows.push(vec![(i + 1).to_string(), fmt_f64(*t), fmt_f64(*v)]);
        }
    }
    fs::create_dir_all(ctx.out())?;
    let header = ["subject", "time", "survival"].map(String::from);
    write_table(&ctx.out().join(PREDICTIONS_FILE), &header, &rows)?;
    ctx.finish(m, &[PREDICTIONS_FILE.to_string()])
}
