//! Command-line pipeline: synthesize digits, cache deformed domains, train
//! the source model and its feature GAN, adapt under any regime, evaluate,
//! and run the full benchmark table/sweep with reports.
//!
//! Exit codes: 0 success, 2 bad arguments or config, 3 missing prerequisite
//! stage, 4 numerical abort, 1 anything else.

use clap::{Args, Parser, Subcommand};
use iada_core::data::cache::{cache_path, write_domain_cache};
use iada_core::data::{make_domain_sequence, realize_domain, write_digit_archive, DomainSpec, Pool, Split};
use iada_core::engine::{
    adapt, evaluate, evaluate_domain, train_source, train_source_gan, AdaptationConfig,
};
use iada_core::error::{Error, Result};
use iada_core::harness::{
    render_report, render_sweep_text, render_table_text, run_subdomain_sweep, run_table1,
    BenchData, ExperimentSpec, ResultTable, SweepOutput,
};
use iada_core::nets::ModelBundle;
use iada_core::runtime::{AccessAudit, DirLock, JsonlSink, MetricsSink, Mode, RunConfig, SeedSplitter};
use iada_core::Real;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "iada",
    about = "Incremental adversarial domain adaptation over drifting image domains",
    version
)]
struct Cli {
    /// Run configuration file (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the synthetic digit corpus as idx archives.
    SynthDigits(SynthDigitsArgs),
    /// Realize a ladder of deformed domains and cache them on disk.
    GenerateDomains(GenerateDomainsArgs),
    /// Supervised source training; writes `source.ckpt`.
    TrainSource,
    /// Train the source feature GAN on top of `source.ckpt`; writes
    /// `source-gan.ckpt`.
    TrainSdmGan,
    /// Adapt the target encoder through the configured domain sequence.
    Adapt(AdaptArgs),
    /// Accuracy of a checkpoint on the test data.
    Evaluate(EvaluateArgs),
    /// Run every regime cell over every seed and render the comparison table.
    RunTable1,
    /// Run the sub-domain granularity sweep and render curve + plot.
    RunSweep(RunSweepArgs),
    /// Re-render reports from previously saved table/sweep JSON.
    Report,
}

#[derive(Args)]
struct SynthDigitsArgs {
    /// Output directory for the idx archives.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    train: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GenerateDomainsArgs {
    /// First (mildest) compression factor.
    #[arg(long)]
    start: f64,
    /// Final compression factor.
    #[arg(long)]
    end: f64,
    /// Number of domains in the ladder.
    #[arg(long)]
    count: usize,
    /// Cache directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AdaptArgs {
    /// Adaptation regime: ada, ada-union, or iada.
    #[arg(long)]
    mode: Option<Mode>,
    /// Draw the real class from the feature generator instead of source data.
    #[arg(long)]
    sdm: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Checkpoint to evaluate (defaults to the configured adapt output).
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Evaluate the undeformed source test split through the frozen source
    /// encoder instead of a deformed domain.
    #[arg(long)]
    source_test: bool,
    /// Compression factor of the evaluation domain (defaults to the
    /// configured end factor).
    #[arg(long)]
    factor: Option<f64>,
}

#[derive(Args)]
struct RunSweepArgs {
    /// Comma-separated sub-domain counts.
    #[arg(long, default_value = "1,2,5,10,20,40")]
    counts: String,
    /// Sweep only plain incremental adaptation, skipping the SDM variant.
    #[arg(long)]
    skip_sdm: bool,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let quiet = cli.quiet;
    let mut progress = move |msg: &str| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    match cli.command {
        Command::SynthDigits(args) => synth_digits(&cfg, &args, &mut progress),
        Command::GenerateDomains(args) => generate_domains(&cfg, &args, &mut progress),
        Command::TrainSource => cmd_train_source(&cfg, &mut progress),
        Command::TrainSdmGan => cmd_train_sdm_gan(&cfg, &mut progress),
        Command::Adapt(args) => cmd_adapt(&cfg, &args, &mut progress),
        Command::Evaluate(args) => cmd_evaluate(&cfg, &args),
        Command::RunTable1 => cmd_run_table1(&cfg, &mut progress),
        Command::RunSweep(args) => cmd_run_sweep(&cfg, &args, &mut progress),
        Command::Report => cmd_report(&cfg),
    }
}

/// Load the idx archives, mapping absence to the stage that creates them.
fn load_bench(cfg: &RunConfig) -> Result<BenchData<Real>> {
    BenchData::load(&cfg.data_dir, cfg).map_err(|e| {
        Error::MissingPrerequisite(format!(
            "base dataset under {} unavailable ({e}); run `iada synth-digits` first",
            cfg.data_dir.display()
        ))
    })
}

fn source_ckpt(cfg: &RunConfig) -> PathBuf {
    cfg.checkpoint_dir.join("source.ckpt")
}

fn gan_ckpt(cfg: &RunConfig) -> PathBuf {
    cfg.checkpoint_dir.join("source-gan.ckpt")
}

/// Load a bundle checkpoint whether or not it carries a generator.
fn load_bundle(cfg: &RunConfig, path: &Path, stage_hint: &str) -> Result<ModelBundle<Real>> {
    if !path.exists() {
        return Err(Error::MissingPrerequisite(format!(
            "checkpoint {} not found; run `iada {stage_hint}` first",
            path.display()
        )));
    }
    let mut bundle = ModelBundle::<Real>::init(cfg.seed, Some(cfg.noise_dim));
    if bundle.load(path).is_ok() {
        return Ok(bundle);
    }
    let mut plain = ModelBundle::<Real>::init(cfg.seed, None);
    plain.load(path)?;
    Ok(plain)
}

fn synth_digits(cfg: &RunConfig, args: &SynthDigitsArgs, progress: &mut dyn FnMut(&str)) -> Result<()> {
    let out = args.out.clone().unwrap_or_else(|| cfg.data_dir.clone());
    let train = args.train.unwrap_or(cfg.train_count);
    let test = args.test.unwrap_or(cfg.test_count);
    let seed = args.seed.unwrap_or(cfg.seed);
    if train == 0 || test == 0 {
        return Err(Error::invalid("train and test counts must be ≥ 1"));
    }
    write_digit_archive(&out, train, test, seed)?;
    progress(&format!(
        "wrote {train} train + {test} test digits under {}",
        out.display()
    ));
    for split in [Split::Train, Split::Test] {
        println!("{}", split.images_path(&out).display());
        println!("{}", split.labels_path(&out).display());
    }
    Ok(())
}

fn generate_domains(
    cfg: &RunConfig,
    args: &GenerateDomainsArgs,
    progress: &mut dyn FnMut(&str),
) -> Result<()> {
    let seed = args.seed.unwrap_or(cfg.seed);
    let sequence = make_domain_sequence(args.start, args.end, args.count)?.with_base_seed(seed);
    let pool: Pool<Real> = load_bench(cfg)?.train;
    std::fs::create_dir_all(&args.out)?;
    for spec in &sequence.specs {
        let domain = realize_domain(&pool, spec, false)?;
        let path = cache_path(&args.out, spec);
        write_domain_cache(&path, &domain)?;
        progress(&format!("cached factor {:.4}", spec.factor));
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_train_source(cfg: &RunConfig, progress: &mut dyn FnMut(&str)) -> Result<()> {
    let data = load_bench(cfg)?;
    let _lock = DirLock::acquire(&cfg.checkpoint_dir)?;
    cfg.save(&cfg.checkpoint_dir.join("config.snapshot"))?;
    let audit = AccessAudit::new();
    let mut sink = JsonlSink::create(&cfg.checkpoint_dir.join("source-metrics.jsonl"))?;
    let mut bundle = ModelBundle::<Real>::init(cfg.seed, Some(cfg.noise_dim));
    let report = train_source(&mut bundle, &data.train, cfg, &audit, &mut sink)?;
    sink.flush()?;
    bundle.save(&source_ckpt(cfg), "source", cfg.seed)?;
    progress(&format!(
        "source training done: {} steps, final loss {:.4}",
        report.steps, report.final_loss
    ));
    println!("{}", source_ckpt(cfg).display());
    Ok(())
}

fn cmd_train_sdm_gan(cfg: &RunConfig, progress: &mut dyn FnMut(&str)) -> Result<()> {
    let data = load_bench(cfg)?;
    let mut bundle = ModelBundle::<Real>::init(cfg.seed, Some(cfg.noise_dim));
    let src = source_ckpt(cfg);
    if !src.exists() {
        return Err(Error::MissingPrerequisite(format!(
            "checkpoint {} not found; run `iada train-source` first",
            src.display()
        )));
    }
    let _lock = DirLock::acquire(&cfg.checkpoint_dir)?;
    bundle.load(&src)?;
    let audit = AccessAudit::new();
    let mut sink = JsonlSink::create(&cfg.checkpoint_dir.join("gan-metrics.jsonl"))?;
    let report = train_source_gan(&mut bundle, &data.train, cfg, &audit, &mut sink)?;
    sink.flush()?;
    bundle.save(&gan_ckpt(cfg), "source-gan", cfg.seed)?;
    progress(&format!(
        "feature GAN done: {} steps, mean D(f_g) {:.3}{}",
        report.steps,
        report.mean_d_on_generated,
        if report.mode_collapse_warning {
            " — WARNING: generator variance collapsed"
        } else {
            ""
        }
    ));
    println!("{}", gan_ckpt(cfg).display());
    Ok(())
}

fn cmd_adapt(cfg: &RunConfig, args: &AdaptArgs, progress: &mut dyn FnMut(&str)) -> Result<()> {
    let mode = args.mode.unwrap_or(cfg.mode);
    let sdm = args.sdm || cfg.sdm;
    let data = load_bench(cfg)?;
    let mut bundle = if sdm {
        load_bundle(cfg, &gan_ckpt(cfg), "train-sdm-gan")?
    } else {
        load_bundle(cfg, &source_ckpt(cfg), "train-source")?
    };
    if sdm && bundle.generator.is_none() {
        return Err(Error::MissingPrerequisite(
            "SDM adaptation needs a generator; run `iada train-sdm-gan` first".into(),
        ));
    }

    let run_dir = cfg
        .checkpoint_dir
        .join(format!("adapt-{mode}{}", if sdm { "-sdm" } else { "" }));
    let _lock = DirLock::acquire(&run_dir)?;
    cfg.save(&run_dir.join("config.snapshot"))?;

    let sequence = make_domain_sequence(cfg.start_factor, cfg.end_factor, cfg.domain_count)?
        .with_base_seed(cfg.seed);
    let train_domains = sequence
        .specs
        .iter()
        .map(|s| realize_domain(&data.train, s, false))
        .collect::<Result<Vec<_>>>()?;
    let test_domains = sequence
        .specs
        .iter()
        .map(|s| realize_domain(&data.test, s, true))
        .collect::<Result<Vec<_>>>()?;

    let adapt_cfg = AdaptationConfig::<Real> {
        mode,
        sdm,
        ..AdaptationConfig::from_run(cfg)?
    };
    let audit = AccessAudit::new();
    let mut sink = JsonlSink::create(&run_dir.join("metrics.jsonl"))?;
    let eval_batch = cfg.batch_size.max(128);
    let mut hook = |index: usize, _factor: f64, b: &ModelBundle<Real>| {
        evaluate_domain(b, &test_domains[index], true, eval_batch).map(Some)
    };
    let record = adapt(
        &mut bundle,
        (!sdm).then_some(&data.train),
        &train_domains,
        &adapt_cfg,
        &audit,
        &mut sink,
        Some(&run_dir),
        Some(&mut hook),
    )?;
    sink.flush()?;
    record.save(&run_dir.join("summary.json"))?;
    for outcome in &record.domains {
        if let Some(acc) = outcome.accuracy {
            println!("domain {} factor {:.2} accuracy {:.4}", outcome.index, outcome.factor, acc);
        }
    }
    progress(&format!(
        "adaptation done ({} steps); summary at {}",
        record.total_steps,
        run_dir.join("summary.json").display()
    ));
    Ok(())
}

fn cmd_evaluate(cfg: &RunConfig, args: &EvaluateArgs) -> Result<()> {
    let data = load_bench(cfg)?;
    let default_ckpt = || {
        let run_dir = cfg.checkpoint_dir.join(format!(
            "adapt-{}{}",
            cfg.mode,
            if cfg.sdm { "-sdm" } else { "" }
        ));
        run_dir.join(format!("ckpt_domain_{}", cfg.domain_count - 1))
    };
    let path = args.checkpoint.clone().unwrap_or_else(default_ckpt);
    let bundle = load_bundle(cfg, &path, "adapt")?;
    let batch = cfg.batch_size.max(128);
    let accuracy = if args.source_test {
        evaluate(&bundle, &data.test.images.view(), &data.test.labels, false, batch)?
    } else {
        let factor = args.factor.unwrap_or(cfg.end_factor);
        let splitter = SeedSplitter::new(cfg.seed);
        let spec = DomainSpec::new(factor, 0, splitter.derive("eval-domain", 0))?;
        let domain = realize_domain(&data.test, &spec, true)?;
        evaluate_domain(&bundle, &domain, true, batch)?
    };
    println!("accuracy {accuracy:.6}");
    Ok(())
}

fn cmd_run_table1(cfg: &RunConfig, progress: &mut dyn FnMut(&str)) -> Result<()> {
    let data = load_bench(cfg)?;
    let spec = ExperimentSpec::table(cfg);
    let table = run_table1(&spec, cfg, &data, Some(&cfg.report_dir), progress)?;
    render_report(Some(&table), None, &cfg.report_dir)?;
    print!("{}", render_table_text(&table));
    if table.is_partial() {
        eprintln!("note: table is partial; see failures above");
    }
    Ok(())
}

fn cmd_run_sweep(cfg: &RunConfig, args: &RunSweepArgs, progress: &mut dyn FnMut(&str)) -> Result<()> {
    let counts = parse_counts(&args.counts)?;
    let data = load_bench(cfg)?;
    let sweep = run_subdomain_sweep(
        cfg,
        &data,
        &counts,
        !args.skip_sdm,
        Some(&cfg.report_dir),
        progress,
    )?;
    render_report(None, Some(&sweep), &cfg.report_dir)?;
    print!("{}", render_sweep_text(&sweep));
    if sweep.is_partial() {
        eprintln!("note: sweep is partial; see failures above");
    }
    Ok(())
}

fn cmd_report(cfg: &RunConfig) -> Result<()> {
    let table_path = cfg.report_dir.join("table1.json");
    let sweep_path = cfg.report_dir.join("sweep.json");
    let table: Option<ResultTable> = read_json_if_present(&table_path)?;
    let sweep: Option<SweepOutput> = read_json_if_present(&sweep_path)?;
    if table.is_none() && sweep.is_none() {
        return Err(Error::MissingPrerequisite(format!(
            "no saved results under {}; run `iada run-table1` or `iada run-sweep` first",
            cfg.report_dir.display()
        )));
    }
    render_report(table.as_ref(), sweep.as_ref(), &cfg.report_dir)?;
    if let Some(t) = &table {
        print!("{}", render_table_text(t));
    }
    if let Some(s) = &sweep {
        print!("{}", render_sweep_text(s));
    }
    Ok(())
}

fn read_json_if_present<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    if !path.exists() {
        return Ok(None);
    }
    let bytes = std::fs::read(path)?;
    serde_json::from_slice(&bytes)
        .map(Some)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn parse_counts(text: &str) -> Result<Vec<usize>> {
    let counts = text
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::invalid(format!("bad count list `{text}`: {e}")))?;
    if counts.is_empty() {
        return Err(Error::invalid("count list is empty"));
    }
    Ok(counts)
}
