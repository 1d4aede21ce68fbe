use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use qsent_core::pipeline::{
    self, emit_report, read_json_reports, EmitOptions, MetricsReport, ReportFormat,
    TrainedPipeline,
};
use qsent_core::{Error, ExperimentConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "qsent", version, about = "Hybrid quantum-classical sentiment experiments")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean, tokenize and vectorize a dataset; writes vocabulary.csv and
    /// vectors.csv into the output directory.
    Preprocess {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one experiment, save the fitted pipeline and print its metrics.
    Train {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Where to write the fitted pipeline (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Also write the metrics report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        emit: EmitArgs,
    },
    /// Score a saved pipeline on a labelled CSV (defaults to the test split
    /// of the dataset it was trained on).
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run the classifier × reduction grid of the config's [sweep] section.
    Sweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Report path; defaults to output.path from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        emit: EmitArgs,
    },
    /// Re-emit JSON reports as a CSV or JSON table.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        emit: EmitArgs,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides every seed in the config (split, SMO, VQC).
    #[arg(long)]
    seed: Option<u64>,
}

impl ExperimentArgs {
    fn load(&self) -> qsent_core::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct EmitArgs {
    /// csv or json; defaults to the config's output.format, else the file
    /// extension.
    #[arg(long)]
    format: Option<ReportFormat>,
    /// Write NA instead of wall-clock training times.
    #[arg(long)]
    redact_timing: bool,
}

impl EmitArgs {
    fn resolve(&self, path: &Path, fallback: Option<ReportFormat>) -> (ReportFormat, EmitOptions) {
        let by_ext = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Some(ReportFormat::Json),
            Some("csv") => Some(ReportFormat::Csv),
            _ => None,
        };
        let format = self.format.or(by_ext).or(fallback).unwrap_or_default();
        let opts = EmitOptions {
            redact_timing: self.redact_timing,
        };
        (format, opts)
    }
}

fn print_table(reports: &[MetricsReport], opts: EmitOptions) -> anyhow::Result<()> {
    pipeline::write_csv(reports, std::io::stdout().lock(), opts)?;
    Ok(())
}

fn all_converged(reports: &[MetricsReport]) -> bool {
    let stuck: Vec<_> = reports.iter().filter(|r| !r.converged).collect();
    for r in &stuck {
        log::warn!("did not converge: {}", r.config.summary());
    }
    stuck.is_empty()
}

fn preprocess(exp: &ExperimentArgs, out: &Path) -> anyhow::Result<bool> {
    let cfg = exp.load()?;
    let corpus = pipeline::load_corpus(&cfg.dataset)?;
    let split = pipeline::train_test_split(&corpus.labels, cfg.split.ratio, cfg.split.seed)?;
    let train_docs: Vec<&Vec<String>> = split.train.iter().map(|&i| &corpus.tokens[i]).collect();
    let vocab = qsent_core::textprep::build_vocabulary(&train_docs)?;

    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let vocab_path = out.join("vocabulary.csv");
    let file = std::fs::File::create(&vocab_path)
        .with_context(|| format!("creating {}", vocab_path.display()))?;
    vocab.write_csv(file)?;

    let vectors_path = out.join("vectors.csv");
    let mut w = csv::Writer::from_path(&vectors_path)
        .with_context(|| format!("creating {}", vectors_path.display()))?;
    let mut header = vec!["split".to_owned(), "label".to_owned()];
    header.extend(vocab.terms().iter().cloned());
    w.write_record(&header)?;
    let mut side = vec!["test"; corpus.len()];
    for &i in &split.train {
        side[i] = "train";
    }
    for (i, toks) in corpus.tokens.iter().enumerate() {
        let counts = qsent_core::textprep::vectorize(toks, &vocab);
        let mut rec = vec![
            side[i].to_owned(),
            corpus.label_map.decode(corpus.labels[i]).to_owned(),
        ];
        rec.extend(counts.0.iter().map(u32::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    println!(
        "{} documents ({} discarded), {} terms -> {}",
        corpus.len(),
        corpus.discarded_rows,
        vocab.len(),
        out.display()
    );
    Ok(true)
}

fn train(exp: &ExperimentArgs, out: &Path, report: Option<&Path>, emit: &EmitArgs) -> anyhow::Result<bool> {
    let cfg = exp.load()?;
    cfg.validate()?;
    let corpus = pipeline::load_corpus(&cfg.dataset)?;
    let run = pipeline::fit_experiment(&cfg, &corpus)?;
    std::fs::write(out, run.pipeline.to_json()?)
        .with_context(|| format!("writing {}", out.display()))?;
    let reports = [run.report];
    let (_, opts) = emit.resolve(out, None);
    if let Some(path) = report {
        let (format, opts) = emit.resolve(path, Some(cfg.output.format));
        emit_report(&reports, format, path, opts)?;
    }
    print_table(&reports, opts)?;
    Ok(all_converged(&reports))
}

fn evaluate(model: &Path, data: Option<&Path>) -> anyhow::Result<bool> {
    let text = std::fs::read_to_string(model)
        .with_context(|| format!("reading {}", model.display()))?;
    let fitted = TrainedPipeline::from_json(&text)?;
    let cfg = &fitted.config;
    let metrics = match data {
        Some(path) => {
            let docs = pipeline::load_dataset(path)?;
            let text = pipeline::text_pipeline(&cfg.dataset)?;
            let corpus = pipeline::build_corpus(&docs, &text, Some(&fitted.label_map))?;
            let all: Vec<usize> = (0..corpus.len()).collect();
            fitted.evaluate(&corpus, &all, 1)?
        }
        None => {
            let docs = pipeline::load_dataset(&cfg.dataset.path)?;
            let text = pipeline::text_pipeline(&cfg.dataset)?;
            let corpus = pipeline::build_corpus(&docs, &text, Some(&fitted.label_map))?;
            let split = pipeline::train_test_split(&corpus.labels, cfg.split.ratio, cfg.split.seed)?;
            fitted.evaluate(&corpus, &split.test, 1)?
        }
    };
    println!("{}", format_metrics(&metrics)?);
    Ok(true)
}

fn format_metrics(m: &pipeline::SplitMetrics) -> anyhow::Result<String> {
    let c = m.confusion;
    Ok(format!(
        "accuracy={:.6} precision={:.6} recall={:.6} f1={:.6} tp={} fp={} tn={} fn={}",
        m.accuracy, m.precision, m.recall, m.f1, c.tp, c.fp, c.tn, c.fn_
    ))
}

fn sweep(exp: &ExperimentArgs, out: Option<&Path>, emit: &EmitArgs) -> anyhow::Result<bool> {
    let cfg = exp.load()?;
    let reports = pipeline::run_sweep(&cfg)?;
    let out = out.map(Path::to_path_buf).or_else(|| cfg.output.path.clone());
    match out {
        Some(path) => {
            let (format, opts) = emit.resolve(&path, Some(cfg.output.format));
            emit_report(&reports, format, &path, opts)?;
            print_table(&reports, opts)?;
        }
        None => print_table(&reports, emit.resolve(Path::new(""), None).1)?,
    }
    Ok(all_converged(&reports))
}

fn report(input: &Path, out: &Path, emit: &EmitArgs) -> anyhow::Result<bool> {
    let reports = read_json_reports(input)?;
    if reports.is_empty() {
        bail!(Error::Dataset(format!("{} holds no reports", input.display())));
    }
    let (format, opts) = emit.resolve(out, None);
    emit_report(&reports, format, out, opts)?;
    Ok(true)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_usage() => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Preprocess { exp, out } => preprocess(exp, out),
        Command::Train {
            exp,
            out,
            report: rep,
            emit,
        } => train(exp, out, rep.as_deref(), emit),
        Command::Evaluate { model, data } => evaluate(model, data.as_deref()),
        Command::Sweep { exp, out, emit } => sweep(exp, out.as_deref(), emit),
        Command::Report { input, out, emit } => report(input, out, emit),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_NOT_CONVERGED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
