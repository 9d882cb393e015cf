mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use sentinel_core::data::{
    encode_accounts, generate_synthetic, ingest, windowize, write_records, AnomalyKind,
    RecordFormat, SynthConfig, TransactionRecord, WindowLabel,
};
use sentinel_core::evaluation::{emit_report, evaluate, head_sweep, ReportFormat, ReportRow};
use sentinel_core::model::gradcheck;
use sentinel_core::serving::{run_stdin_loop, Server};
use sentinel_core::training::{fit, load_model, save_model, score_windows};
use sentinel_core::{Dataset, Report, StreamState};

use config::RunConfig;

const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Parser)]
#[command(
    name = "sentinel",
    version,
    about = "Transformer anomaly scoring for transaction ledgers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a labeled synthetic ledger (.csv or .jsonl).
    Gen {
        #[arg(long)]
        accounts: usize,
        #[arg(long)]
        records: usize,
        #[arg(long, default_value_t = 0.05)]
        anomaly_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Anomaly patterns to inject; all four by default.
        #[arg(long, value_delimiter = ',')]
        patterns: Vec<Pattern>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a model and write it to a model file.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write validation and test metrics here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
        /// Drop unparseable rows instead of failing.
        #[arg(long)]
        skip_bad_rows: bool,
    },
    /// Score a labeled ledger with a trained model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
        /// Overrides the threshold stored in the model.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_enum, default_value_t = LabelRule::Any)]
        label_rule: LabelRule,
        /// Row name in the report.
        #[arg(long, default_value = "sentinel")]
        name: String,
    },
    /// Train one model per head count and report each.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        heads: Vec<usize>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
    },
    /// Score JSON-lines records from stdin, or from TCP clients with --listen.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        listen: Option<String>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Compare analytic gradients with finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 5)]
        seeds: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Pattern {
    AmountSpike,
    Burst,
    OffHours,
    Structuring,
}

impl From<Pattern> for AnomalyKind {
    fn from(p: Pattern) -> Self {
        match p {
            Pattern::AmountSpike => AnomalyKind::AmountSpike,
            Pattern::Burst => AnomalyKind::Burst,
            Pattern::OffHours => AnomalyKind::OffHours,
            Pattern::Structuring => AnomalyKind::Structuring,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelRule {
    Any,
    Last,
}

impl From<LabelRule> for WindowLabel {
    fn from(r: LabelRule) -> Self {
        match r {
            LabelRule::Any => WindowLabel::Any,
            LabelRule::Last => WindowLabel::Last,
        }
    }
}

fn load_records(path: &Path, skip_bad: bool) -> Result<Vec<TransactionRecord>> {
    let format = RecordFormat::from_path(path)?;
    let ingested = ingest(path, format, skip_bad)?;
    for issue in &ingested.rejected {
        log::warn!("{}: line {}: {}", path.display(), issue.line, issue.message);
    }
    Ok(ingested.records)
}

fn gen(cfg: SynthConfig, out: &Path) -> Result<()> {
    let format = RecordFormat::from_path(out)?;
    let records = generate_synthetic(&cfg)?;
    write_records(out, &records, format)?;
    let anomalous = records.iter().filter(|r| r.is_anomalous()).count();
    eprintln!(
        "wrote {} records ({anomalous} anomalous) to {}",
        records.len(),
        out.display()
    );
    Ok(())
}

fn train(
    data: &Path,
    config: Option<&Path>,
    out: &Path,
    report: Option<(&Path, ReportFormat)>,
    skip_bad: bool,
) -> Result<()> {
    let run = RunConfig::load(config)?;
    let records = load_records(data, skip_bad)?;
    let ds = Dataset::prepare(&records, &run.split())?;
    log::info!(
        "windows: train {} validation {} test {}; feature dim {}",
        ds.train.len(),
        ds.validation.len(),
        ds.test.len(),
        ds.encoder.dim()
    );
    let outcome = fit(&ds, &run.model(), &run.train)?;
    save_model(&outcome.model, out)?;

    let h = &outcome.report.history;
    println!(
        "epochs {} best epoch {} validation AUC {:.6} threshold {:.6} ({:.1}s)",
        h.epoch_losses.len(),
        h.best_epoch,
        outcome.validation.auc,
        outcome.model.threshold,
        outcome.report.wall_clock_secs
    );
    match &outcome.test {
        Some(t) => println!(
            "test AUC {:.6} F1 {:.6} precision {:.6} recall {:.6}",
            t.auc, t.f1, t.precision, t.recall
        ),
        None => println!("test split empty or single-class; no test metrics"),
    }
    if let Some((path, format)) = report {
        let mut rows = vec![ReportRow {
            model: "validation".into(),
            metrics: outcome.validation.clone(),
        }];
        if let Some(t) = outcome.test {
            rows.push(ReportRow {
                model: "test".into(),
                metrics: t,
            });
        }
        emit_report(
            &Report {
                rows,
                best_heads: None,
            },
            format,
            path,
        )?;
    }
    Ok(())
}

fn eval(
    model_path: &Path,
    data: &Path,
    threshold: Option<f64>,
    rule: WindowLabel,
    name: String,
    report: (&Path, ReportFormat),
) -> Result<()> {
    let model = load_model(model_path)?;
    let records = load_records(data, false)?;
    if let Some(r) = records.iter().find(|r| r.label.is_none()) {
        bail!(
            "evaluation needs labeled records; {} at {} has no label",
            r.account_id,
            r.timestamp
        );
    }
    let seqs = encode_accounts(&records, &model.encoder);
    let (windows, wr) = windowize(&seqs, model.config.window, 1, rule)?;
    if !wr.short_accounts.is_empty() {
        log::warn!(
            "{} accounts shorter than the window were skipped",
            wr.short_accounts.len()
        );
    }
    let scores = score_windows(&windows, &model.params, &model.config)?;
    let metrics = evaluate(&scores, threshold.unwrap_or(model.threshold))
        .context("evaluation data must yield windows of both classes")?;
    println!(
        "{} windows: AUC {:.6} F1 {:.6} precision {:.6} recall {:.6}",
        windows.len(),
        metrics.auc,
        metrics.f1,
        metrics.precision,
        metrics.recall
    );
    emit_report(&Report::single(name, metrics), report.1, report.0)?;
    Ok(())
}

fn sweep(
    heads: &[usize],
    data: &Path,
    config: Option<&Path>,
    report: (&Path, ReportFormat),
) -> Result<()> {
    let run = RunConfig::load(config)?;
    let records = load_records(data, false)?;
    let ds = Dataset::prepare(&records, &run.split())?;
    let base = sentinel_core::ModelConfig {
        input_dim: ds.encoder.dim(),
        ..run.model()
    };
    let result = head_sweep(&ds, &base, &run.train, heads)?;
    for e in &result.entries {
        println!(
            "heads={} AUC {:.6} F1 {:.6} best epoch {}",
            e.heads, e.metrics.auc, e.metrics.f1, e.best_epoch
        );
    }
    println!("best heads {}", result.best_heads);
    emit_report(&result.to_report(), report.1, report.0)?;
    Ok(())
}

fn score(model_path: &Path, listen: Option<&str>, threshold: Option<f64>) -> Result<i32> {
    let Some(addr) = listen else {
        return Ok(run_stdin_loop(model_path, threshold)?);
    };
    let model = load_model(model_path)?;
    let state = Arc::new(StreamState::new(Arc::new(model), threshold));
    let server = Server::bind(addr, Arc::clone(&state))?;
    let handle = server.shutdown_handle();
    ctrlc::set_handler(move || handle.shutdown()).context("installing signal handler")?;
    eprintln!("listening on {}", server.local_addr()?);
    server.run()?;
    let c = state.counters();
    eprintln!(
        "scored {} warmup {} out_of_order {} malformed {}",
        c.scored, c.warmup, c.out_of_order, c.malformed
    );
    Ok(0)
}

fn gradcheck_cmd(seeds: u64) -> Result<i32> {
    let seeds: Vec<u64> = (0..seeds).collect();
    let reports = gradcheck::run_suite(&seeds)?;
    let mut worst = 0.0f64;
    for r in &reports {
        println!(
            "seed {} label {} params {} max rel error {:.3e} ({})",
            r.seed, r.label, r.parameters, r.max_rel_error, r.worst_tensor
        );
        worst = worst.max(r.max_rel_error);
    }
    println!("max relative error {worst:.3e}");
    Ok(if worst <= GRADCHECK_TOLERANCE { 0 } else { 1 })
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Gen {
            accounts,
            records,
            anomaly_rate,
            seed,
            patterns,
            out,
        } => {
            let mut cfg = SynthConfig::new(accounts, records, anomaly_rate, seed);
            if !patterns.is_empty() {
                let kinds: Vec<AnomalyKind> = patterns.into_iter().map(Into::into).collect();
                cfg = cfg.with_patterns(&kinds);
            }
            gen(cfg, &out)?;
        }
        Command::Train {
            data,
            config,
            out,
            report,
            format,
            skip_bad_rows,
        } => train(
            &data,
            config.as_deref(),
            &out,
            report.as_deref().map(|p| (p, format)),
            skip_bad_rows,
        )?,
        Command::Eval {
            model,
            data,
            report,
            format,
            threshold,
            label_rule,
            name,
        } => eval(
            &model,
            &data,
            threshold,
            label_rule.into(),
            name,
            (&report, format),
        )?,
        Command::Sweep {
            heads,
            data,
            report,
            config,
            format,
        } => sweep(&heads, &data, config.as_deref(), (&report, format))?,
        Command::Score {
            model,
            listen,
            threshold,
        } => return score(&model, listen.as_deref(), threshold),
        Command::Gradcheck { seeds } => return gradcheck_cmd(seeds),
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
