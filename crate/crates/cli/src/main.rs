mod config;
mod pipeline;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mhdlab_core::MhdError;
use serde::Serialize;

use config::{parse_tau_list, RunConfig};
use pipeline::{CarlemanSummary, Context, SpectrumSummary, StabilizeSummary, UcpSummary};
use report::{classify, write_json, Envelope, ErrorDoc};

/// Spectra, unique-continuation checks, Carleman sweeps and feedback
/// stabilization for the linearized 2-D MHD system.
#[derive(Parser)]
#[command(name = "mhdlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated τ values in units of 1/diam(G).
    #[arg(long, global = true)]
    tau_list: Option<String>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Run the simulation without feedback.
    #[arg(long, global = true)]
    open_loop: bool,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    Spectrum,
    Ucp,
    Carleman,
    Stabilize,
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Ucp => "ucp",
            Command::Carleman => "carleman",
            Command::Stabilize => "stabilize",
            Command::All => "all",
        }
    }

    fn runs(self, stage: Command) -> bool {
        self == stage || self == Command::All
    }
}

#[derive(Serialize, Default)]
struct Body {
    #[serde(skip_serializing_if = "Option::is_none")]
    spectrum: Option<SpectrumSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ucp: Option<UcpSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    carleman: Option<CarlemanSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stabilize: Option<StabilizeSummary>,
}

struct Failure {
    error: MhdError,
    hash: Option<String>,
    out: Option<PathBuf>,
}

fn io_err(path: &Path, e: std::io::Error) -> MhdError {
    MhdError::Config(format!("cannot write {}: {e}", path.display()))
}

fn effective_config(cli: &Cli) -> Result<RunConfig, MhdError> {
    let path = cli.config.as_ref().ok_or_else(|| MhdError::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = &cli.tau_list {
        cfg.carleman.tau_list = parse_tau_list(t).map_err(MhdError::Config)?;
    }
    if let Some(g) = cli.gamma {
        cfg.stabilize.gamma = g;
    }
    if cli.open_loop {
        cfg.stabilize.gain = false;
    }
    Ok(cfg)
}

/// Hash of everything except the output location.
fn config_hash(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.output.dir = PathBuf::new();
    c.hash()
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = effective_config(cli).map_err(|error| Failure { error, hash: None, out: cli.out.clone() })?;
    let hash = config_hash(&cfg);
    let out = cfg.output.dir.clone();
    let fail = |error: MhdError| Failure { error, hash: Some(hash.clone()), out: Some(out.clone()) };
    std::fs::create_dir_all(&out).map_err(|e| fail(io_err(&out, e)))?;
    let seed = cfg.seed;
    let ctx = Context::new(cfg).map_err(fail)?;
    let cmd = cli.command;
    let mut body = Body::default();
    let mut verdict: Option<MhdError> = None;
    let write = |t: &report::Table, name: &str| -> Result<(), Failure> {
        println!("# {name}\n{}", t.render());
        t.write(&out, name).map_err(|e| fail(io_err(&out.join(name), e)))
    };

    if cmd.runs(Command::Spectrum) {
        let (s, t) = pipeline::run_spectrum(&ctx).map_err(fail)?;
        write(&t, "spectrum.tsv")?;
        body.spectrum = Some(s);
    }
    if cmd.runs(Command::Ucp) {
        let (s, t) = pipeline::run_ucp(&ctx).map_err(fail)?;
        write(&t, "ucp.tsv")?;
        verdict = pipeline::ucp_failure(&s);
        body.ucp = Some(s);
    }
    if cmd.runs(Command::Carleman) {
        let (s, t) = pipeline::run_carleman(&ctx, seed).map_err(fail)?;
        write(&t, "carleman.tsv")?;
        body.carleman = Some(s);
    }
    if cmd.runs(Command::Stabilize) && verdict.is_none() {
        let (s, gain, trace) = pipeline::run_stabilize(&ctx, seed).map_err(fail)?;
        write(&gain, "gain.tsv")?;
        trace.write(&out, "trace.tsv").map_err(|e| fail(io_err(&out.join("trace.tsv"), e)))?;
        println!(
            "# decay\nenergy_rate {:.6e}  decay_rate {:.6e}  expected {:.6e}  within_tolerance {}\n",
            s.energy_rate, s.decay_rate, s.expected_rate, s.within_tolerance
        );
        body.stabilize = Some(s);
    }
    let env = Envelope {
        status: if verdict.is_none() { "ok" } else { "fail" },
        command: cmd.name(),
        version: env!("CARGO_PKG_VERSION"),
        core_version: mhdlab_core::VERSION,
        config_hash: &hash,
        seed,
        body,
    };
    let path = out.join("summary.json");
    write_json(&path, &env).map_err(|e| fail(io_err(&path, e)))?;
    match verdict {
        Some(e) => Err(fail(e)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, kind) = classify(&f.error);
            let doc = ErrorDoc {
                status: "error",
                kind,
                exit_code: code,
                message: f.error.to_string(),
                command: cli.command.name(),
                version: env!("CARGO_PKG_VERSION"),
                config_hash: f.hash.as_deref(),
            };
            let json = serde_json::to_string_pretty(&doc).expect("error document serializes");
            eprintln!("{json}");
            if let Some(dir) = f.out {
                if std::fs::create_dir_all(&dir).is_ok() {
                    let _ = write_json(&dir.join("error.json"), &doc);
                }
            }
            ExitCode::from(code as u8)
        }
    }
}
