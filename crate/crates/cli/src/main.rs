use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use anyonic::model_file::export_model;
use anyonic_cli::commands::{cmd_verify, sha256_hex, Ctx, ResultRecord};
use anyonic_cli::config::{load_model, parse_config, Experiment};
use anyonic_cli::{exit_code, write_atomic, EXIT_FAILED, EXIT_OK, EXIT_USAGE};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "anyonic", version, about = "Anyonic charge interferometry experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Raises the weak-tunneling bound on |t_j| for numerical experiments.
    #[arg(long, global = true)]
    max_tunneling_override: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Checks the consistency of a model.
    Verify {
        #[arg(long)]
        model: String,
    },
    /// Charge classes and their probabilities for a configured experiment.
    Classes {
        #[arg(long)]
        config: PathBuf,
    },
    /// Closed-form posterior, averaged state or seeded sampling.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Conductance curve of the quantum Hall device with harmonic analysis.
    Curve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Probe-count and measurement-time estimates.
    Plan {
        #[arg(long)]
        config: PathBuf,
    },
    /// Writes a model in the model-file format.
    ExportModel {
        #[arg(long)]
        model: String,
    },
}

enum Failure {
    Lib(anyonic::AnyonError),
    Usage(String),
    Io(anyhow::Error),
}

impl From<anyonic::AnyonError> for Failure {
    fn from(e: anyonic::AnyonError) -> Self {
        Failure::Lib(e)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()).with_context(|| format!("writing {}", p.display())).map_err(Failure::Io),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn record_text(r: &ResultRecord) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("records serialize");
    s.push('\n');
    s
}

fn classes_csv(r: &ResultRecord) -> String {
    let mut s = String::from("class,charges,p_right,pr_target\n");
    if let Some(list) = r.payload["classes"].as_array() {
        for (k, c) in list.iter().enumerate() {
            let charges: Vec<&str> = c["charges"].as_array().map(|v| v.iter().filter_map(|x| x.as_str()).collect()).unwrap_or_default();
            s.push_str(&format!("{k},{},{},{}\n", charges.join(" "), c["p_right"], c["pr_target"]));
        }
    }
    s
}

fn load_experiment(path: &Path, cli: &Cli) -> Result<(Experiment, String), Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| Failure::Usage(format!("{e:#}")))?;
    let config = parse_config(&text).map_err(|e| match e {
        anyonic::AnyonError::Parse(m) => anyonic::AnyonError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })?;
    let exp = Experiment::new(config, path.parent(), cli.max_tunneling_override)?;
    Ok((exp, sha256_hex(text.as_bytes())))
}

fn run(cli: &Cli) -> Result<i32, Failure> {
    let out = cli.out.as_deref();
    let csv = cli.format == Format::Csv;
    let finish = |r: ResultRecord, text: String| -> Result<i32, Failure> {
        emit(out, &text)?;
        eprintln!("{}: {}", r.command, if r.passed { "pass" } else { "FAIL" });
        Ok(if r.passed { EXIT_OK } else { EXIT_FAILED })
    };
    match &cli.command {
        Command::Verify { model } => {
            if csv {
                return Err(Failure::Usage("verify supports --format json only".into()));
            }
            let m = load_model(model, None)?;
            let r = cmd_verify(&m, model);
            for c in r.payload["report"]["checks"].as_array().into_iter().flatten() {
                if c["passed"] == false {
                    eprintln!("violation in {}: {}", c["name"], c["violations"]);
                }
            }
            let text = record_text(&r);
            finish(r, text)
        }
        Command::ExportModel { model } => {
            if csv {
                return Err(Failure::Usage("export-model supports --format json only".into()));
            }
            let m = load_model(model, None)?;
            emit(out, &export_model(&m))?;
            Ok(EXIT_OK)
        }
        Command::Classes { config } | Command::Run { config } | Command::Curve { config } | Command::Plan { config } => {
            let (exp, hash) = load_experiment(config, cli)?;
            let ctx = Ctx { exp: &exp, config_hash: hash, seed: cli.seed.or(exp.config.run.seed) };
            match &cli.command {
                Command::Classes { .. } => {
                    let r = ctx.classes()?;
                    let text = if csv { classes_csv(&r) } else { record_text(&r) };
                    finish(r, text)
                }
                Command::Run { .. } => {
                    if csv {
                        return Err(Failure::Usage("run supports --format json only".into()));
                    }
                    let r = ctx.run()?;
                    let text = record_text(&r);
                    finish(r, text)
                }
                Command::Curve { .. } => {
                    let (r, table) = ctx.curve()?;
                    let text = if csv { table } else { record_text(&r) };
                    finish(r, text)
                }
                _ => {
                    if csv {
                        return Err(Failure::Usage("plan supports --format json only".into()));
                    }
                    let r = ctx.plan()?;
                    let text = record_text(&r);
                    finish(r, text)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(c) => c,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            EXIT_FAILED
        }
    };
    ExitCode::from(code as u8)
}
