use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use allostery::config::{RunConfig, BUDGET_ENV};
use allostery::Error;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "allostery", version, about = "Forge, simulate and certify finite stages of profinite wreath-product actions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Key-value run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    d: Option<usize>,
    #[arg(long, global = true)]
    m: Option<usize>,
    /// Ball radius for the window.
    #[arg(long, global = true)]
    radius: Option<usize>,
    /// `schedule` or a rational such as 1/2.
    #[arg(long, global = true)]
    epsilon: Option<String>,
    #[arg(long, global = true)]
    prime_strategy: Option<String>,
    #[arg(long, global = true, env = BUDGET_ENV)]
    budget_states: Option<u64>,
    #[arg(long, global = true)]
    budget_word_length: Option<usize>,
    #[arg(long, global = true)]
    stabilizer_radius: Option<usize>,
    /// Keep only the first N nontrivial ball elements.
    #[arg(long, global = true)]
    take: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also write the output into this directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Md,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Md => "md",
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Forge the subgroup datum for one element.
    Forge {
        #[arg(long)]
        gamma: String,
        /// Defaults to the smallest admissible prime.
        #[arg(long)]
        p: Option<u64>,
    },
    /// Certify the criterion on the configured window, or re-verify a certificate.
    Verify {
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Trajectory of a state under repeated action of one element.
    Simulate {
        /// Window JSON: a datum, a list of data, or any certificate.
        #[arg(long)]
        window: Option<PathBuf>,
        #[arg(long)]
        element: String,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Start state; defaults to the identity coset.
        #[arg(long)]
        start: Option<String>,
    },
    /// Comparison certificate for state sets A and B.
    Compare {
        #[arg(long)]
        window: Option<PathBuf>,
        /// Whitespace-separated states, or `random:N`.
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Audit a castle against an element.
    Audit {
        #[arg(long)]
        window: Option<PathBuf>,
        /// Castle text file; `transversal` or `random` builds one instead.
        #[arg(long)]
        castle: String,
        #[arg(long)]
        gamma: String,
    },
    /// Non-almost-finiteness report for the configured window.
    Report,
}

pub struct Output {
    pub text: String,
    pub name: &'static str,
    pub format: Format,
    pub pass: bool,
}

fn load_config(common: &Common) -> allostery::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::parse(&read(path)?)?,
        None => RunConfig::default(),
    };
    let set = |cfg: &mut RunConfig, key: &str, value: Option<String>| -> allostery::Result<()> {
        if let Some(v) = value {
            cfg.set(key, &v)
                .map_err(|msg| Error::Input(format!("--{}: {msg}", key.replace('_', "-"))))?;
        }
        Ok(())
    };
    let s = |x: Option<usize>| x.map(|v| v.to_string());
    set(&mut cfg, "d", s(common.d))?;
    set(&mut cfg, "m", s(common.m))?;
    set(&mut cfg, "radius", s(common.radius))?;
    set(&mut cfg, "epsilon", common.epsilon.clone())?;
    set(&mut cfg, "prime_strategy", common.prime_strategy.clone())?;
    set(&mut cfg, "budget_states", common.budget_states.map(|v| v.to_string()))?;
    set(&mut cfg, "budget_word_length", s(common.budget_word_length))?;
    set(&mut cfg, "stabilizer_radius", s(common.stabilizer_radius))?;
    set(&mut cfg, "window_size", s(common.take))?;
    set(&mut cfg, "seed", common.seed.map(|v| v.to_string()))?;
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn read(path: &Path) -> allostery::Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn run(cli: Cli) -> allostery::Result<Output> {
    let cfg = load_config(&cli.common)?;
    let format = cli.common.format;
    let out = match cli.command {
        Command::Forge { gamma, p } => commands::forge(&cfg, &gamma, p)?,
        Command::Verify { certificate: Some(path) } => commands::reverify(&cfg, &path)?,
        Command::Verify { certificate: None } => commands::verify(&cfg, format)?,
        Command::Simulate { window, element, steps, start } => {
            commands::simulate(&cfg, window.as_deref(), &element, steps, start.as_deref(), format)?
        }
        Command::Compare { window, a, b } => commands::compare(&cfg, window.as_deref(), &a, &b)?,
        Command::Audit { window, castle, gamma } => {
            commands::audit(&cfg, window.as_deref(), &castle, &gamma)?
        }
        Command::Report => commands::report(&cfg, format)?,
    };
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)
            .and_then(|_| {
                fs::write(
                    dir.join(format!("{}.{}", out.name, out.format.extension())),
                    &out.text,
                )
            })
            .map_err(|e| Error::Input(format!("cannot write to {}: {e}", dir.display())))?;
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{}", out.text);
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}
