use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use waveguide_modal::experiment::{self, ExperimentConfig, ExperimentKind};

#[derive(Parser, Debug)]
#[command(name = "waveguide-modal", version, about = "Modal stability experiments for time-harmonic waveguides")]
struct Cli {
    /// Configuration file with `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV path (defaults to `<experiment>_<tag>.csv`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transverse eigenvalues of the cross-section.
    Spectrum,
    /// Solve the modal acoustic problem.
    SolveAcoustic,
    /// Solve the modal Maxwell problem.
    SolveMaxwell,
    /// Inf-sup constant of one 1D modal problem.
    #[command(name = "infsup-1d")]
    InfSup1d(InfSupArgs),
    /// Ultraweak inf-sup constants over lengths and scalings.
    UwSweep,
    /// Compare DtN truncation against a longer domain.
    Transparency,
}

#[derive(Args, Debug)]
struct InfSupArgs {
    #[arg(long, allow_negative_numbers = true)]
    kappa_re: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    kappa_im: Option<f64>,
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    cells: Option<usize>,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => return fail(2, format!("cannot read {}: {e}", p.display())),
        },
        None => String::new(),
    };
    let mut cfg: ExperimentConfig = match experiment::parse_config(&text) {
        Ok(c) => c,
        Err(errs) => return fail(2, format!("invalid configuration\n{errs}")),
    };
    cfg.experiment = Some(match &cli.command {
        Command::Spectrum => ExperimentKind::Spectrum,
        Command::SolveAcoustic => ExperimentKind::Acoustic,
        Command::SolveMaxwell => ExperimentKind::Maxwell,
        Command::InfSup1d(_) => ExperimentKind::InfSup1d,
        Command::UwSweep => ExperimentKind::UwSweep,
        Command::Transparency => ExperimentKind::Transparency,
    });
    if let Command::InfSup1d(a) = &cli.command {
        if let Some(x) = a.kappa_re {
            if x < 0.0 {
                return fail(2, "--kappa-re must be non-negative");
            }
            cfg.kappa.re = x;
        }
        if let Some(x) = a.kappa_im {
            cfg.kappa.im = x;
        }
        if let Some(l) = a.length {
            if !(l > 0.0) {
                return fail(2, "--length must be positive");
            }
            cfg.lengths = vec![l];
        }
        if let Some(m) = a.cells {
            cfg.cells = Some(m);
        }
    }
    if let Some(s) = &cli.seed {
        let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            Some(h) => u64::from_str_radix(h, 16).ok(),
            None => s.parse().ok(),
        };
        match parsed {
            Some(v) => cfg.seed = v,
            None => return fail(2, format!("--seed expects an integer, got '{s}'")),
        }
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(o) = &cli.out {
        cfg.output = Some(o.clone());
    }
    if let Some(t) = cfg.threads {
        if t == 0 {
            return fail(2, "--threads must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            return fail(2, format!("cannot configure thread pool: {e}"));
        }
    }
    let output = cfg.output.clone().unwrap_or_else(|| cfg.default_output());
    let report = match experiment::run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) if e.is_numerical() => return fail(3, e),
        Err(e) => return fail(2, e),
    };
    if let Err(e) = experiment::write_atomic(&output, &report.to_csv()) {
        return fail(1, e);
    }
    println!("{}", report.summary(&output));
    ExitCode::SUCCESS
}
