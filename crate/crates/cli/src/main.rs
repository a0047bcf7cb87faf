use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pumpgate::sweep::{
    read_config_file, run_sweep_to_file, threshold_error_rate, threshold_scan, ConfigError,
    SweepError, SweepSpec, ThresholdKind,
};

const EXIT_CONFIG: u8 = 1;
const EXIT_INVARIANT: u8 = 2;

#[derive(Parser)]
#[command(name = "pumpgate", version, about = "Purified two-qubit gate error sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep single/two-particle error rates and nesting levels, writing CSV
    Sweep(SweepArgs),
    /// Locate the entangling threshold of the depolarized CNOT by bisection
    Threshold {
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// Default sweep preset (25 x 2 x 4 grid)
    Fig1 {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// flat `key = value` file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// comma list or logspace:lo,hi,n
    #[arg(long)]
    p_single: Option<String>,
    #[arg(long)]
    p_two: Option<String>,
    #[arg(long)]
    levels: Option<String>,
    /// expected | mc
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// measurement reliability, number or `q_local`
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    max_steps: Option<String>,
    #[arg(long)]
    p_herald: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SweepArgs {
    fn into_spec(self) -> Result<SweepSpec, ConfigError> {
        let mut pairs = match &self.config {
            Some(path) => read_config_file(path)?,
            None => Vec::new(),
        };
        let flags = [
            ("p_single", self.p_single),
            ("p_two", self.p_two),
            ("levels", self.levels),
            ("mode", self.mode),
            ("trials", self.trials),
            ("seed", self.seed),
            ("eta", self.eta),
            ("epsilon", self.epsilon),
            ("max_steps", self.max_steps),
            ("p_herald", self.p_herald),
            ("out", self.out.map(|p| p.display().to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                pairs.push((k.to_string(), v));
            }
        }
        SweepSpec::from_pairs(pairs)
    }
}

fn sweep(spec: SweepSpec) -> ExitCode {
    match run_sweep_to_file(&spec) {
        Ok(rows) => {
            eprintln!("wrote {} rows to {}", rows.len(), spec.output_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SweepError::Row { .. } if e.is_invariant_violation() => ExitCode::from(EXIT_INVARIANT),
                SweepError::Row { .. } => ExitCode::from(EXIT_CONFIG),
                SweepError::Io { .. } => ExitCode::FAILURE,
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    match cli.command {
        Command::Sweep(args) => match args.into_spec() {
            Ok(spec) => sweep(spec),
            Err(e) => {
                eprintln!("config error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Fig1 { out } => {
            let mut spec = SweepSpec::default();
            if let Some(out) = out {
                spec.output_path = out;
            }
            sweep(spec)
        }
        Command::Threshold { tolerance } => {
            let q = match threshold_scan(ThresholdKind::Entangling, tolerance) {
                Ok(q) => q,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match threshold_error_rate(q) {
                Ok(p) => {
                    println!("q_threshold={q:.12}");
                    println!("error_rate={p:.12}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_INVARIANT)
                }
            }
        }
    }
}
