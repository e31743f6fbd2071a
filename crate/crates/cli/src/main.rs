//! Batch pipeline for simulated randomized-measurement experiments on spin
//! chains: simulate → acquire → estimate, with exact-oracle references,
//! estimate/oracle comparison and rotation-uniformity histograms.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{ClosedFormArgs, Target};
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "fcshadow",
    version,
    about = "Randomized-measurement simulation and classical-shadow estimation \
             of subsystem magnetization statistics"
)]
struct Cli {
    /// Worker threads (default: FCSHADOW_THREADS or all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,

    /// Parameter preset: `i` (Néel quench, N=10) or `ii` (tilted
    /// ferromagnet, N=12)
    #[arg(long, value_name = "I|II")]
    case: Option<String>,
}

impl ConfigArgs {
    fn load(&self) -> anyhow::Result<RunConfig> {
        let base = match self.case.as_deref().map(str::to_ascii_lowercase).as_deref() {
            None => RunConfig::case_i(),
            Some("i") | Some("1") => RunConfig::case_i(),
            Some("ii") | Some("2") => RunConfig::case_ii(),
            Some(other) => anyhow::bail!("unknown case `{other}` (expected i or ii)"),
        };
        match &self.config {
            Some(path) => {
                let mut cfg = RunConfig::load(path)?;
                // an explicit preset still overrides the file's system block
                if self.case.is_some() {
                    cfg.system = base.system.clone();
                }
                Ok(cfg)
            }
            None => Ok(base),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Prepare and evolve a state; write it with metadata
    Simulate {
        #[command(flatten)]
        common: ConfigArgs,

        /// System size
        #[arg(long)]
        n_qubits: Option<usize>,

        /// Coupling J0 in rad/s
        #[arg(long)]
        j0: Option<f64>,

        /// Power-law exponent of the coupling decay
        #[arg(long)]
        alpha_exp: Option<f64>,

        /// Initial state: neel | tilted
        #[arg(long)]
        initial_state: Option<String>,

        /// Tilt angle in radians (tilted ferromagnet only)
        #[arg(long)]
        theta_rad: Option<f64>,

        /// Per-site preparation bit-flip rates, comma separated
        #[arg(long)]
        bitflip_rates: Option<String>,

        /// Per-site dephasing probability per ms during the quench
        #[arg(long)]
        dephasing_gamma: Option<f64>,

        /// Trotter slice for the dephasing interleaving, in ms
        #[arg(long)]
        dephasing_dt_ms: Option<f64>,

        /// Evolution times in ms, comma separated; several times need a
        /// `{t}` placeholder in --out
        #[arg(long)]
        times_ms: Option<String>,

        /// Output state file (use `{t}` for the time when sweeping)
        #[arg(long)]
        out: String,
    },

    /// Simulate the randomized-measurement run on a stored state
    Acquire {
        #[command(flatten)]
        common: ConfigArgs,

        /// Input state file
        #[arg(long)]
        state: PathBuf,

        /// Number of random unitaries N_u
        #[arg(long)]
        n_u: Option<usize>,

        /// Shots per unitary N_M
        #[arg(long)]
        n_m: Option<usize>,

        /// Master seed of the acquisition
        #[arg(long)]
        seed: Option<u64>,

        /// Output dataset file
        #[arg(long)]
        out: PathBuf,
    },

    /// Shadow estimators over a dataset (fcs | pdf | moments | rates)
    Estimate {
        #[command(flatten)]
        common: ConfigArgs,

        /// Input dataset file
        #[arg(long)]
        dataset: PathBuf,

        /// What to estimate: fcs | pdf | moments | rates
        #[arg(long, default_value = "fcs")]
        target: Target,

        /// Subsystem, e.g. "4:7" or "4,5,6,7"
        #[arg(long)]
        subsystem: Option<String>,

        /// Measurement axis: x | y | z
        #[arg(long)]
        axis: Option<String>,

        /// Number of spectral grid points
        #[arg(long)]
        grid_points: Option<usize>,

        /// Average over all bulk windows of the subsystem's length
        #[arg(long)]
        bulk: bool,

        /// Jackknife error bars instead of the standard error
        #[arg(long)]
        jackknife: bool,

        /// Output table
        #[arg(long)]
        out: PathBuf,
    },

    /// Exact reference values from a state file or a closed form
    Oracle {
        #[command(flatten)]
        common: ConfigArgs,

        /// Input state file
        #[arg(long)]
        state: Option<PathBuf>,

        /// Closed-form family: neel-fcs-x | neel-pdf-x | neel-bitflip-fcs-z |
        /// tilted-fcs-z | tilted-fcs-x | tilted-pdf-z-halfpi | parity-z |
        /// parity-x
        #[arg(long)]
        closed_form: Option<String>,

        /// Subsystem size for closed forms
        #[arg(long, default_value_t = 4)]
        n_a: usize,

        /// Tilt angle for closed forms, in radians
        #[arg(long, default_value_t = 0.0)]
        theta_rad: f64,

        /// Site labels for the bit-flip closed form, comma separated
        #[arg(long)]
        sites: Option<String>,

        /// Bit-flip rates for the bit-flip closed form, comma separated
        #[arg(long)]
        rates: Option<String>,

        /// What to evaluate: fcs | pdf | moments
        #[arg(long, default_value = "fcs")]
        target: Target,

        /// Subsystem for state-file oracles
        #[arg(long)]
        subsystem: Option<String>,

        /// Measurement axis for state-file oracles
        #[arg(long)]
        axis: Option<String>,

        /// Number of spectral grid points
        #[arg(long)]
        grid_points: Option<usize>,

        /// Output table
        #[arg(long)]
        out: PathBuf,
    },

    /// Estimates side by side with exact values and z-scores
    Compare {
        #[command(flatten)]
        common: ConfigArgs,

        /// Estimate table produced by `estimate`
        #[arg(long)]
        estimate: PathBuf,

        /// State file to compute the exact side from
        #[arg(long)]
        state: Option<PathBuf>,

        /// Oracle table to read the exact side from (grid must match)
        #[arg(long)]
        oracle: Option<PathBuf>,

        /// Output comparison table
        #[arg(long)]
        out: PathBuf,
    },

    /// Rotation-uniformity histograms of a dataset
    Hist {
        #[command(flatten)]
        common: ConfigArgs,

        /// Input dataset file
        #[arg(long)]
        dataset: PathBuf,

        /// Output table
        #[arg(long)]
        out: PathBuf,
    },
}

fn init_threads(threads: Option<usize>) {
    if let Some(n) = commands::thread_count(threads) {
        let n = n.max(1);
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        faer::set_global_parallelism(if n == 1 {
            faer::Par::Seq
        } else {
            faer::Par::rayon(n)
        });
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads(cli.threads);
    match cli.command {
        Command::Simulate {
            common,
            n_qubits,
            j0,
            alpha_exp,
            initial_state,
            theta_rad,
            bitflip_rates,
            dephasing_gamma,
            dephasing_dt_ms,
            times_ms,
            out,
        } => {
            let mut cfg = common.load()?;
            if let Some(n) = n_qubits {
                cfg.system.n_qubits = n;
            }
            if let Some(j) = j0 {
                cfg.system.j0_rad_per_s = j;
            }
            if let Some(a) = alpha_exp {
                cfg.system.alpha_exp = a;
            }
            if let Some(kind) = initial_state {
                cfg.state.kind = config::parse_state_kind(&kind)?;
            }
            if let Some(theta) = theta_rad {
                cfg.state.theta = theta;
            }
            if let Some(rates) = bitflip_rates {
                cfg.state.bitflip_rates = Some(config::parse_float_list(&rates)?);
            }
            if let Some(g) = dephasing_gamma {
                cfg.noise.dephasing_gamma_per_ms = g;
            }
            if let Some(dt) = dephasing_dt_ms {
                cfg.noise.dephasing_dt_ms = dt;
            }
            if let Some(times) = times_ms {
                cfg.system.times_ms = config::parse_float_list(&times)?;
            }
            let written = commands::run_simulate(&cfg, &out)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Acquire {
            common,
            state,
            n_u,
            n_m,
            seed,
            out,
        } => {
            let mut cfg = common.load()?;
            if let Some(n) = n_u {
                cfg.acquisition.n_u = n;
            }
            if let Some(m) = n_m {
                cfg.acquisition.n_m = m;
            }
            if let Some(s) = seed {
                cfg.acquisition.seed = s;
            }
            commands::run_acquire(&cfg, &state, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Estimate {
            common,
            dataset,
            target,
            subsystem,
            axis,
            grid_points,
            bulk,
            jackknife,
            out,
        } => {
            let mut cfg = common.load()?;
            if let Some(s) = subsystem {
                cfg.analysis.subsystem = s;
            }
            if let Some(a) = axis {
                cfg.analysis.axis = a;
            }
            if let Some(g) = grid_points {
                cfg.analysis.grid_points = g;
            }
            if bulk {
                cfg.analysis.bulk = true;
            }
            if jackknife {
                cfg.analysis.jackknife = true;
            }
            commands::run_estimate(&cfg, &dataset, target, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Oracle {
            common,
            state,
            closed_form,
            n_a,
            theta_rad,
            sites,
            rates,
            target,
            subsystem,
            axis,
            grid_points,
            out,
        } => {
            let mut cfg = common.load()?;
            if let Some(s) = subsystem {
                cfg.analysis.subsystem = s;
            }
            if let Some(a) = axis {
                cfg.analysis.axis = a;
            }
            if let Some(g) = grid_points {
                cfg.analysis.grid_points = g;
            }
            let closed_args = match closed_form {
                Some(family) => Some(ClosedFormArgs {
                    family,
                    n_a,
                    theta_rad,
                    sites: sites.as_deref().map(config::parse_site_list).transpose()?,
                    rates: rates.as_deref().map(config::parse_float_list).transpose()?,
                }),
                None => None,
            };
            commands::run_oracle(&cfg, state.as_deref(), closed_args.as_ref(), target, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Compare {
            common,
            estimate,
            state,
            oracle,
            out,
        } => {
            let cfg = common.load()?;
            commands::run_compare(&cfg, &estimate, state.as_deref(), oracle.as_deref(), &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Hist {
            common,
            dataset,
            out,
        } => {
            let cfg = common.load()?;
            commands::run_hist(&cfg, &dataset, &out)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
