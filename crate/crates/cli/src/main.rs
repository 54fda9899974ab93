mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fluxonium::gates::GateName;
use fluxonium::rb::{RbNoise, DEFAULT_LENGTHS};
use fluxonium::{DeviceConfig, Error, Result};

use output::{Format, Header, Sink};

const EXIT_HELP: &str = "\
Exit codes:
  0  success
  1  config or input error (unreadable/invalid config, bad flags, I/O)
  2  physics error (domain, eigensolver, labeling, calibration, integrator)
  3  fit error (RB decay fit did not converge; raw data still printed)";

/// Heavy-fluxonium simulation toolkit.
///
/// Device constants come only from the config file; command flags choose
/// grids, drives and seeds but never override physics constants.
#[derive(Parser, Debug)]
#[command(name = "fluxsim", version, after_help = EXIT_HELP)]
struct Cli {
    /// Flat `key = value` device config. Without it the built-in reference
    /// device is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Seed for stochastic commands (required by `rb`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Energies and matrix elements versus external flux.
    Spectrum {
        /// Flux points in units of Φ0.
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        flux: Vec<f64>,
        #[arg(long, default_value_t = 6)]
        levels: usize,
        #[arg(long, default_value_t = fluxonium::circuit::DEFAULT_BASIS)]
        basis: usize,
    },
    /// T1 budget and echo T2 over a flux sweep.
    Coherence {
        #[arg(long, default_value_t = 0.4)]
        flux_min: f64,
        #[arg(long, default_value_t = 0.6)]
        flux_max: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// Spike–idle–antispike map over amplitude and idle time.
    Rabi2d {
        /// Spike amplitude range (GHz).
        #[arg(long, default_value_t = 0.0)]
        amp_min: f64,
        #[arg(long, default_value_t = 0.2)]
        amp_max: f64,
        #[arg(long, default_value_t = 101)]
        amp_points: usize,
        /// Idle range (ns).
        #[arg(long, default_value_t = 0.0)]
        idle_min: f64,
        #[arg(long, default_value_t = 150.0)]
        idle_max: f64,
        #[arg(long, default_value_t = 151)]
        idle_points: usize,
    },
    /// Native gate synthesis, composed gate lengths, coupling and dispersive shifts.
    Calibrate,
    /// Two-tone reset with resonator loss.
    Reset {
        /// g0 → h0 Rabi frequency (MHz).
        #[arg(long, default_value_t = 6.25)]
        rabi_g0h0: f64,
        /// h0 → e1 Rabi frequency (MHz).
        #[arg(long)]
        rabi_h0e1: Option<f64>,
        #[arg(long, default_value_t = 15.0)]
        duration: f64,
        /// Sample interval (ns).
        #[arg(long, default_value_t = 10.0)]
        sample: f64,
        /// Switch the resonator decay off (control run).
        #[arg(long)]
        no_decay: bool,
        /// Start in |g0⟩ instead of the thermal mixture.
        #[arg(long)]
        from_ground: bool,
    },
    /// Randomized benchmarking, optionally interleaved.
    Rb {
        #[arg(long, value_delimiter = ',')]
        lengths: Option<Vec<usize>>,
        #[arg(long, default_value_t = 75)]
        sequences: usize,
        #[arg(long, value_enum, default_value_t = NoiseKind::Lindblad)]
        noise: NoiseKind,
        /// Depolarizing strength per Clifford.
        #[arg(long, default_value_t = 4e-3)]
        epsilon: f64,
        #[arg(long, default_value_t = 300.0)]
        t1: f64,
        #[arg(long, default_value_t = 300.0)]
        t2: f64,
        /// Gates to interleave, e.g. `Z/2,Y/2,X/2`.
        #[arg(long, value_delimiter = ',')]
        interleave: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NoiseKind {
    None,
    Depolarizing,
    Lindblad,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Io(_) => 1,
        Error::Fit { .. } => 3,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let cfg = match &cli.config {
        Some(path) => DeviceConfig::load(path)?,
        None => DeviceConfig::default(),
    };
    let header = Header::new(&cfg, format!("{:?}", cli.command));
    let mut sink = Sink::new(&cli.out, cli.format, header)?;
    println!("fluxsim {}  config sha256 {}", env!("CARGO_PKG_VERSION"), sink.header.config_sha256);

    match &cli.command {
        Command::Spectrum { flux, levels, basis } => commands::spectrum(&cfg, &mut sink, flux, *levels, *basis)?,
        Command::Coherence { flux_min, flux_max, points } => {
            let grid = commands::linspace(*flux_min, *flux_max, *points)?;
            commands::coherence(&cfg, &mut sink, &grid)?
        }
        Command::Rabi2d { amp_min, amp_max, amp_points, idle_min, idle_max, idle_points } => {
            let amps = commands::linspace(*amp_min, *amp_max, *amp_points)?;
            let idles = commands::linspace(*idle_min, *idle_max, *idle_points)?;
            commands::rabi2d(&cfg, &mut sink, &amps, &idles)?
        }
        Command::Calibrate => commands::calibrate(&cfg, &mut sink)?,
        Command::Reset { rabi_g0h0, rabi_h0e1, duration, sample, no_decay, from_ground } => {
            let args = commands::ResetArgs {
                rabi_g0h0_mhz: *rabi_g0h0,
                rabi_h0e1_mhz: rabi_h0e1.unwrap_or(fluxonium::lindblad::ResetConfig::default().rabi_h0e1_mhz),
                duration_us: *duration,
                sample_ns: *sample,
                no_decay: *no_decay,
                from_ground: *from_ground,
            };
            commands::reset(&cfg, &mut sink, &args)?
        }
        Command::Rb { lengths, sequences, noise, epsilon, t1, t2, interleave } => {
            let seed = cli.seed.ok_or_else(|| Error::Config("rb needs --seed".into()))?;
            let noise = match noise {
                NoiseKind::None => RbNoise::None,
                NoiseKind::Depolarizing => RbNoise::Depolarizing { epsilon: *epsilon },
                NoiseKind::Lindblad => RbNoise::Lindblad {
                    t1_us: *t1,
                    t2_us: *t2,
                    device: commands::gate_device(&cfg)?,
                },
            };
            let interleave = interleave
                .iter()
                .map(|s| GateName::parse(s).map_err(|e| Error::Config(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let args = commands::RbArgs {
                lengths: lengths.clone().unwrap_or_else(|| DEFAULT_LENGTHS.to_vec()),
                sequences: *sequences,
                seed,
                noise,
                interleave,
            };
            commands::rb(&mut sink, &args)?
        }
    }
    for p in &sink.written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Fit { lengths, survival, .. } = &e {
                eprintln!("raw survival by length:");
                for (m, s) in lengths.iter().zip(survival) {
                    eprintln!("  {m:>5} {s:.6}");
                }
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
