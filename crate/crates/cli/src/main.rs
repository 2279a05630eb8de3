use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use gpofdm::channel::ChannelRealization;
use gpofdm::harness::{self, SchemeChoice, SimConfig, Simulator};
use gpofdm::modem::OfdmConfig;
use gpofdm::psi_opt::{self, Objective, ObjectiveKind, SearchConfig};
use gpofdm::Complex64;

#[derive(Parser)]
#[command(name = "gpofdm", version, about = "OFDM link simulation with generalized prefixes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER sweep; writes a CSV table and a .meta.json sidecar.
    Sweep {
        /// TOML config file, or a preset name (example1, example2-tu, example2-bu).
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Override the scheme: cyclic, zero-pad, optimized or generalized:<alpha>.
        #[arg(long)]
        scheme: Option<SchemeChoice>,
    },
    /// Golden-section search for the best ψ on one channel.
    Optimize {
        /// Taps, inline ("0.7071,0.7071", complex as "re:im") or a file.
        #[arg(long)]
        taps: String,
        #[arg(long)]
        n: usize,
        /// Guard length (default N/4).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value = "4")]
        m: usize,
        #[arg(long, default_value = "minpe")]
        objective: ObjectiveKind,
        /// Operating point for minpe.
        #[arg(long, default_value_t = 20.0)]
        ebno_db: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
    /// Closed-form BER over an Eb/N0 grid, as CSV on stdout.
    Analytic {
        #[arg(long)]
        taps: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "4")]
        m: usize,
        /// Frequency shift α of ψ = e^{jα}.
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        /// Comma-separated Eb/N0 values in dB.
        #[arg(long, value_delimiter = ',', required = true)]
        ebno_grid: Vec<f64>,
    },
    /// Complex-multiplication counts of the generalized prefix.
    Budget {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        z: usize,
        #[arg(long, default_value = "minpe")]
        objective: ObjectiveKind,
        #[arg(long, default_value = "4")]
        m: usize,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep {
            config,
            out,
            seed,
            threads,
            scheme,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(s) = scheme {
                cfg.scheme = s;
            }
            let sim = Simulator::new(cfg)?;
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(t) = threads {
                pool = pool.num_threads(t);
            }
            let curve = pool.build()?.install(|| sim.run_sweep())?;
            harness::write_results(&curve, &out)
                .with_context(|| format!("writing {}", out.display()))?;
            for p in &curve.points {
                let bound = if p.upper_bound { " (upper bound)" } else { "" };
                println!("{:6.2} dB  BER {:.3e}{bound}", p.ebno_db, p.ber);
            }
            Ok(())
        }
        Command::Optimize {
            taps,
            n,
            k,
            m,
            objective,
            ebno_db,
            tol,
        } => {
            let h = parse_taps(&taps)?;
            let cfg = OfdmConfig::new(n, k.unwrap_or(n / 4), m)?;
            let obj = match objective {
                ObjectiveKind::MinPe => Objective::MinPe {
                    ebno_linear: 10f64.powf(ebno_db / 10.0),
                },
                ObjectiveKind::MaxMin => Objective::MaxMin,
            };
            let choice = psi_opt::optimize_psi(&h, &cfg, obj, &SearchConfig::for_subcarriers(n, tol))?;
            println!("alpha* = {:.9}", choice.alpha_star);
            println!("psi* = {:.9}{:+.9}j", choice.psi_star.re, choice.psi_star.im);
            println!("objective = {:.6e}", choice.objective_value);
            println!("iterations = {}", choice.iterations);
            Ok(())
        }
        Command::Analytic {
            taps,
            n,
            k,
            m,
            alpha,
            ebno_grid,
        } => {
            let h = parse_taps(&taps)?;
            let cfg = OfdmConfig::new(n, k, m)?;
            let psi = Complex64::from_polar(1.0, alpha);
            println!("ebno_db,ber");
            for db in ebno_grid {
                println!("{db},{:e}", harness::analytic_ber(&h, &cfg, psi, db)?);
            }
            Ok(())
        }
        Command::Budget {
            n,
            k,
            l,
            z,
            objective,
            m,
        } => {
            let b = psi_opt::cm_budget(&OfdmConfig::new(n, k, m)?, l, z, objective)?;
            println!("tx = {}", b.tx_cm);
            println!("rx_fixed = {}", b.rx_fixed_cm);
            println!("per_iteration = {}", b.per_iteration_cm);
            println!("total = {}", b.total_cm);
            Ok(())
        }
    }
}

fn load_config(arg: &str) -> Result<SimConfig> {
    let path = Path::new(arg);
    if path.exists() {
        return Ok(SimConfig::from_file(path)?);
    }
    SimConfig::preset(arg).with_context(|| format!("{arg} is neither a config file nor a preset"))
}

/// Comma/whitespace separated taps; `re` or `re:im`; `#` starts a comment.
fn parse_taps(arg: &str) -> Result<ChannelRealization> {
    let text = if Path::new(arg).is_file() {
        std::fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?
    } else {
        arg.to_owned()
    };
    let mut taps = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let (re, im) = tok.split_once(':').unwrap_or((tok, "0"));
            let parse = |s: &str| s.trim().parse::<f64>().with_context(|| format!("bad tap {tok:?}"));
            taps.push(Complex64::new(parse(re)?, parse(im)?));
        }
    }
    if taps.is_empty() {
        bail!("no channel taps given");
    }
    Ok(ChannelRealization::new(taps)?)
}
