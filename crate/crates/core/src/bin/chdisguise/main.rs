//! `chdisguise` command-line front end.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use chdisguise::channels::{bit_flip, phase_flip, published_pair, random_channel, xz_flip};
use chdisguise::disguise::{
    default_beta_grid, log_beta_grid, trace_profile, write_points_csv, TradeoffPoint,
};
use chdisguise::io::{channel_to_json, read_channel, to_canonical_json, LOAD_TP_TOL};
use chdisguise::relations::{
    compose_mixing, containment_min_q, diamond_bracket, qkd_rate_bound, triangle_combine,
    triangle_region, ComposeMode,
};
use chdisguise::sdp_exact::{attach_exact, solve_channels};
use chdisguise::{Error, KrausChannel, Result, SolverMethod, SolverOptions, WarmStart};

#[derive(Parser)]
#[command(
    name = "chdisguise",
    version,
    about = "Mixing-probability profiles for disguising quantum channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads for β sweeps (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Trace-preservation tolerance applied to channel files.
    #[arg(long, global = true, default_value_t = LOAD_TP_TOL)]
    tp_tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Bound curves over a β grid; writes profile.csv and hull.csv.
    Profile {
        e: PathBuf,
        f: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// Output directory (default: profile CSV on stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Add an exact `alpha_exact` column.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        sdp: SdpArgs,
    },
    /// Exact optimum at one β.
    Exact {
        e: PathBuf,
        f: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[command(flatten)]
        sdp: SdpArgs,
    },
    /// Smallest q with E = (1 - q) F + q F_Δ.
    Containment { e: PathBuf, f: PathBuf },
    /// Combine E-F and F-G pairs into an achievable E-G pair.
    ///
    /// With `--pq-ef` and `--pq-fg` a single pair is combined. With three
    /// channel files the full region is traced and its boundary written as CSV.
    Triangle {
        #[arg(num_args = 0..=3)]
        channels: Vec<PathBuf>,
        #[arg(long, value_parser = parse_pair)]
        pq_ef: Option<TradeoffPoint>,
        #[arg(long, value_parser = parse_pair)]
        pq_fg: Option<TradeoffPoint>,
        #[command(flatten)]
        grid: GridArgs,
        /// Combine every profile point instead of every fifth.
        #[arg(long)]
        dense: bool,
        /// Output directory for region.csv and boundary.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mixing probabilities of a composed disguise.
    Compose {
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        q1: f64,
        #[arg(long)]
        p2: f64,
        #[arg(long)]
        q2: f64,
        #[arg(long, default_value = "product")]
        mode: ComposeMode,
    },
    /// Diamond-distance bracket from the equal mixing probability.
    ///
    /// Pass `--p-eq` and `--dim`, or two channel files to solve at β = 1.
    Diamond {
        #[arg(num_args = 0..=2)]
        channels: Vec<PathBuf>,
        #[arg(long)]
        p_eq: Option<f64>,
        #[arg(long)]
        dim: Option<usize>,
        #[command(flatten)]
        sdp: SdpArgs,
    },
    /// Key-rate upper bound `p log2(n)`.
    ///
    /// Pass `--p` and `--dim`, or the eavesdropper and observed channel files.
    Qkd {
        #[arg(num_args = 0..=2)]
        channels: Vec<PathBuf>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Seeded random channel JSON.
    GenRandom {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 2)]
        kraus: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Built-in channel JSON.
    Fixture {
        name: FixtureName,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureName {
    Bitflip,
    Phaseflip,
    Xzflip,
    #[value(name = "appendix-b-e")]
    AppendixBE,
    #[value(name = "appendix-b-f")]
    AppendixBF,
}

#[derive(Args)]
struct GridArgs {
    /// β grid as `log:<lo>:<hi>:<count>`.
    #[arg(long, value_parser = parse_grid)]
    beta_grid: Option<Grid>,
}

#[derive(Clone)]
struct Grid(Vec<f64>);

impl GridArgs {
    fn values(&self) -> Vec<f64> {
        self.beta_grid
            .clone()
            .map_or_else(default_beta_grid, |g| g.0)
    }
}

#[derive(Args)]
struct SdpArgs {
    #[arg(long, default_value_t = SolverOptions::default().tol)]
    sdp_tol: f64,
    #[arg(long, default_value_t = SolverOptions::default().max_iter)]
    sdp_max_iter: usize,
    /// `auto` or `none`.
    #[arg(long, default_value = "auto")]
    sdp_warm_start: WarmStart,
    /// `ipm` or `bisection`.
    #[arg(long, default_value = "ipm")]
    sdp_method: SolverMethod,
}

impl SdpArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            method: self.sdp_method,
            tol: self.sdp_tol,
            max_iter: self.sdp_max_iter,
            warm_start: self.sdp_warm_start,
            ..SolverOptions::default()
        }
    }
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [kind, lo, hi, count] = parts[..] else {
        return Err("expected log:<lo>:<hi>:<count>".into());
    };
    if kind != "log" {
        return Err(format!("unsupported grid kind '{kind}'"));
    }
    let lo: f64 = lo.parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("hi: {e}"))?;
    let count: usize = count.parse().map_err(|e| format!("count: {e}"))?;
    log_beta_grid(lo, hi, count)
        .map(Grid)
        .map_err(|e| e.to_string())
}

fn parse_pair(s: &str) -> std::result::Result<TradeoffPoint, String> {
    let (p, q) = s.split_once(',').ok_or("expected <p>,<q>")?;
    let p: f64 = p.trim().parse().map_err(|e| format!("p: {e}"))?;
    let q: f64 = q.trim().parse().map_err(|e| format!("q: {e}"))?;
    Ok(TradeoffPoint::new(p, q))
}

fn emit_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", to_canonical_json(value)?);
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::Validation(format!("missing --{flag}")))
}

fn load(paths: &[PathBuf], tp_tol: f64) -> Result<Vec<KrausChannel>> {
    paths.iter().map(|p| read_channel(p, tp_tol)).collect()
}

fn run(cli: Cli) -> Result<()> {
    let tp_tol = cli.tp_tol;
    match cli.command {
        Command::Profile {
            e,
            f,
            grid,
            out,
            exact,
            sdp,
        } => {
            let (e, f) = (read_channel(&e, tp_tol)?, read_channel(&f, tp_tol)?);
            let mut profile = trace_profile(&e, &f, &grid.values())?;
            if exact {
                attach_exact(&mut profile, &e.choi(), &f.choi(), &sdp.options())?;
            }
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    let mut w = create(&dir, "profile.csv")?;
                    profile.write_csv(&mut w)?;
                    w.flush()?;
                    let mut w = create(&dir, "hull.csv")?;
                    profile.write_hull_csv(&mut w)?;
                    w.flush()?;
                }
                None => profile.write_csv(io::stdout().lock())?,
            }
            log::info!(
                "profile: {} samples, {} cusps",
                profile.samples.len(),
                profile.cusp_count()
            );
        }
        Command::Exact { e, f, beta, sdp } => {
            let (e, f) = (read_channel(&e, tp_tol)?, read_channel(&f, tp_tol)?);
            let sol = solve_channels(&e, &f, beta, &sdp.options())?;
            let pt = sol.point();
            emit_json(&json!({
                "alpha_hat": sol.alpha_hat,
                "alpha_lo": sol.bounds.lower,
                "alpha_hi": sol.bounds.upper,
                "lower_bound": sol.lower_bound,
                "beta": sol.beta,
                "p": pt.p,
                "q": pt.q,
                "residual": sol.residual,
                "iterations": sol.iterations,
            }))?;
        }
        Command::Containment { e, f } => {
            let (e, f) = (read_channel(&e, tp_tol)?, read_channel(&f, tp_tol)?);
            let res = containment_min_q(&e, &f)?;
            emit_json(&json!({ "q_min": res.q_min }))?;
        }
        Command::Triangle {
            channels,
            pq_ef,
            pq_fg,
            grid,
            dense,
            out,
        } => match (channels.len(), pq_ef, pq_fg) {
            (0, Some(ef), Some(fg)) => {
                // The combination formula takes the F-G pair as (G weight, F weight).
                let pt = triangle_combine(ef, TradeoffPoint::new(fg.q, fg.p))?;
                emit_json(&json!({ "p2": pt.p, "q2": pt.q }))?;
            }
            (3, None, None) => {
                let ch = load(&channels, tp_tol)?;
                let grid = grid.values();
                let ef = trace_profile(&ch[0], &ch[1], &grid)?;
                let fg = trace_profile(&ch[1], &ch[2], &grid)?;
                let region = triangle_region(&ef, &fg, dense)?;
                match out {
                    Some(dir) => {
                        std::fs::create_dir_all(&dir)?;
                        let mut w = create(&dir, "region.csv")?;
                        write_points_csv(&region.points, &mut w)?;
                        w.flush()?;
                        let mut w = create(&dir, "boundary.csv")?;
                        write_points_csv(&region.boundary, &mut w)?;
                        w.flush()?;
                    }
                    None => write_points_csv(&region.boundary, io::stdout().lock())?,
                }
            }
            _ => {
                return Err(Error::Validation(
                    "triangle takes either --pq-ef and --pq-fg, or three channel files".into(),
                ))
            }
        },
        Command::Compose {
            p1,
            q1,
            p2,
            q2,
            mode,
        } => {
            let pt = compose_mixing(TradeoffPoint::new(p1, q1), TradeoffPoint::new(p2, q2), mode)?;
            emit_json(&json!({ "p2": pt.p, "q2": pt.q }))?;
        }
        Command::Diamond {
            channels,
            p_eq,
            dim,
            sdp,
        } => {
            let (p_eq, n) = match (channels.len(), p_eq) {
                (0, Some(p)) => (p, require(dim, "dim")?),
                (2, None) => {
                    let ch = load(&channels, tp_tol)?;
                    let sol = solve_channels(&ch[0], &ch[1], 1.0, &sdp.options())?;
                    (sol.point().p.min(0.5), ch[0].dim())
                }
                _ => {
                    return Err(Error::Validation(
                        "diamond takes either --p-eq and --dim, or two channel files".into(),
                    ))
                }
            };
            let b = diamond_bracket(p_eq, n)?;
            emit_json(&json!({ "p_eq": p_eq, "diamond_lo": b.lower, "diamond_hi": b.upper }))?;
        }
        Command::Qkd { channels, p, dim } => {
            let (p, n) = match (channels.len(), p) {
                (0, Some(p)) => (p, require(dim, "dim")?),
                (2, None) => {
                    // Observed channel = (1 - p) Eve + p E_Δ.
                    let ch = load(&channels, tp_tol)?;
                    (containment_min_q(&ch[1], &ch[0])?.q_min, ch[0].dim())
                }
                _ => {
                    return Err(Error::Validation(
                        "qkd takes either --p and --dim, or two channel files".into(),
                    ))
                }
            };
            emit_json(&json!({ "p": p, "rate_bound_bits": qkd_rate_bound(p, n)? }))?;
        }
        Command::GenRandom { dim, kraus, seed } => {
            println!("{}", channel_to_json(&random_channel(dim, kraus, seed)?)?);
        }
        Command::Fixture { name, a, b, c } => {
            let ch = match name {
                FixtureName::Bitflip => bit_flip(require(a, "a")?)?,
                FixtureName::Phaseflip => phase_flip(require(b, "b")?)?,
                FixtureName::Xzflip => xz_flip(require(c, "c")?)?,
                FixtureName::AppendixBE => published_pair().0,
                FixtureName::AppendixBF => published_pair().1,
            };
            println!("{}", channel_to_json(&ch)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CHDISGUISE_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            log::warn!("could not size worker pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
