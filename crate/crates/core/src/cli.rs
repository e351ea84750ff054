//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a domain failure (rejected path, refused
//! experiment, failed self-test), 2 on usage or input errors.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::channel::KrausMap;
use crate::constructions::{aklt_kraus, flip_channel, ghz_kraus, random_channel, shift_channel, weyl_channel};
use crate::error::{Error, Result};
use crate::io::{self, StateFile};
use crate::mps::{canonical_decompose_with, mps_vector, periodic_decomposition, DEFAULT_STATE_CAP};
use crate::parent_hamiltonian::{
    blocked_parent_model, default_interaction_length, gap_scaling, hamiltonian_path_experiment,
    universal_interaction_length, ExperimentConfig,
};
use crate::paths::{connect, Pairing, PathConfig, PathMode};
use crate::perron_frobenius::Classifier;
use crate::selftest;

#[derive(Debug, Parser)]
#[command(name = "channel-phases", version, about = "Classify CP maps, build certified paths, and study MPS parent Hamiltonians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a channel: Kraus rank, primitivity, irreducibility, Frobenius form.
    Analyze(AnalyzeArgs),
    /// Write a channel file for one of the built-in families.
    Construct(ConstructArgs),
    /// Build a certified path between two channels.
    Path(PathArgs),
    /// Expand the MPS of a channel on a ring of N sites.
    Mps(MpsArgs),
    /// Parent Hamiltonian of a channel's MPS and its low spectrum.
    Hamiltonian(HamiltonianArgs),
    /// Track the parent Hamiltonian gap along a certified path.
    PhasePath(PhasePathArgs),
    /// Run the built-in oracle checks.
    Selftest,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Channel JSON file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Weyl channel with Kraus rank r on dimension D.
    Weyl,
    /// Haar-like random channel (needs --D, --r, --seed).
    Random,
    /// Cyclic block channel with block sizes --dims and Kraus rank --r.
    Shift,
    /// The degree-2 flip channel on D = 2.
    Flip,
    /// GHZ tensor (D = 2, d = 2).
    Ghz,
    /// AKLT tensor (D = 2, d = 3).
    Aklt,
}

#[derive(Debug, Args, Serialize)]
pub struct ConstructArgs {
    pub family: Family,
    /// Bond dimension.
    #[arg(long = "D")]
    pub d: Option<usize>,
    /// Number of Kraus operators.
    #[arg(long)]
    pub r: Option<usize>,
    /// Block dimensions for `shift`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
pub enum PairingArg {
    AsGiven,
    Greedy,
}

#[derive(Debug, Args, Serialize)]
pub struct PathArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// fixed-rank | primitive | primitive-tp | fixed-degree
    #[arg(long, default_value = "primitive-tp")]
    pub mode: String,
    #[arg(long, default_value_t = 41)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of curve redraws.
    #[arg(long, default_value_t = 20)]
    pub retries: usize,
    /// How Kraus operators of the two endpoints are matched.
    #[arg(long, value_enum, default_value = "greedy")]
    pub pairing: PairingArg,
    /// Cap on the Wielandt power checked at each sample (default D⁴).
    #[arg(long)]
    pub n_max: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MpsArgs {
    #[arg(long)]
    pub channel: PathBuf,
    /// Number of sites.
    #[arg(long = "N")]
    pub n: usize,
    /// Also store the canonical block and periodic components.
    #[arg(long)]
    pub decompose: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of amplitudes.
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    pub cap: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct HamiltonianArgs {
    #[arg(long)]
    pub channel: PathBuf,
    /// Number of sites.
    #[arg(long = "N")]
    pub n: usize,
    /// Interaction length, in super-sites when blocking (default: Wielandt index + 1).
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Use the universal interaction length D⁴ + 1 instead of the default.
    #[arg(long, conflicts_with = "l")]
    pub universal_l: bool,
    /// Number of eigenvalues to compute.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Block this many sites into one (use the degree for periodic MPS).
    #[arg(long, default_value_t = 1)]
    pub block: usize,
    /// Also report gap and degeneracy for every admissible ring size up to N.
    #[arg(long)]
    pub scan: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PhasePathArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long = "N", default_value_t = 6)]
    pub n: usize,
    #[arg(long = "L", default_value_t = 3)]
    pub l: usize,
    #[arg(long, default_value_t = 21)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub retries: usize,
    /// Required ratio of the minimum gap to the smaller endpoint gap.
    #[arg(long, default_value_t = 0.05)]
    pub gap_floor: f64,
    /// CSV report (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_)
        | Error::Io(_)
        | Error::InvalidArgument(_)
        | Error::DimensionMismatch(_)
        | Error::RankMismatch { .. }
        | Error::CapExceeded(_) => 2,
        _ => 1,
    }
}

fn read_channel(path: &Path) -> Result<KrausMap> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    io::read_channel(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn echo<T: Serialize>(name: &str, args: &T) {
    let cfg = serde_json::to_string(args).unwrap_or_default();
    eprintln!("{name} {cfg}");
}

fn need(v: Option<usize>, flag: &str, family: Family) -> Result<usize> {
    v.ok_or_else(|| Error::InvalidArgument(format!("{family:?} needs --{flag}").to_lowercase()))
}

fn construct(a: &ConstructArgs) -> Result<KrausMap> {
    Ok(match a.family {
        Family::Weyl => weyl_channel(need(a.d, "D", a.family)?, need(a.r, "r", a.family)?)?,
        Family::Random => random_channel(need(a.d, "D", a.family)?, need(a.r, "r", a.family)?, a.seed)?,
        Family::Shift => {
            if a.dims.is_empty() {
                return Err(Error::InvalidArgument("shift needs --dims".into()));
            }
            shift_channel(&a.dims, need(a.r, "r", a.family)?, a.seed)?
        }
        Family::Flip => flip_channel(),
        Family::Ghz => KrausMap::new(ghz_kraus())?,
        Family::Aklt => KrausMap::new(aklt_kraus())?,
    })
}

/// Runs one command and returns the exit code.
fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Analyze(a) => {
            echo("analyze", &a);
            let map = read_channel(&a.input)?;
            let report = Classifier::default().analyze(&map)?;
            emit(&a.out, &io::to_json(&report)?)?;
            Ok(0)
        }
        Command::Construct(a) => {
            echo("construct", &a);
            let map = construct(&a)?;
            emit(&a.out, &io::write_channel(&map)?)?;
            Ok(0)
        }
        Command::Path(a) => {
            echo("path", &a);
            let mode: PathMode = a.mode.parse()?;
            let (x, y) = (read_channel(&a.a)?, read_channel(&a.b)?);
            let cfg = PathConfig {
                samples: a.samples,
                max_retries: a.retries,
                seed: a.seed,
                pairing: match a.pairing {
                    PairingArg::AsGiven => Pairing::AsGiven,
                    PairingArg::Greedy => Pairing::Greedy,
                },
                n_max: a.n_max,
                ..PathConfig::default()
            };
            let path = connect(mode, &x, &y, &cfg)?;
            emit(&a.out, &io::write_path(&path)?)?;
            if path.accepted {
                eprintln!("path accepted after {} retries", path.retries_used);
                Ok(0)
            } else {
                eprintln!("path rejected: {}", path.failures.join("; "));
                Ok(1)
            }
        }
        Command::Mps(a) => {
            echo("mps", &a);
            let map = read_channel(&a.channel)?;
            let d = map.dim();
            let v = crate::mps::mps_vector_with_boundary(map.kraus(), a.n, &crate::linalg::identity(d), a.cap)?;
            let mut file = StateFile::from_state(&v);
            if a.decompose {
                let form = canonical_decompose_with(&Classifier::default(), map.kraus(), a.seed)?;
                for (i, b) in form.blocks.iter().enumerate() {
                    let f = crate::linalg::c((form.scale * b.weight).powi(a.n as i32), 0.0);
                    let mut s = mps_vector(b.map.kraus(), a.n)?;
                    s.amplitudes *= f;
                    file.push_component(format!("block {i}: dim {}, degree {}", b.map.dim(), b.degree), &s);
                    for (k, mut p) in periodic_decomposition(b, a.n)?.into_iter().enumerate() {
                        p.amplitudes *= f;
                        file.push_component(format!("block {i}: periodic component {k}"), &p);
                    }
                }
            }
            emit(&a.out, &io::write_state(&file)?)?;
            Ok(0)
        }
        Command::Hamiltonian(a) => {
            echo("hamiltonian", &a);
            let map = read_channel(&a.channel)?;
            let l = match (a.l, a.universal_l) {
                (Some(l), _) => l,
                (None, true) => universal_interaction_length(map.kraus()),
                (None, false) => default_interaction_length(&Classifier::default(), map.kraus(), a.block)?,
            };
            eprintln!("interaction length L = {l}");
            let mut model = blocked_parent_model(map.kraus(), a.block, l, a.n)?;
            let s = model.diagonalize(a.k)?;
            eprintln!(
                "E0 = {:.6e}, degeneracy {}, gap {}",
                s.ground_energy,
                s.degeneracy,
                s.gap.map_or("none".into(), |g| format!("{g:.6e}"))
            );
            let mut file = io::ModelFile::from_model(&model);
            if a.scan {
                file.scaling = gap_scaling(map.kraus(), a.block, l, a.n, a.k)?;
            }
            emit(&a.out, &io::to_json(&file)?)?;
            Ok(0)
        }
        Command::PhasePath(a) => {
            echo("phase-path", &a);
            let (x, y) = (read_channel(&a.a)?, read_channel(&a.b)?);
            let cfg = ExperimentConfig {
                n: a.n,
                l: a.l,
                samples: a.samples,
                seed: a.seed,
                max_retries: a.retries,
                gap_floor: a.gap_floor,
            };
            let report = hamiltonian_path_experiment(&x, &y, &cfg)?;
            emit(&a.out, &report.to_csv())?;
            eprintln!(
                "{}: min gap {:.6e}, endpoint gap {:.6e} ({})",
                if report.accepted { "accepted" } else { "rejected" },
                report.min_gap,
                report.endpoint_gap,
                report.note
            );
            Ok(if report.accepted { 0 } else { 1 })
        }
        Command::Selftest => {
            let checks = selftest::run();
            print!("{}", selftest::table(&checks));
            Ok(if checks.iter().all(|c| c.passed) { 0 } else { 1 })
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
