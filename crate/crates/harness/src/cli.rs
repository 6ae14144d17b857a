//! The `ddx` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use ddx_core::informativity::{informative_for, Dataset, Goal, PriorKnowledge};
use ddx_core::inputdesign::{generate_pe_input, input_from_json, input_to_json, pe_order};
use ddx_core::online::{
    default_max_steps, predicted_length, run_online_design, DefaultPolicy, GaussianPolicy,
    InputPolicy, SimulatedPlant,
};
use ddx_core::serial::vector_from;
use ddx_core::synthesis::{identify, stabilize_with_prior};
use ddx_core::system::adversarial_initial_state;
use ddx_core::{Error, LtiSystem};
use nalgebra::DVector;

use crate::campaign::{run_campaign, run_trial, CampaignSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ddx", version, about = "Experiment design and data informativity for LTI systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GoalArg {
    Id,
    Stab,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PkArg {
    All,
    Cont,
    Stab,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Default,
    Gaussian,
}

impl From<GoalArg> for Goal {
    fn from(g: GoalArg) -> Self {
        match g {
            GoalArg::Id => Goal::Identification,
            GoalArg::Stab => Goal::Stabilization,
        }
    }
}

impl From<PkArg> for PriorKnowledge {
    fn from(p: PkArg) -> Self {
        match p {
            PkArg::All => PriorKnowledge::All,
            PkArg::Cont => PriorKnowledge::Controllable,
            PkArg::Stab => PriorKnowledge::Stabilizable,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report the order of persistency of excitation of an input file.
    PeCheck {
        file: PathBuf,
        /// Required order; exit status 1 when the input falls short.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Generate an input that is persistently exciting of order n + 1.
    DesignOffline {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        length: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the online experiment against a simulated system.
    DesignOnline {
        #[arg(long)]
        system: PathBuf,
        /// A JSON vector file, `zero`, or `adversarial`.
        #[arg(long, default_value = "zero")]
        x0: String,
        #[arg(long, value_enum, default_value_t = PolicyArg::Default)]
        policy: PolicyArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide whether a dataset is informative.
    Informativity {
        data: PathBuf,
        #[arg(long, value_enum)]
        goal: GoalArg,
        #[arg(long, value_enum, default_value_t = PkArg::All)]
        pk: PkArg,
        /// Print the full verdict as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Identify (A, B) from data informative for identification.
    Identify {
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize a stabilizing gain certified by the data.
    Stabilize {
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = PkArg::All)]
        pk: PkArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte-Carlo campaign described by a spec file.
    Campaign {
        spec: PathBuf,
        /// Report path; defaults to the spec path with extension `report.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run only this trial and print its record.
        #[arg(long)]
        trial: Option<usize>,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Format(_) | Error::Json(_) | Error::Csv(_) | Error::Dimension(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type CliResult = std::result::Result<i32, Failure>;

/// Parse `args` (including the program name) and run; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_NEGATIVE
        }
    }
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: ddx_core::Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|e| match Failure::from(e) {
        Failure::Usage(m) => Failure::Usage(format!("{}: {m}", path.display())),
        Failure::Runtime(m) => Failure::Runtime(format!("{}: {m}", path.display())),
    })
}

fn load_dataset(path: &Path) -> std::result::Result<Dataset, Failure> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let file = fs::File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        in_file(path, Dataset::from_csv(file))
    } else {
        in_file(path, Dataset::from_json(&read(path)?))
    }
}

fn emit(out: Option<&Path>, text: &str) -> std::result::Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n"))
            .map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| Failure::Runtime(e.to_string()))
        }
    }
}

fn parse_x0(spec: &str, sys: &LtiSystem, seed: u64) -> std::result::Result<DVector<f64>, Failure> {
    match spec {
        "zero" => Ok(DVector::zeros(sys.n())),
        "adversarial" => adversarial_initial_state(sys, seed).ok_or_else(|| {
            Failure::Usage("--x0 adversarial: the system is controllable, no adversarial state exists".into())
        }),
        path => {
            let path = Path::new(path);
            let text = read(path)?;
            #[derive(serde::Deserialize)]
            #[serde(untagged)]
            enum X0File {
                Bare(Vec<f64>),
                Doc { x0: Vec<f64> },
            }
            let parsed: X0File = in_file(path, serde_json::from_str(&text).map_err(Error::from))?;
            let v = match parsed {
                X0File::Bare(v) | X0File::Doc { x0: v } => v,
            };
            in_file(path, vector_from("x0", &v, sys.n()))
        }
    }
}

fn dispatch(command: Command) -> CliResult {
    match command {
        Command::PeCheck { file, order } => {
            let u = in_file(&file, input_from_json(&read(&file)?))?;
            let k = pe_order(&u);
            println!("pe_order = {k} (m = {}, T = {})", u.nrows(), u.ncols());
            Ok(match order {
                Some(req) if k < req => {
                    println!("not persistently exciting of order {req}");
                    EXIT_NEGATIVE
                }
                Some(req) => {
                    println!("persistently exciting of order {req}");
                    EXIT_OK
                }
                None => EXIT_OK,
            })
        }
        Command::DesignOffline { n, m, length, seed, out } => {
            if m == 0 {
                return Err(Failure::Usage("--m must be positive".into()));
            }
            let u = generate_pe_input(m, n + 1, length, seed)?;
            emit(out.as_deref(), &input_to_json(&u))?;
            eprintln!("input of length {} is persistently exciting of order {}", u.ncols(), n + 1);
            Ok(EXIT_OK)
        }
        Command::DesignOnline { system, x0, policy, seed, max_steps, out } => {
            let sys = in_file(&system, LtiSystem::from_json(&read(&system)?))?;
            let x0 = parse_x0(&x0, &sys, seed)?;
            let mut plant = SimulatedPlant::new(sys.clone(), x0.clone())?;
            let mut default_policy = DefaultPolicy;
            let mut gaussian = GaussianPolicy::new(seed);
            let policy: &mut dyn InputPolicy = match policy {
                PolicyArg::Default => &mut default_policy,
                PolicyArg::Gaussian => &mut gaussian,
            };
            let limit = max_steps.unwrap_or_else(|| default_max_steps(sys.n(), sys.m()));
            let run = run_online_design(&mut plant, policy, limit)?;
            emit(out.as_deref(), &run.to_json())?;
            eprintln!(
                "online experiment finished after T = {} steps (predicted {})",
                run.len(),
                predicted_length(&sys, &x0)?
            );
            Ok(EXIT_OK)
        }
        Command::Informativity { data, goal, pk, json } => {
            let d = load_dataset(&data)?;
            let verdict = informative_for(&d, goal.into(), pk.into());
            if json {
                let text = serde_json::to_string_pretty(&verdict).map_err(|e| Failure::Runtime(e.to_string()))?;
                println!("{text}");
            } else {
                println!(
                    "{} informative for {} with prior knowledge {} (rank [X; U] = {}, rank X = {})",
                    if verdict.informative { "is" } else { "not" },
                    verdict.goal,
                    verdict.pk,
                    verdict.rank_xu.rank,
                    verdict.rank_x.rank
                );
                for (name, ok) in &verdict.conditions {
                    println!("  {name}: {ok}");
                }
            }
            Ok(if verdict.informative { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Identify { data, out } => {
            let d = load_dataset(&data)?;
            match identify(&d) {
                Ok(sys) => {
                    emit(out.as_deref(), &sys.to_json())?;
                    Ok(EXIT_OK)
                }
                Err(Error::NotInformative { reason, .. }) => {
                    eprintln!("not informative for identification: {reason}");
                    Ok(EXIT_NEGATIVE)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Stabilize { data, pk, out } => {
            let d = load_dataset(&data)?;
            match stabilize_with_prior(&d, pk.into()) {
                Ok(cert) => {
                    emit(out.as_deref(), &cert.to_json())?;
                    Ok(EXIT_OK)
                }
                Err(Error::NotInformative { reason, .. }) => {
                    eprintln!("not informative for stabilization: {reason}");
                    Ok(EXIT_NEGATIVE)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Campaign { spec, out, trial } => {
            let parsed = in_file(&spec, CampaignSpec::from_json(&read(&spec)?))?;
            if let Some(i) = trial {
                let record = run_trial(&parsed, i)?;
                let text = serde_json::to_string_pretty(&record).map_err(|e| Failure::Runtime(e.to_string()))?;
                println!("{text}");
                return Ok(if record.passed { EXIT_OK } else { EXIT_NEGATIVE });
            }
            let report = run_campaign(&parsed)?;
            let out = out.unwrap_or_else(|| spec.with_extension("report.json"));
            emit(Some(&out), &report.to_json())?;
            println!(
                "{} [{}]: {}/{} trials passed in {:.2}s; report written to {}",
                parsed.name,
                parsed.theorem,
                report.pass_count,
                parsed.trials,
                report.wall_time_secs,
                out.display()
            );
            for rec in report.failures() {
                let failed: Vec<&str> = rec
                    .checks
                    .iter()
                    .filter(|(_, ok)| !**ok)
                    .map(|(name, _)| name.as_str())
                    .collect();
                println!(
                    "FAIL trial {} (seed {}, n = {}, m = {}): {}{}",
                    rec.index,
                    rec.seed,
                    rec.n,
                    rec.m,
                    failed.join(", "),
                    rec.error.as_deref().map(|e| format!(" error: {e}")).unwrap_or_default()
                );
                println!("  reproduce: ddx campaign {} --trial {}", spec.display(), rec.index);
            }
            Ok(if report.all_passed() { EXIT_OK } else { EXIT_NEGATIVE })
        }
    }
}
