use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use invmilo::bench::{
    generate_instances, performance_profile, read_bench_csv, run_bench, write_bench_csv,
    write_log_csv, write_profile_csv, Generated,
};
use invmilo::driver::{preset, solve_inverse, DriverError, Limits, VariantConfig};
use invmilo::files::{read_instance, read_point_list, write_instance, FileError};
use invmilo::genset::{
    enumerate_feasible, extreme_points, is_generator_set, is_inverse_feasible, GensetError,
    DEFAULT_ENUMERATION_LIMIT,
};
use invmilo::mps::parse_mps;

#[derive(Parser)]
#[command(
    name = "invmilo",
    version,
    about = "Inverse mixed-integer linear optimization"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one inverse instance and print the objective and c*.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "CPTR-ES")]
        variant: String,
        /// Wall-clock limit in seconds.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-iteration CSV log.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Write 0 in every timing column.
        #[arg(long)]
        no_timings: bool,
    },
    /// Generate inverse instances from an MPS problem.
    Gen {
        #[arg(long)]
        mps: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every variant on every instance file in a directory.
    Bench {
        #[arg(long)]
        dir: PathBuf,
        /// Comma-separated variant names.
        #[arg(long, default_value = "CP,CP-ES,CPTR,CPTR-ES,CPTR-ES-DR")]
        variants: String,
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_timings: bool,
    },
    /// Performance-profile curves from a results CSV.
    Profile {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a generator set or candidate cost vectors by enumeration.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Generator points, or cost vectors in inverse-feasible mode.
        #[arg(long)]
        points: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Generator,
    InverseFeasible,
}

enum CliError {
    User(String),
    Internal(String),
}

impl From<FileError> for CliError {
    fn from(e: FileError) -> Self {
        CliError::User(e.to_string())
    }
}

impl From<DriverError> for CliError {
    fn from(e: DriverError) -> Self {
        match e {
            DriverError::CutGen(_) | DriverError::Master(_) => CliError::Internal(e.to_string()),
            _ => CliError::User(e.to_string()),
        }
    }
}

impl From<GensetError> for CliError {
    fn from(e: GensetError) -> Self {
        match e {
            GensetError::Inconclusive { .. } | GensetError::Lp(_) => {
                CliError::Internal(e.to_string())
            }
            _ => CliError::User(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::User(format!("{}: {e}", path.display()))
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::User(format!("{}: {e}", path.display()))
}

fn seconds(s: Option<f64>) -> Result<Option<Duration>, CliError> {
    s.map(|v| {
        Duration::try_from_secs_f64(v)
            .map_err(|_| CliError::User(format!("invalid time limit {v}")))
    })
    .transpose()
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

fn create(path: &Path) -> Result<io::BufWriter<fs::File>, CliError> {
    fs::File::create(path)
        .map(io::BufWriter::new)
        .map_err(io_err(path))
}

fn variant(name: &str, seed: u64) -> Result<VariantConfig, CliError> {
    Ok(preset(name.trim())?.with_seed(seed))
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    let mut stdout = io::stdout().lock();
    let out_err = |e: io::Error| CliError::Internal(e.to_string());
    match cmd {
        Cmd::Solve {
            instance,
            variant: name,
            time_limit,
            seed,
            log,
            no_timings,
        } => {
            let inst = read_instance(&instance)?;
            let cfg = variant(&name, seed)?;
            let limits = Limits {
                time: seconds(time_limit)?,
                ..Default::default()
            };
            let report = solve_inverse(&inst, &cfg, &limits)?;
            if let Some(path) = log {
                write_log_csv(&report.log, create(&path)?, !no_timings).map_err(csv_err(&path))?;
            }
            writeln!(stdout, "status {}", report.status).map_err(out_err)?;
            writeln!(stdout, "objective {}", report.objective).map_err(out_err)?;
            writeln!(stdout, "c* {}", fmt_vec(&report.c_star)).map_err(out_err)?;
            writeln!(stdout, "iterations {}", report.iterations).map_err(out_err)?;
            writeln!(stdout, "cuts {}", report.cuts).map_err(out_err)?;
        }
        Cmd::Gen {
            mps,
            seed,
            time_limit,
            out,
        } => {
            let text = fs::read_to_string(&mps).map_err(io_err(&mps))?;
            let problem =
                parse_mps(&text).map_err(|e| CliError::User(format!("{}: {e}", mps.display())))?;
            let generated = generate_instances(&problem, seed, seconds(time_limit)?, 10, 3)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            match generated {
                Generated::Instances(list) => {
                    fs::create_dir_all(&out).map_err(io_err(&out))?;
                    for inst in &list {
                        let path = out.join(format!("{}.json", inst.label));
                        write_instance(&path, inst)?;
                        writeln!(stdout, "{}", path.display()).map_err(out_err)?;
                    }
                }
                Generated::Dropped { attempts } => {
                    writeln!(stdout, "dropped {} after {attempts} attempts", problem.name)
                        .map_err(out_err)?;
                }
            }
        }
        Cmd::Bench {
            dir,
            variants,
            time_limit,
            seed,
            out,
            no_timings,
        } => {
            let configs = variants
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| variant(s, seed))
                .collect::<Result<Vec<_>, _>>()?;
            if configs.is_empty() {
                return Err(CliError::User("--variants lists no variant".into()));
            }
            let mut files: Vec<PathBuf> = fs::read_dir(&dir)
                .map_err(io_err(&dir))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            if files.is_empty() {
                return Err(CliError::User(format!(
                    "{}: no instance files (*.json)",
                    dir.display()
                )));
            }
            let instances = files
                .iter()
                .map(|p| read_instance(p))
                .collect::<Result<Vec<_>, _>>()?;
            let rows = run_bench(&instances, &configs, seconds(time_limit)?);
            write_bench_csv(&rows, create(&out)?, !no_timings).map_err(csv_err(&out))?;
            let solved = rows.iter().filter(|r| r.solved()).count();
            writeln!(stdout, "{solved}/{} cells solved", rows.len()).map_err(out_err)?;
        }
        Cmd::Profile { results, out } => {
            let file = fs::File::open(&results).map_err(io_err(&results))?;
            let rows = read_bench_csv(file)
                .map_err(|e| CliError::User(format!("{}: {e}", results.display())))?;
            if rows.is_empty() {
                return Err(CliError::User(format!(
                    "{}: no result rows",
                    results.display()
                )));
            }
            let points = performance_profile(&rows);
            write_profile_csv(&points, create(&out)?).map_err(csv_err(&out))?;
            writeln!(stdout, "{} curve points", points.len()).map_err(out_err)?;
        }
        Cmd::Verify {
            instance,
            mode,
            points,
        } => {
            let inst = read_instance(&instance)?;
            let listed = points.as_deref().map(read_point_list).transpose()?;
            let region = enumerate_feasible(&inst.problem, DEFAULT_ENUMERATION_LIMIT)?;
            match mode {
                Mode::Generator => {
                    let g = match listed {
                        Some(g) => g,
                        None => extreme_points(&region.points)?,
                    };
                    let verdict = is_generator_set(&g, &inst.x_hat, &region)?;
                    let answer = if verdict.is_generator { "yes" } else { "no" };
                    writeln!(stdout, "generator {answer}").map_err(out_err)?;
                    if let Some(w) = verdict.witness {
                        writeln!(stdout, "witness_point {}", fmt_vec(&w.point)).map_err(out_err)?;
                        writeln!(stdout, "witness_cost {}", fmt_vec(&w.direction))
                            .map_err(out_err)?;
                    }
                }
                Mode::InverseFeasible => {
                    let costs = listed.unwrap_or_else(|| vec![inst.c0.clone()]);
                    for c in &costs {
                        if c.len() != inst.problem.n {
                            return Err(CliError::User(format!(
                                "cost vector has length {}, expected {}",
                                c.len(),
                                inst.problem.n
                            )));
                        }
                        let ok = is_inverse_feasible(c, &inst.x_hat, &region.points);
                        let answer = if ok { "feasible" } else { "infeasible" };
                        writeln!(stdout, "{} {answer}", fmt_vec(c)).map_err(out_err)?;
                    }
                }
            }
        }
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
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::User(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(2)
        }
    }
}
