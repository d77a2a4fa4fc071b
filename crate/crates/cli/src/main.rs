use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wdvv_core::format::{
    parse_key, parse_potential, write_potential, write_residuals, write_trace,
};
use wdvv_core::verify::{
    check_euler, check_limit_product, check_separation, check_symmetry, check_vanishing,
};
use wdvv_core::{
    build_limit_ring, reconstruct_with_schedule, rescale_novikov, residual_scan, BigRational,
    CheckReport, Multiplet, Potential, ReconstructError, ScheduleKind, SeedMode,
};

const OK: u8 = 0;
const USAGE: u8 = 1;
const STUCK: u8 = 2;
const INCONSISTENT: u8 = 3;
const FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "wdvv",
    version,
    about = "Exact WDVV reconstruction for orbifold projective lines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct the potential up to a given Novikov order.
    Reconstruct {
        #[arg(short = 'A', long = "multiplet")]
        multiplet: Multiplet,
        #[arg(short = 'm', long = "max-order")]
        max_order: u32,
        #[arg(long, default_value = "standard")]
        mode: SeedMode,
        /// Potential file; stdout if omitted.
        #[arg(short = 'o', long = "out")]
        out: Option<PathBuf>,
        /// Defaults to `<out>.trace` when `--out` is given.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Schedule::Targeted)]
        schedule: Schedule,
    },
    /// Run checks and the WDVV residual scan on a potential file.
    Verify {
        file: PathBuf,
        /// Comma-separated subset of euler,separation,symmetry,vanishing,limit,wdvv.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<Check>>,
    },
    /// Print one coefficient, e.g. `show pot.txt "(1,1)^4 m=0"`.
    Show { file: PathBuf, key: String },
    /// Compare the coefficients of two potential files.
    Diff { left: PathBuf, right: PathBuf },
    /// Substitute e^{t_mu} -> a e^{t_mu}.
    Rescale {
        file: PathBuf,
        #[arg(long)]
        by: BigRational,
        #[arg(short = 'o', long = "out")]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Schedule {
    Targeted,
    Exhaustive,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Euler,
    Separation,
    Symmetry,
    Vanishing,
    Limit,
    Wdvv,
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), u8> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", path.display());
            USAGE
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<Potential, u8> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        USAGE
    })?;
    parse_potential(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        USAGE
    })
}

fn cmd_reconstruct(
    multiplet: Multiplet,
    max_order: u32,
    mode: SeedMode,
    out: Option<PathBuf>,
    trace: Option<PathBuf>,
    schedule: Schedule,
) -> Result<(), u8> {
    let kind = match schedule {
        Schedule::Targeted => ScheduleKind::Targeted,
        Schedule::Exhaustive => ScheduleKind::Exhaustive,
    };
    let (p, t) = reconstruct_with_schedule(&multiplet, max_order, mode, kind).map_err(|e| {
        eprintln!("error: {e}");
        match e {
            ReconstructError::SolverStuck { .. } | ReconstructError::NoProgress { .. } => STUCK,
            ReconstructError::InconsistentSeed { .. } => INCONSISTENT,
            _ => USAGE,
        }
    })?;
    emit(out.as_deref(), &write_potential(&p))?;
    let trace = trace.or_else(|| {
        out.map(|o| {
            let mut s = o.into_os_string();
            s.push(".trace");
            PathBuf::from(s)
        })
    });
    if let Some(path) = trace {
        emit(Some(&path), &write_trace(p.geometry(), &t))?;
    }
    Ok(())
}

fn cmd_verify(file: &Path, checks: Option<Vec<Check>>) -> Result<(), u8> {
    let p = load(file)?;
    let g = p.geometry();
    let checks = checks.unwrap_or_else(|| {
        let mut all = vec![Check::Euler, Check::Separation, Check::Symmetry];
        if p.mode().is_vanishing() {
            all.push(Check::Vanishing);
        }
        all.extend([Check::Limit, Check::Wdvv]);
        all
    });
    let mut ok = true;
    let mut report = |r: CheckReport| {
        println!("{r}");
        ok &= r.passed();
    };
    for check in checks {
        match check {
            Check::Euler => report(check_euler(&p)),
            Check::Separation => report(check_separation(&p)),
            Check::Symmetry => {
                let r = g.sectors();
                for i1 in 1..=r {
                    for i2 in i1 + 1..=r {
                        if g.order(i1) == g.order(i2) {
                            report(check_symmetry(&p, i1, i2).expect("valid sectors"));
                        }
                    }
                }
            }
            Check::Vanishing => report(check_vanishing(&p)),
            Check::Limit => report(check_limit_product(&p, &build_limit_ring(g))),
            Check::Wdvv => {
                let scan = residual_scan(&p, p.max_order());
                print!("{}", write_residuals(g, &scan));
                report(CheckReport {
                    name: "wdvv".into(),
                    counterexample: scan
                        .residuals
                        .first()
                        .map(|r| format!("{} at {} = {}", r.quad, r.target.display(g), r.value)),
                });
            }
        }
    }
    if ok {
        Ok(())
    } else {
        Err(FAILED)
    }
}

fn cmd_show(file: &Path, key: &str) -> Result<(), u8> {
    let p = load(file)?;
    let key = parse_key(p.geometry(), key).map_err(|e| {
        eprintln!("error: {e}");
        USAGE
    })?;
    println!("{}", p.coefficient(&key));
    Ok(())
}

fn cmd_diff(left: &Path, right: &Path) -> Result<(), u8> {
    let a = load(left)?;
    let b = load(right)?;
    if a.geometry().multiplet() != b.geometry().multiplet() {
        println!(
            "multiplets differ: {} vs {}",
            a.geometry().multiplet(),
            b.geometry().multiplet()
        );
        return Err(FAILED);
    }
    let g = a.geometry();
    let mut keys: Vec<_> = a.iter().chain(b.iter()).map(|(k, _)| k).collect();
    keys.sort();
    keys.dedup();
    for k in keys {
        let (x, y) = (a.coefficient(k), b.coefficient(k));
        if x != y {
            println!("first difference at {}: {} vs {}", k.display(g), x, y);
            return Err(FAILED);
        }
    }
    println!("identical ({} records)", a.len());
    Ok(())
}

fn cmd_rescale(file: &Path, by: &BigRational, out: Option<PathBuf>) -> Result<(), u8> {
    let p = load(file)?;
    let r = rescale_novikov(&p, by).map_err(|e| {
        eprintln!("error: {e}");
        USAGE
    })?;
    emit(out.as_deref(), &write_potential(&r))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { OK });
        }
    };
    let result = match cli.command {
        Command::Reconstruct {
            multiplet,
            max_order,
            mode,
            out,
            trace,
            schedule,
        } => cmd_reconstruct(multiplet, max_order, mode, out, trace, schedule),
        Command::Verify { file, checks } => cmd_verify(&file, checks),
        Command::Show { file, key } => cmd_show(&file, &key),
        Command::Diff { left, right } => cmd_diff(&left, &right),
        Command::Rescale { file, by, out } => cmd_rescale(&file, &by, out),
    };
    ExitCode::from(result.err().unwrap_or(OK))
}
