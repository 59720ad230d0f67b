//! Command-line front end.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::arith::{chi1, sieve};
use crate::error::{Error, Result};
use crate::hecke::{tp2_half, tp_integral};
use crate::oracle::{simulate_theorem4, SamplerConfig, ShiftMode};
use crate::pipeline::{desk_eigenform, desk_lift, EXPANSION_DENSE_LEN};
use crate::qseries::{delta_series, eisenstein};
use crate::report::{gnuplot_joint, gnuplot_marginal, write_tables, write_text, Format, Table};
use crate::shimura::{coeff_tp2m, lift, lift_coefficient, lift_series_at, prime_relation, LiftConvention};
use crate::spaces::{eigenbasis, monomial_exponents, normalize_at, normalize_at_t, plus_cusp_space, HalfIntegralForm};
use crate::stats::{
    c_values, default_checkpoints, joint_histogram, marginal_histogram, product_sign_counts,
    prop1_exception_ratio, sign_disagreement_report, theorem5_check, Interval, PrimeData,
};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SHIMURA_OUTPUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PRECISION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "shimura", version, about = "Half-integral weight eigenforms, Shimura lifts and prime sign statistics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plus cusp space of weight k + 1/2 on Gamma0(4)
    Space(SpaceArgs),
    /// Exact identities for the eigenforms of weight k + 1/2
    Verify(VerifyArgs),
    /// Prime statistics for desk-scale eigenforms
    Stats(StatsArgs),
    /// Monte Carlo Sato-Tate simulation
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct SpaceArgs {
    #[arg(long)]
    pub k: u32,
    #[arg(long, default_value_t = 400)]
    pub precision: usize,
    /// Coefficients shown per basis form
    #[arg(long, default_value_t = 12)]
    pub head: usize,
    #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
    pub primes: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub k: u32,
    #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
    pub primes: Vec<u64>,
    /// Dense coefficients used for space construction and operator checks
    #[arg(long, default_value_t = 2500)]
    pub precision: usize,
    /// Odd primes up to this bound enter the prime-relation check
    #[arg(long, default_value_t = 1000)]
    pub prime_limit: u64,
    /// Lift coefficients compared with the level-one oracle
    #[arg(long, default_value_t = 100)]
    pub lift_check: usize,
    #[arg(long)]
    pub t: Option<u64>,
    /// Use only the dense coefficients, without the generator expansion
    #[arg(long)]
    pub no_expansion: bool,
    /// Adds 1 to the coefficient at this index before checking
    #[arg(long, hide = true)]
    pub inject_fault: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatsKind {
    Prop1,
    Thm4,
    Thm5,
    Joint,
    Disagree,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output directory (default: $SHIMURA_OUTPUT_DIR, else ./shimura-out)
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    pub format: String,
    /// Worker threads (default: all cores)
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: Option<u32>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(value_enum)]
    pub kind: StatsKind,
    #[arg(long, default_value_t = 6)]
    pub k1: u32,
    #[arg(long, default_value_t = 8)]
    pub k2: u32,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(2..))]
    pub x: u64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub bins: u32,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub marginal_bins: u32,
    #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
    pub i1: String,
    #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
    pub i2: String,
    /// Normalization index instead of the least admissible one
    #[arg(long)]
    pub t: Option<u64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShiftArg {
    None,
    PerPrime,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ShiftArg::PerPrime)]
    pub shift_mode: ShiftArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::PrecisionExhausted { .. } => EXIT_PRECISION,
        _ => EXIT_VERIFICATION,
    }
}

/// Parses `args` and runs the command, writing to `out`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Space(a) => cmd_space(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Stats(a) => with_workers(a.out.workers, || cmd_stats(&a, out)),
        Command::Simulate(a) => with_workers(a.out.workers, || cmd_simulate(&a, out)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn with_workers<R: Send>(workers: Option<u32>, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(f),
        None => f(),
    }
}

fn output_dir(arg: &Option<PathBuf>) -> PathBuf {
    arg.clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("shimura-out"))
}

fn check_k(k: u32) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "weight parameter k must be at least 2, got {k}"
        )));
    }
    Ok(())
}

fn check_primes(primes: &[u64]) -> Result<()> {
    match primes.iter().find(|&&p| p == 2 || !crate::hecke::is_prime(p)) {
        Some(p) => Err(Error::InvalidArgument(format!("{p} is not an odd prime"))),
        None => Ok(()),
    }
}

fn io(e: std::io::Error) -> Error {
    Error::from(e)
}

pub fn cmd_space(a: &SpaceArgs, out: &mut (dyn Write + Send)) -> Result<i32> {
    check_k(a.k)?;
    check_primes(&a.primes)?;
    let space = plus_cusp_space(a.k, a.precision)?;
    writeln!(out, "weight {}/2 on Gamma0(4), plus cusp space", 2 * a.k + 1).map_err(io)?;
    writeln!(out, "precision {}", a.precision).map_err(io)?;
    writeln!(out, "dimension {}", space.dimension()).map_err(io)?;
    let exps: Vec<String> = monomial_exponents(a.k)
        .iter()
        .map(|(x, y)| format!("theta^{x} F^{y}"))
        .collect();
    writeln!(out, "monomials {}", exps.join(", ")).map_err(io)?;
    for (i, f) in space.forms().iter().enumerate() {
        let head: Vec<String> = f.coeffs().coeffs().iter().take(a.head).map(|c| c.to_string()).collect();
        writeln!(out, "basis[{i}] {}", head.join(" ")).map_err(io)?;
    }
    if space.dimension() > 0 {
        match eigenbasis(&space, &a.primes) {
            Ok(forms) => {
                for (i, f) in forms.iter().enumerate() {
                    let vals: Vec<String> = f.eigenvalues().iter().map(|(p, l)| format!("T_{p}^2={l}")).collect();
                    writeln!(out, "eigenform[{i}] {}", vals.join(" ")).map_err(io)?;
                }
            }
            Err(e) => writeln!(out, "eigenbasis unavailable: {e}").map_err(io)?,
        }
    }
    Ok(EXIT_OK)
}

enum Outcome {
    Pass,
    Fail(u64),
    Skip(String),
}

fn first_difference(a: &[BigRational], b: &[BigRational]) -> Option<u64> {
    a.iter().zip(b).position(|(x, y)| x != y).map(|i| i as u64)
}

fn compare(a: &[BigRational], b: &[BigRational]) -> Outcome {
    match first_difference(a, b) {
        Some(i) => Outcome::Fail(i),
        None => Outcome::Pass,
    }
}

/// Coefficients of the level-one oracle for the lift, if one is known.
fn lift_oracle(k: u32, prec: usize) -> Result<Option<Vec<BigRational>>> {
    Ok(match k {
        6 => Some(delta_series(prec)?.into_coeffs()),
        8 => Some(eisenstein(4, prec)?.mul(&delta_series(prec)?).into_coeffs()),
        _ => None,
    })
}

fn prepare_form(a: &VerifyArgs, f: &HalfIntegralForm) -> Result<HalfIntegralForm> {
    let f = match a.t {
        Some(t) => normalize_at(f, t)?,
        None => normalize_at_t(f)?,
    };
    let mut f = if a.no_expansion || f.k() % 2 == 1 {
        f
    } else {
        crate::expansion::attach_expansion(&f, EXPANSION_DENSE_LEN)?
    };
    if let Some(n) = a.inject_fault {
        if n >= f.precision() {
            return Err(Error::InvalidArgument(format!("fault index {n} is beyond precision {}", f.precision())));
        }
        let c = f.coeff(n as u64)? + BigRational::one();
        f = f.with_coeff_replaced(n, c);
    }
    Ok(f)
}

/// Runs every identity, one ledger line each. Exit 1 if any fails, else 3 if
/// any ran out of precision, else 0.
pub fn cmd_verify(a: &VerifyArgs, out: &mut (dyn Write + Send)) -> Result<i32> {
    check_k(a.k)?;
    check_primes(&a.primes)?;
    if a.primes.is_empty() {
        return Err(Error::InvalidArgument("need at least one prime".into()));
    }
    let space = plus_cusp_space(a.k, a.precision)?;
    writeln!(out, "weight {}/2, dimension {}", 2 * a.k + 1, space.dimension()).map_err(io)?;
    if space.dimension() == 0 {
        writeln!(out, "nothing to verify").map_err(io)?;
        return Ok(EXIT_OK);
    }
    let forms = eigenbasis(&space, &a.primes)?;
    let mut failed = false;
    let mut exhausted = false;
    for (idx, raw) in forms.iter().enumerate() {
        let f = prepare_form(a, raw)?;
        let t = f.t().expect("normalized");
        writeln!(out, "eigenform[{idx}] t={t}").map_err(io)?;
        let mut record = |name: String, res: Result<Outcome>| -> std::io::Result<()> {
            match res {
                Ok(Outcome::Pass) => writeln!(out, "PASS {name}"),
                Ok(Outcome::Fail(i)) => {
                    failed = true;
                    writeln!(out, "FAIL {name}: first offending index {i}")
                }
                Ok(Outcome::Skip(why)) => writeln!(out, "SKIP {name}: {why}"),
                Err(e @ Error::PrecisionExhausted { .. }) => {
                    exhausted = true;
                    writeln!(out, "PRECISION {name}: {e}")
                }
                Err(e) => {
                    failed = true;
                    writeln!(out, "FAIL {name}: {e}")
                }
            }
        };
        record(
            "plus-space support".into(),
            Ok(match f.plus_space_violation() {
                Some(n) => Outcome::Fail(n),
                None => Outcome::Pass,
            }),
        )
        .map_err(io)?;
        for &p in &a.primes {
            let name = format!("T_{{{p}^2}} f = lambda f");
            let res = (|| {
                let lambda = f.eigenvalue(p).cloned().ok_or_else(|| {
                    Error::InvalidArgument(format!("no recorded eigenvalue at {p}"))
                })?;
                let img = tp2_half(&f, p)?;
                let base = f.coeffs().truncate(img.precision()).scale(&lambda);
                Ok(compare(img.coeffs().coeffs(), base.coeffs()))
            })();
            record(name, res).map_err(io)?;
        }
        let res = (|| {
            let oracle = match lift_oracle(a.k, a.lift_check + 1)? {
                Some(o) => o,
                None => return Ok(Outcome::Skip(format!("no oracle for weight {}", 2 * a.k))),
            };
            let l = lift(&f, a.lift_check + 1)?;
            Ok(compare(l.coeffs().coeffs(), &oracle))
        })();
        record(format!("lift matches level-one oracle, n <= {}", a.lift_check), res).map_err(io)?;
        for &p in &a.primes {
            let res = (|| {
                let image = tp2_half(&f, p)?;
                let mut len = 1usize;
                while t * (len as u64).pow(2) < image.precision() as u64 && len < 40 {
                    len += 1;
                }
                if len < 2 {
                    return Err(crate::error::exhausted(
                        format!("lift of T_{{{p}^2}} f"),
                        t + 1,
                        image.precision() as u64,
                    ));
                }
                let lhs = lift_series_at(&image, t, len, LiftConvention::for_form(&f))?;
                let rhs = tp_integral(&lift(&f, len * p as usize)?, p)?.truncate(len);
                Ok(compare(lhs.coeffs().coeffs(), rhs.coeffs().coeffs()))
            })();
            record(format!("lift(T_{{{p}^2}} f) = T_{p}(lift f)"), res).map_err(io)?;
        }
        let res = (|| {
            let table = sieve(a.prime_limit.max(3))?;
            for &p in table.primes().iter().filter(|&&p| p != 2) {
                let direct = lift_coefficient(&f, p, LiftConvention::for_form(&f))?;
                if prime_relation(&f, p)? != direct {
                    return Ok(Outcome::Fail(p));
                }
            }
            Ok(Outcome::Pass)
        })();
        record(format!("prime relation = lift coefficient, p <= {}", a.prime_limit), res).map_err(io)?;
        for &p in &a.primes {
            let res = (|| {
                let a_p = lift_coefficient(&f, p, LiftConvention::for_form(&f))?;
                if !a_p.is_integer() {
                    return Ok(Outcome::Fail(p));
                }
                let a_t = f.coeff(t)?;
                for m in 0..=2u32 {
                    let expected = coeff_tp2m(&a_p.to_integer(), p, m, a.k, chi1(p, t, a.k));
                    let actual = f.coeff(t * p.pow(2 * m))? / &a_t;
                    if actual != BigRational::from_integer(expected) {
                        return Ok(Outcome::Fail(t * p.pow(2 * m)));
                    }
                }
                let lambda = f.eigenvalue(p).cloned().unwrap_or_else(BigRational::zero);
                Ok(if lambda == a_p { Outcome::Pass } else { Outcome::Fail(p) })
            })();
            record(format!("a(tp^(2m)) recursion and eigenvalue = A(p), p = {p}"), res).map_err(io)?;
        }
    }
    Ok(if failed {
        writeln!(out, "result: FAIL").map_err(io)?;
        EXIT_VERIFICATION
    } else if exhausted {
        writeln!(out, "result: PRECISION EXHAUSTED").map_err(io)?;
        EXIT_PRECISION
    } else {
        writeln!(out, "result: PASS").map_err(io)?;
        EXIT_OK
    })
}

fn prime_data(k: u32, t: Option<u64>, x: u64) -> Result<PrimeData> {
    check_k(k)?;
    let f = desk_eigenform(k, t)?;
    let lift = desk_lift(&f, x as usize + 1)?;
    PrimeData::new(format!("k{k}"), &f, &lift, x)
}

fn pair_data(a: &StatsArgs) -> Result<(PrimeData, PrimeData)> {
    if a.k1 == a.k2 {
        writeln!(std::io::stderr(), "note: k1 = k2, comparing a form with itself").ok();
    }
    Ok((prime_data(a.k1, a.t, a.x)?, prime_data(a.k2, a.t, a.x)?))
}

fn emit(dir: &std::path::Path, tables: &[Table], format: Format, out: &mut (dyn Write + Send)) -> Result<()> {
    for p in write_tables(dir, tables, format)? {
        writeln!(out, "wrote {}", p.display()).map_err(io)?;
    }
    Ok(())
}

pub fn cmd_stats(a: &StatsArgs, out: &mut (dyn Write + Send)) -> Result<i32> {
    let format: Format = a.out.format.parse()?;
    let dir = output_dir(&a.out.output);
    let cps = default_checkpoints(a.x);
    let command = |name: &str| format!("stats {name}");
    match a.kind {
        StatsKind::Prop1 => {
            let f = prime_data(a.k1, a.t, a.x)?;
            let r = prop1_exception_ratio(&f, &cps)?;
            for (x, q) in r.disagreements.checkpoints.iter().zip(&r.disagreements.ratios) {
                writeln!(out, "x={x} exception ratio {q:.6} (reference 0)").map_err(io)?;
            }
            let stem = format!("prop1_k{}", a.k1);
            emit(
                &dir,
                &[
                    Table::from_density(&command("prop1"), &format!("{stem}_disagree"), &r.disagreements),
                    Table::from_density(&command("prop1"), &format!("{stem}_zero"), &r.zeros),
                ],
                format,
                out,
            )?;
        }
        StatsKind::Thm4 => {
            let (f, g) = pair_data(a)?;
            let r = product_sign_counts(&f, &g, &cps)?;
            let stem = format!("thm4_k{}_k{}", a.k1, a.k2);
            let names = ["neg", "pos", "zero", "nonpos", "nonneg"];
            let mut tables = Vec::new();
            for (s, n) in r.series().iter().zip(names) {
                writeln!(
                    out,
                    "{}: count {} / {} = {:.6} (reference {})",
                    s.name,
                    s.final_count(),
                    s.final_pi(),
                    s.final_ratio(),
                    s.reference.unwrap_or(0.0)
                )
                .map_err(io)?;
                tables.push(Table::from_density(&command("thm4"), &format!("{stem}_{n}"), s));
            }
            emit(&dir, &tables, format, out)?;
        }
        StatsKind::Thm5 => {
            let (f, g) = pair_data(a)?;
            let i1 = Interval::parse(&a.i1)?;
            let i2 = Interval::parse(&a.i2)?;
            let r = theorem5_check(&f, &g, &i1, &i2, &cps)?;
            writeln!(
                out,
                "{}: density {:.6} (reference {:.6})",
                r.name,
                r.final_ratio(),
                r.reference.unwrap_or(0.0)
            )
            .map_err(io)?;
            let t = Table::from_density(&command("thm5"), &format!("thm5_k{}_k{}", a.k1, a.k2), &r)
                .with_meta("i1", &i1)
                .with_meta("i2", &i2);
            emit(&dir, &[t], format, out)?;
        }
        StatsKind::Joint => {
            let (f, g) = pair_data(a)?;
            let j = joint_histogram(&f, &g, a.bins as usize)?;
            let m1 = marginal_histogram(format!("k{} C(p)", a.k1), &c_values(&f), a.marginal_bins as usize)?;
            let m2 = marginal_histogram(format!("k{} C(p)", a.k2), &c_values(&g), a.marginal_bins as usize)?;
            writeln!(out, "joint {}x{} max deviation {:.6}", a.bins, a.bins, j.max_deviation()).map_err(io)?;
            writeln!(out, "marginal k{} max deviation {:.6}", a.k1, m1.max_deviation()).map_err(io)?;
            writeln!(out, "marginal k{} max deviation {:.6}", a.k2, m2.max_deviation()).map_err(io)?;
            let stem = format!("joint_k{}_k{}", a.k1, a.k2);
            emit(
                &dir,
                &[
                    Table::from_joint(&command("joint"), &stem, &j),
                    Table::from_histogram(&command("joint"), &format!("marginal_k{}", a.k1), &m1),
                    Table::from_histogram(&command("joint"), &format!("marginal_k{}", a.k2), &m2),
                ],
                format,
                out,
            )?;
            for (name, text) in [
                (format!("{stem}.dat"), gnuplot_joint(&j)),
                (format!("marginal_k{}.dat", a.k1), gnuplot_marginal(&m1)),
                (format!("marginal_k{}.dat", a.k2), gnuplot_marginal(&m2)),
            ] {
                let p = write_text(&dir, &name, &text)?;
                writeln!(out, "wrote {}", p.display()).map_err(io)?;
            }
        }
        StatsKind::Disagree => {
            let (f, g) = pair_data(a)?;
            let r = sign_disagreement_report(&f, &g, &cps)?;
            writeln!(out, "{} disagreeing primes", r.primes.len()).map_err(io)?;
            writeln!(out, "{}", r.verdict()).map_err(io)?;
            let stem = format!("disagree_k{}_k{}", a.k1, a.k2);
            let t = Table::from_density(&command("disagree"), &stem, &r.density)
                .with_meta("exceeds_6_25", r.exceeds_threshold);
            emit(&dir, &[t], format, out)?;
            let list: String = r.primes.iter().map(|p| format!("{p}\n")).collect();
            let p = write_text(&dir, &format!("{stem}_primes.txt"), &list)?;
            writeln!(out, "wrote {}", p.display()).map_err(io)?;
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_simulate(a: &SimulateArgs, out: &mut (dyn Write + Send)) -> Result<i32> {
    let format: Format = a.out.format.parse()?;
    let config = SamplerConfig {
        sample_count: a.n,
        seed: a.seed,
        shift_mode: match a.shift_mode {
            ShiftArg::None => ShiftMode::None,
            ShiftArg::PerPrime => ShiftMode::PerPrime,
        },
    };
    let r = simulate_theorem4(&config)?;
    writeln!(out, "rng {} seed {} n {}", r.rng, a.seed, a.n).map_err(io)?;
    writeln!(out, "product-negative density {:.6} (reference 0.5)", r.density.final_ratio()).map_err(io)?;
    writeln!(out, "mass of [0,1] {:.6} (reference 0.5)", r.nonnegative_mass).map_err(io)?;
    if let Some(w) = r.window_mass {
        writeln!(out, "window mass {w:.6}").map_err(io)?;
    }
    let mode = config.shift_mode.name();
    let mut t = Table::from_density("simulate", &format!("simulate_{mode}_seed{}", a.seed), &r.density)
        .with_meta("rng", r.rng)
        .with_meta("seed", a.seed)
        .with_meta("n", a.n)
        .with_meta("shift_mode", mode)
        .with_meta("nonnegative_mass", format!("{:.12}", r.nonnegative_mass));
    if let Some(w) = r.window_mass {
        t = t.with_meta("window_mass", format!("{w:.12}"));
    }
    emit(&output_dir(&a.out.output), &[t], format, out)?;
    Ok(EXIT_OK)
}
