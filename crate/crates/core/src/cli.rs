//! Command-line front end: single-point queries, sensitivity sweeps,
//! crossing search and the verification suite.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytic::{
    qfi_ecs_noref, qfi_ecs_noref_exact, qfi_ecs_ref, qfi_ecs_ref_asymptotic, qfi_noon,
    qfi_noon_continuous, sensitivity, QfiResult,
};
use crate::error::{Error, Result};
use crate::fock::DEFAULT_TAIL_TOL;
use crate::oracle::{default_grid, relative_error, scenario_qfi, tolerance, verify_all, OracleConfig, Reference, VerifyOptions};
use crate::states::{alpha_for_mean_photon, ProbeSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ORACLE_BREACH: i32 = 3;

pub const CSV_HEADER: &str = "n_mean,eta,alpha,f_ecs_noref,f_ecs_ref,f_ecs_ref_asym,f_noon,dphi_ecs_noref,dphi_ecs_ref,dphi_noon,dphi_snl,is_integer_n";

/// Sweep rows whose mean photon number exceeds this are not cross-checked
/// by `sweep --oracle`.
pub const SWEEP_ORACLE_MAX_N: f64 = 10.0;

#[derive(Parser, Debug)]
#[command(name = "ecsqfi", version, about = "Quantum Fisher information of lossy ECS and NOON probes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// QFI and phase sensitivity of one probe.
    Point(PointArgs),
    /// Sensitivity versus mean photon number, written as CSV.
    Sweep(SweepArgs),
    /// Mean photon numbers where the NOON and ECS-with-reference QFI cross.
    Crossings(CrossingArgs),
    /// Check every closed form against the numeric oracle.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Ecs,
    Noon,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReferenceArg {
    With,
    Without,
}

impl From<ReferenceArg> for Reference {
    fn from(r: ReferenceArg) -> Self {
        match r {
            ReferenceArg::With => Reference::With,
            ReferenceArg::Without => Reference::Without,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GridArg {
    Default,
    Single,
}

#[derive(Args, Debug)]
pub struct PointArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub eta: f64,
    #[arg(long, value_enum, default_value = "with")]
    pub reference: ReferenceArg,
    /// Also evaluate the numeric oracle and compare.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
    pub trunc_tol: f64,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub eta: f64,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub n_min: f64,
    #[arg(long, default_value_t = 200.0, allow_hyphen_values = true)]
    pub n_max: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "log")]
    pub spacing: Spacing,
    #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
    pub trunc_tol: f64,
    /// Cross-check the with-reference column against the oracle for
    /// mean photon numbers up to 10.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct CrossingArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub eta: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "default")]
    pub grid: GridArg,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub eta: f64,
    #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
    pub trunc_tol: f64,
    /// Write the report rows as CSV.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    let outcome = match cli.command {
        Command::Point(a) => cmd_point(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Crossings(a) => cmd_crossings(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
    };
    match outcome {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult = std::result::Result<i32, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn check_positive(name: &str, value: f64) -> std::result::Result<(), CliError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--{name} must be positive and finite, got {value}")))
    }
}

fn dphi(fisher: f64) -> f64 {
    sensitivity(fisher, 1).unwrap_or(f64::INFINITY)
}

fn cmd_point(args: &PointArgs, out: &mut dyn Write) -> CliResult {
    check_positive("trunc-tol", args.trunc_tol)?;
    let reference = Reference::from(args.reference);
    let (spec, result, tol): (ProbeSpec, QfiResult, f64) = match args.family {
        FamilyArg::Ecs => {
            let alpha = args.alpha.ok_or_else(|| usage("--alpha is required for --family ecs"))?;
            if args.n.is_some() {
                return Err(usage("--n applies to --family noon only"));
            }
            let spec = ProbeSpec::ecs(alpha, args.eta)?;
            let a = spec.abs_alpha();
            match reference {
                Reference::Without => (spec, qfi_ecs_noref(a, args.eta)?, tolerance::NOREF),
                Reference::With => (spec, qfi_ecs_ref(a, args.eta)?, tolerance::REF),
            }
        }
        FamilyArg::Noon => {
            let n = args.n.ok_or_else(|| usage("--n is required for --family noon"))?;
            if args.alpha.is_some() {
                return Err(usage("--alpha applies to --family ecs only"));
            }
            let spec = ProbeSpec::noon(n, args.eta)?;
            (spec, qfi_noon(n, args.eta)?, tolerance::NOON)
        }
    };

    let family = match args.family {
        FamilyArg::Ecs => "ecs",
        FamilyArg::Noon => "noon",
    };
    writeln!(out, "family     {family}")?;
    match args.family {
        FamilyArg::Ecs => writeln!(out, "alpha      {}", spec.abs_alpha())?,
        FamilyArg::Noon => writeln!(out, "n          {}", spec.n)?,
    }
    writeln!(out, "eta        {}", args.eta)?;
    writeln!(out, "reference  {}", reference.label())?;
    writeln!(out, "generator  {}", result.generator.label())?;
    writeln!(out, "method     {}", result.method.label())?;
    writeln!(out, "F          {}", result.value)?;
    writeln!(out, "dphi       {}", dphi(result.value))?;
    if args.family == FamilyArg::Ecs && reference == Reference::Without {
        let exact = qfi_ecs_noref_exact(spec.abs_alpha(), args.eta)?.value;
        writeln!(out, "F_sectors  {exact}")?;
    }

    if args.oracle {
        let cfg = OracleConfig::with_tail_tol(args.trunc_tol);
        let numeric = scenario_qfi(&spec, reference, &cfg)?.value;
        let deviation = relative_error(result.value, numeric);
        writeln!(out, "F_oracle   {numeric}")?;
        writeln!(out, "deviation  {deviation:e}")?;
        if deviation > tol {
            writeln!(out, "oracle     BREACH (tolerance {tol:e})")?;
            return Ok(EXIT_ORACLE_BREACH);
        }
        writeln!(out, "oracle     ok (tolerance {tol:e})")?;
    }
    Ok(EXIT_OK)
}

/// Sweep settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub eta: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub points: usize,
    pub spacing: Spacing,
    pub truncation_tol: f64,
    pub output_path: PathBuf,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidEta(self.eta));
        }
        let bad = |msg: String| Err(Error::InvalidProbe(msg));
        if !(self.n_min > 0.0 && self.n_min.is_finite()) {
            return bad(format!("n_min must be positive, got {}", self.n_min));
        }
        if !(self.n_max > self.n_min && self.n_max.is_finite()) {
            return bad(format!("n_max must exceed n_min, got {}", self.n_max));
        }
        if self.points < 2 {
            return bad(format!("points must be at least 2, got {}", self.points));
        }
        if !(self.truncation_tol > 0.0 && self.truncation_tol.is_finite()) {
            return bad(format!("truncation tolerance must be positive, got {}", self.truncation_tol));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let last = self.points - 1;
        (0..self.points)
            .map(|i| {
                if i == 0 {
                    return self.n_min;
                }
                if i == last {
                    return self.n_max;
                }
                let t = i as f64 / last as f64;
                match self.spacing {
                    Spacing::Linear => self.n_min + t * (self.n_max - self.n_min),
                    Spacing::Log => (self.n_min.ln() + t * (self.n_max.ln() - self.n_min.ln())).exp(),
                }
            })
            .collect()
    }
}

/// One CSV row of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub n_mean: f64,
    pub eta: f64,
    pub alpha: f64,
    pub f_ecs_noref: f64,
    pub f_ecs_ref: f64,
    pub f_ecs_ref_asym: f64,
    pub f_noon: f64,
    pub dphi_ecs_noref: f64,
    pub dphi_ecs_ref: f64,
    pub dphi_noon: f64,
    pub dphi_snl: f64,
    pub is_integer_n: bool,
}

impl SweepRow {
    pub fn evaluate(n_mean: f64, eta: f64) -> Result<Self> {
        let alpha = alpha_for_mean_photon(n_mean)?;
        let f_ecs_noref = qfi_ecs_noref(alpha, eta)?.value;
        let f_ecs_ref = qfi_ecs_ref(alpha, eta)?.value;
        let f_ecs_ref_asym = qfi_ecs_ref_asymptotic(alpha, eta)?.value;
        let f_noon = qfi_noon_continuous(n_mean, eta);
        let nearest = n_mean.round();
        Ok(Self {
            n_mean,
            eta,
            alpha,
            f_ecs_noref,
            f_ecs_ref,
            f_ecs_ref_asym,
            f_noon,
            dphi_ecs_noref: dphi(f_ecs_noref),
            dphi_ecs_ref: dphi(f_ecs_ref),
            dphi_noon: dphi(f_noon),
            dphi_snl: 1.0 / (eta * n_mean).sqrt(),
            is_integer_n: nearest >= 1.0 && (n_mean - nearest).abs() <= 1e-9 * nearest,
        })
    }

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n_mean,
            self.eta,
            self.alpha,
            self.f_ecs_noref,
            self.f_ecs_ref,
            self.f_ecs_ref_asym,
            self.f_noon,
            self.dphi_ecs_noref,
            self.dphi_ecs_ref,
            self.dphi_noon,
            self.dphi_snl,
            self.is_integer_n
        )
    }
}

pub fn sweep_rows(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    cfg.grid().into_iter().map(|n| SweepRow::evaluate(n, cfg.eta)).collect()
}

fn write_sweep(path: &Path, rows: &[SweepRow]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(w, "{}", row.to_csv_line())?;
    }
    w.flush()
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> CliResult {
    let cfg = SweepConfig {
        eta: args.eta,
        n_min: args.n_min,
        n_max: args.n_max,
        points: args.points,
        spacing: args.spacing,
        truncation_tol: args.trunc_tol,
        output_path: args.output.clone(),
    };
    let rows = sweep_rows(&cfg)?;

    let mut breach = None;
    if args.oracle {
        let oracle_cfg = OracleConfig::with_tail_tol(cfg.truncation_tol);
        for row in rows.iter().filter(|r| r.n_mean <= SWEEP_ORACLE_MAX_N) {
            let spec = ProbeSpec::ecs(row.alpha, row.eta)?;
            let numeric = scenario_qfi(&spec, Reference::With, &oracle_cfg)?.value;
            let deviation = relative_error(row.f_ecs_ref, numeric);
            if deviation > tolerance::REF {
                breach = Some((row.n_mean, deviation));
                break;
            }
        }
    }

    if let Err(e) = write_sweep(&cfg.output_path, &rows) {
        let _ = std::fs::remove_file(&cfg.output_path);
        return Err(e.into());
    }
    writeln!(out, "wrote {} rows to {}", rows.len(), cfg.output_path.display())?;
    if let Some((n, deviation)) = breach {
        writeln!(out, "oracle BREACH at n_mean = {n}: relative deviation {deviation:e}")?;
        return Ok(EXIT_ORACLE_BREACH);
    }
    Ok(EXIT_OK)
}

/// Two mean photon numbers where the NOON and ECS-with-reference QFI agree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossingResult {
    pub n1: f64,
    pub n2: f64,
    pub eta: f64,
    pub tolerance: f64,
}

/// `F_NOON(N) - F_sigma(N)` at equal mean photon number.
pub fn crossing_gap(n_mean: f64, eta: f64) -> Result<f64> {
    let alpha = alpha_for_mean_photon(n_mean)?;
    Ok(qfi_noon_continuous(n_mean, eta) - qfi_ecs_ref(alpha, eta)?.value)
}

pub const CROSSING_GRID: (f64, f64, usize) = (1e-3, 1e3, 2001);

/// All sign changes of [`crossing_gap`] on a log grid, each refined by
/// bisection until `|gap| <= tolerance`.
pub fn find_crossings(eta: f64, tolerance: f64) -> Result<Vec<f64>> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidEta(eta));
    }
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::InvalidProbe(format!("tolerance must be positive, got {tolerance}")));
    }
    let (lo, hi, points) = CROSSING_GRID;
    let grid: Vec<f64> = (0..points)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (points - 1) as f64).exp())
        .collect();
    let gaps: Vec<f64> = grid.iter().map(|&n| crossing_gap(n, eta)).collect::<Result<_>>()?;

    let mut roots = Vec::new();
    for k in 0..points - 1 {
        let (g0, g1) = (gaps[k], gaps[k + 1]);
        if g0 == 0.0 {
            roots.push(grid[k]);
            continue;
        }
        if g0.signum() == g1.signum() || g1 == 0.0 {
            continue;
        }
        let (mut a, mut b, mut ga) = (grid[k], grid[k + 1], g0);
        let mut iterations = 0;
        let root = loop {
            let mid = 0.5 * (a + b);
            let gm = crossing_gap(mid, eta)?;
            if gm.abs() <= tolerance {
                break mid;
            }
            iterations += 1;
            if iterations > 200 || b - a <= f64::EPSILON * mid {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: gm.abs(),
                });
            }
            if gm.signum() == ga.signum() {
                a = mid;
                ga = gm;
            } else {
                b = mid;
            }
        };
        roots.push(root);
    }
    if let Some(&last) = gaps.last() {
        if last == 0.0 {
            roots.push(hi);
        }
    }
    Ok(roots)
}

pub fn crossings(eta: f64, tolerance: f64) -> Result<Option<CrossingResult>> {
    let roots = find_crossings(eta, tolerance)?;
    Ok(match roots.as_slice() {
        [n1, n2, ..] => Some(CrossingResult {
            n1: *n1,
            n2: *n2,
            eta,
            tolerance,
        }),
        _ => None,
    })
}

fn cmd_crossings(args: &CrossingArgs, out: &mut dyn Write) -> CliResult {
    if !(args.eta > 0.0 && args.eta < 1.0) {
        return Err(usage(format!(
            "--eta must lie strictly between 0 and 1 for crossings, got {}",
            args.eta
        )));
    }
    let roots = find_crossings(args.eta, args.tolerance)?;
    writeln!(out, "eta        {}", args.eta)?;
    writeln!(out, "tolerance  {:e}", args.tolerance)?;
    writeln!(
        out,
        "search     log grid of {} points over N in [{:e}, {:e}]",
        CROSSING_GRID.2, CROSSING_GRID.0, CROSSING_GRID.1
    )?;
    match roots.as_slice() {
        [] => writeln!(out, "no crossing found: F_NOON - F_sigma keeps one sign on the search range")?,
        [only] => {
            writeln!(out, "N1         {only}")?;
            writeln!(out, "second crossing not found on the search range")?;
        }
        many => {
            for (k, root) in many.iter().enumerate() {
                writeln!(out, "N{}         {root}", k + 1)?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> CliResult {
    check_positive("trunc-tol", args.trunc_tol)?;
    let grid = match args.grid {
        GridArg::Default => default_grid(),
        GridArg::Single => {
            ProbeSpec::ecs(args.alpha, args.eta)?;
            vec![(args.alpha.abs(), args.eta)]
        }
    };
    let cfg = OracleConfig::with_tail_tol(args.trunc_tol);
    let report = verify_all(&grid, &cfg, &VerifyOptions::default());
    write!(out, "{}", report.to_table())?;
    if let Some(path) = &args.output {
        if let Err(e) = std::fs::write(path, report.to_csv()) {
            let _ = std::fs::remove_file(path);
            return Err(e.into());
        }
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_VERIFY_FAILED })
}
