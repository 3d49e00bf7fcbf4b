//! Numeric quantum Fisher information on the truncated Fock space, and the
//! suite that checks every closed form against it.
//!
//! Nothing here uses the analytic structure of the lossy ECS: states are
//! built from Fock vectors, sent through the generic loss channel and
//! diagonalized.

use std::fmt::Write as _;

use crate::analytic::{
    qfi_ecs_noref, qfi_ecs_noref_blocksum, qfi_ecs_noref_exact, qfi_ecs_ref, qfi_ecs_ref_asymptotic,
    qfi_noon, sigma_spectrum, symmetric_2x2_eigenvalues, two_level_eigenvalues, EigenvalueForm,
    MatrixEntryForm, Method, QfiResult,
};
use crate::channels::{apply_loss, apply_loss_via_bs, phase_average, PhaseGenerator};
use crate::error::{Error, Result};
use crate::fock::{
    coherent_vector, mat_vec, DensityOperator, FockTruncation, StateVector, C64, DEFAULT_TAIL_TOL,
};
use crate::states::{ecs_vector, noon_vector, norm_coeff, ProbeFamily, ProbeSpec};

/// How the oracle chooses its Fock cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TruncationPolicy {
    /// The same cutoff for every probe.
    Fixed(FockTruncation),
    /// The smallest cutoff whose coherent tail is below `tail_tol`; NOON
    /// probes use `n_max = n`.
    Auto { tail_tol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleConfig {
    pub truncation: TruncationPolicy,
    pub eigenvalue_floor: f64,
    pub pair_skip_threshold: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            truncation: TruncationPolicy::Auto {
                tail_tol: DEFAULT_TAIL_TOL,
            },
            eigenvalue_floor: 1e-12,
            pair_skip_threshold: 1e-12,
        }
    }
}

impl OracleConfig {
    pub fn with_tail_tol(tail_tol: f64) -> Self {
        Self {
            truncation: TruncationPolicy::Auto { tail_tol },
            ..Self::default()
        }
    }

    pub fn fixed(truncation: FockTruncation) -> Self {
        Self {
            truncation: TruncationPolicy::Fixed(truncation),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        let tail_ok = match self.truncation {
            TruncationPolicy::Fixed(t) => positive(t.tail_tol()),
            TruncationPolicy::Auto { tail_tol } => positive(tail_tol),
        };
        if !(tail_ok && positive(self.eigenvalue_floor) && positive(self.pair_skip_threshold)) {
            return Err(Error::InvalidProbe(
                "oracle tolerances must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    pub fn truncation_for(&self, spec: &ProbeSpec) -> FockTruncation {
        match (self.truncation, spec.family) {
            (TruncationPolicy::Fixed(t), _) => t,
            (TruncationPolicy::Auto { tail_tol }, ProbeFamily::Ecs) => {
                FockTruncation::for_amplitude(spec.abs_alpha(), tail_tol)
            }
            (TruncationPolicy::Auto { tail_tol }, ProbeFamily::Noon) => {
                FockTruncation::new(spec.n as usize).with_tail_tol(tail_tol)
            }
        }
    }

    /// The same configuration with every cutoff doubled.
    pub fn doubled_for(&self, spec: &ProbeSpec) -> Self {
        Self {
            truncation: TruncationPolicy::Fixed(self.truncation_for(spec).doubled()),
            ..*self
        }
    }
}

/// `F = 4 sum_i p_i Var_i(G) - sum_{i != j} 8 p_i p_j / (p_i + p_j) |G_ij|^2`
/// over the eigenpairs of `rho`.
pub fn qfi_numeric_value(rho: &DensityOperator, generator: &PhaseGenerator, cfg: &OracleConfig) -> Result<f64> {
    cfg.validate()?;
    if generator.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: generator.dim(),
        });
    }
    rho.validate()?;
    let g = generator.diagonal();
    let spectrum = rho.eigen()?;

    let mut fisher = 0.0;
    for block in spectrum.blocks() {
        let size = block.indices.len();
        let mut weights = Vec::with_capacity(size);
        for &value in &block.values {
            if value < -cfg.eigenvalue_floor {
                return Err(Error::NegativeEigenvalue {
                    value,
                    floor: -cfg.eigenvalue_floor,
                });
            }
            weights.push(value.max(0.0));
        }
        if weights.iter().all(|&p| p == 0.0) {
            continue;
        }
        let local_g: Vec<f64> = block.indices.iter().map(|&i| g[i]).collect();
        let v = &block.vectors;
        let element = |a: usize, b: usize| -> C64 {
            (0..size)
                .map(|k| v[(k, a)].conj() * v[(k, b)] * local_g[k])
                .sum()
        };
        for a in 0..size {
            let pa = weights[a];
            if pa > 0.0 {
                let second: f64 = (0..size)
                    .map(|k| v[(k, a)].norm_sqr() * local_g[k] * local_g[k])
                    .sum();
                let first = element(a, a).re;
                fisher += 4.0 * pa * (second - first * first);
            }
            for b in 0..size {
                if a == b {
                    continue;
                }
                let pb = weights[b];
                let sum = pa + pb;
                if sum < cfg.pair_skip_threshold || pa * pb == 0.0 {
                    continue;
                }
                fisher -= 8.0 * pa * pb / sum * element(a, b).norm_sqr();
            }
        }
    }
    Ok(fisher.max(0.0))
}

pub fn qfi_numeric(rho: &DensityOperator, generator: &PhaseGenerator, cfg: &OracleConfig) -> Result<QfiResult> {
    Ok(QfiResult {
        value: qfi_numeric_value(rho, generator, cfg)?,
        method: Method::Numeric,
        generator: generator.kind(),
        inputs: None,
    })
}

/// Whether a phase reference beam is available.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Reference {
    With,
    Without,
}

impl Reference {
    pub fn label(self) -> &'static str {
        match self {
            Reference::With => "with",
            Reference::Without => "without",
        }
    }
}

fn probe_vector(spec: &ProbeSpec, trunc: FockTruncation) -> Result<StateVector> {
    match spec.family {
        ProbeFamily::Ecs => ecs_vector(spec.alpha, trunc),
        ProbeFamily::Noon => noon_vector(spec.n as usize, trunc),
    }
}

/// Probe vector, loss on both arms and, without a reference, the phase
/// average; paired with the two-arm generator.
pub fn build_scenario(
    spec: &ProbeSpec,
    reference: Reference,
    cfg: &OracleConfig,
) -> Result<(DensityOperator, PhaseGenerator)> {
    spec.validate()?;
    let trunc = cfg.truncation_for(spec);
    let pure = probe_vector(spec, trunc)?.projector();
    let lossy = apply_loss(&pure, spec.eta)?;
    let state = match reference {
        Reference::With => lossy,
        Reference::Without => phase_average(&lossy),
    };
    Ok((state, PhaseGenerator::two_arm(trunc)))
}

/// Numeric QFI of a named scenario.
pub fn scenario_qfi(spec: &ProbeSpec, reference: Reference, cfg: &OracleConfig) -> Result<QfiResult> {
    let (rho, generator) = build_scenario(spec, reference, cfg)?;
    let mut result = qfi_numeric(&rho, &generator, cfg)?;
    result.inputs = Some(*spec);
    Ok(result)
}

/// The lossy ECS with a reference, projected onto the Gram–Schmidt pair
/// built from `|a sqrt(eta), 0>` and `|0, a sqrt(eta)>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericTwoLevel {
    pub overlap: f64,
    pub matrix: [[f64; 2]; 2],
    pub eigenvalues: (f64, f64),
    /// Top two eigenvalues of the full numeric state.
    pub full_spectrum: (f64, f64),
}

pub fn numeric_two_level(alpha: f64, eta: f64, cfg: &OracleConfig) -> Result<NumericTwoLevel> {
    let spec = ProbeSpec::ecs(alpha, eta)?;
    let (sigma, _) = build_scenario(&spec, Reference::With, cfg)?;
    let trunc = sigma.truncation();
    let beta = coherent_vector(C64::new(alpha * eta.sqrt(), 0.0), trunc)?;
    let mut vacuum = vec![C64::new(0.0, 0.0); trunc.levels()];
    vacuum[0] = C64::new(1.0, 0.0);
    let p1 = StateVector::product(&beta, &vacuum, trunc)?.normalized();
    let p2 = StateVector::product(&vacuum, &beta, trunc)?.normalized();
    let overlap = p1.inner(&p2);
    let f2 = p2.add(&p1.clone().scaled(-overlap)).normalized();
    let basis = [p1, f2];
    let mut matrix = [[0.0; 2]; 2];
    for (a, fa) in basis.iter().enumerate() {
        let image = mat_vec(sigma.matrix(), fa.amplitudes());
        for (b, fb) in basis.iter().enumerate() {
            let value: C64 = fb
                .amplitudes()
                .iter()
                .zip(&image)
                .map(|(x, y)| x.conj() * y)
                .sum();
            matrix[b][a] = value.re;
        }
    }
    let values = sigma.eigen()?.eigenvalues();
    Ok(NumericTwoLevel {
        overlap: overlap.re,
        matrix,
        eigenvalues: symmetric_2x2_eigenvalues(matrix),
        full_spectrum: (values[0], values.get(1).copied().unwrap_or(0.0)),
    })
}

/// Tolerances of the verification suite.
pub mod tolerance {
    pub const NOREF: f64 = 1e-6;
    pub const REF: f64 = 1e-8;
    pub const LOSSLESS: f64 = 1e-9;
    pub const BLOCKSUM: f64 = 1e-10;
    pub const ASYMPTOTIC: f64 = 5e-3;
    /// `p = e^{-eta |a|^2}` below which the asymptotic form applies.
    pub const ASYMPTOTIC_OVERLAP: f64 = 1e-8;
    pub const NOON: f64 = 1e-9;
    pub const GENERATOR: f64 = 1e-9;
    pub const CHANNEL: f64 = 1e-9;
    pub const SPECTRUM: f64 = 1e-10;
    pub const TRUNCATION: f64 = 1e-8;
    /// Largest amplitude used in the beam-splitter channel comparison.
    pub const CHANNEL_MAX_ALPHA: f64 = 1.5;
    /// Tail tolerance of the reduced cutoff used there.
    pub const CHANNEL_TAIL: f64 = 1e-10;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Check {
    /// Compact reference-free form vs the phase-averaged oracle.
    NorefCompact,
    /// Sector-resolved reference-free form vs the phase-averaged oracle.
    NorefExact,
    /// Series vs compact reference-free form.
    NorefBlocksum,
    /// Spectral closed form with reference vs oracle.
    RefClosedForm,
    /// Both oracle values at `eta = 1` vs `2 N^2 (|a|^4 + |a|^2)`.
    Lossless,
    /// Asymptotic vs exact form with reference.
    RefAsymptotic,
    Noon,
    /// Single-arm vs two-arm generator without reference.
    GeneratorEquivalence,
    /// Beam-splitter loss vs Kraus loss, entrywise.
    ChannelEquality,
    /// Analytic eigenvalues vs the numeric Gram–Schmidt eigensolve.
    SpectrumEigenvalues,
    /// Analytic Gram–Schmidt matrix vs its numeric projection.
    SpectrumMatrix,
    /// Doubling the cutoff.
    TruncationStability,
}

impl Check {
    pub fn label(self) -> &'static str {
        match self {
            Check::NorefCompact => "noref_compact",
            Check::NorefExact => "noref_exact",
            Check::NorefBlocksum => "noref_blocksum",
            Check::RefClosedForm => "ref_closed_form",
            Check::Lossless => "lossless",
            Check::RefAsymptotic => "ref_asymptotic",
            Check::Noon => "noon",
            Check::GeneratorEquivalence => "generator_equivalence",
            Check::ChannelEquality => "channel_equality",
            Check::SpectrumEigenvalues => "spectrum_eigenvalues",
            Check::SpectrumMatrix => "spectrum_matrix",
            Check::TruncationStability => "truncation_stability",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorMetric {
    Relative,
    Absolute,
}

impl ErrorMetric {
    fn label(self) -> &'static str {
        match self {
            ErrorMetric::Relative => "relative",
            ErrorMetric::Absolute => "absolute",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub check: Check,
    pub alpha: f64,
    pub eta: f64,
    /// Photon number for NOON rows, 0 otherwise.
    pub n: u32,
    pub expected: f64,
    pub observed: f64,
    pub error: f64,
    pub metric: ErrorMetric,
    pub tolerance: f64,
    pub passed: bool,
    /// Set when the comparison could not be evaluated.
    pub failure: Option<String>,
}

pub fn relative_error(observed: f64, expected: f64) -> f64 {
    let diff = (observed - expected).abs();
    if expected == 0.0 {
        diff
    } else {
        diff / expected.abs()
    }
}

/// Options of the verification suite.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub eigenvalue_form: EigenvalueForm,
    pub matrix_form: MatrixEntryForm,
    pub noon_orders: Vec<u32>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            eigenvalue_form: EigenvalueForm::Corrected,
            matrix_form: MatrixEntryForm::Corrected,
            noon_orders: vec![1, 2, 3],
        }
    }
}

pub fn default_grid() -> Vec<(f64, f64)> {
    let mut grid = Vec::new();
    for alpha in [0.5, 1.0, 1.5, 2.0] {
        for eta in [0.6, 0.9, 0.99, 1.0] {
            grid.push((alpha, eta));
        }
    }
    grid
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub rows: Vec<CheckRow>,
}

pub const REPORT_CSV_HEADER: &str =
    "check,alpha,eta,n,expected,observed,error,metric,tolerance,passed";

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.rows.iter().filter(|r| !r.passed)
    }

    pub fn rows_for(&self, check: Check) -> impl Iterator<Item = &CheckRow> {
        self.rows.iter().filter(move |r| r.check == check)
    }

    /// Checks in order of first appearance with their largest error.
    pub fn summary(&self) -> Vec<(Check, usize, usize, f64)> {
        let mut out: Vec<(Check, usize, usize, f64)> = Vec::new();
        for row in &self.rows {
            let entry = match out.iter_mut().find(|e| e.0 == row.check) {
                Some(e) => e,
                None => {
                    out.push((row.check, 0, 0, 0.0));
                    out.last_mut().expect("just pushed")
                }
            };
            entry.1 += 1;
            if !row.passed {
                entry.2 += 1;
            }
            entry.3 = if row.error.is_nan() { f64::NAN } else { entry.3.max(row.error) };
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<22} {:>6} {:>6} {:>3} {:>14} {:>14} {:>10} {:>9}  status",
            "check", "alpha", "eta", "n", "expected", "observed", "error", "tol"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<22} {:>6} {:>6} {:>3} {:>14.8e} {:>14.8e} {:>10.3e} {:>9.1e}  {}",
                r.check.label(),
                r.alpha,
                r.eta,
                r.n,
                r.expected,
                r.observed,
                r.error,
                r.tolerance,
                match (&r.failure, r.passed) {
                    (Some(msg), _) => format!("FAIL ({msg})"),
                    (None, true) => "PASS".to_string(),
                    (None, false) => "FAIL".to_string(),
                }
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<22} {:>6} {:>6} {:>12}", "check", "rows", "failed", "max error");
        for (check, rows, failed, worst) in self.summary() {
            let _ = writeln!(s, "{:<22} {:>6} {:>6} {:>12.3e}", check.label(), rows, failed, worst);
        }
        let failed = self.failures().count();
        let _ = writeln!(
            s,
            "{} of {} checks passed",
            self.rows.len() - failed,
            self.rows.len()
        );
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(REPORT_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.check.label(),
                r.alpha,
                r.eta,
                r.n,
                r.expected,
                r.observed,
                r.error,
                r.metric.label(),
                r.tolerance,
                r.passed
            );
        }
        s
    }
}

struct Recorder {
    rows: Vec<CheckRow>,
}

impl Recorder {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        check: Check,
        alpha: f64,
        eta: f64,
        n: u32,
        metric: ErrorMetric,
        tolerance: f64,
        outcome: Result<(f64, f64)>,
    ) {
        let row = match outcome {
            Ok((expected, observed)) => {
                let error = match metric {
                    ErrorMetric::Relative => relative_error(observed, expected),
                    ErrorMetric::Absolute => (observed - expected).abs(),
                };
                CheckRow {
                    check,
                    alpha,
                    eta,
                    n,
                    expected,
                    observed,
                    error,
                    metric,
                    tolerance,
                    passed: error <= tolerance,
                    failure: None,
                }
            }
            Err(e) => CheckRow {
                check,
                alpha,
                eta,
                n,
                expected: f64::NAN,
                observed: f64::NAN,
                error: f64::NAN,
                metric,
                tolerance,
                passed: false,
                failure: Some(e.to_string()),
            },
        };
        self.rows.push(row);
    }
}

/// Largest entrywise difference, reported as `(0, difference)`.
fn channel_equality(alpha: f64, eta: f64) -> Result<(f64, f64)> {
    let trunc = FockTruncation::for_amplitude(alpha, tolerance::CHANNEL_TAIL);
    let pure = ecs_vector(alpha, trunc)?.projector();
    let kraus = apply_loss(&pure, eta)?;
    let bs = apply_loss_via_bs(&pure, eta, trunc)?;
    Ok((0.0, kraus.max_abs_diff(&bs)))
}

fn spectrum_rows(rec: &mut Recorder, alpha: f64, eta: f64, cfg: &OracleConfig, options: &VerifyOptions) {
    let numeric = numeric_two_level(alpha, eta, cfg);
    let analytic = sigma_spectrum(alpha, eta);
    let (numeric, analytic) = match (numeric, analytic) {
        (Ok(n), Ok(a)) => (n, a),
        (Err(e), _) | (_, Err(e)) => {
            let msg = e.to_string();
            for check in [Check::SpectrumEigenvalues, Check::SpectrumMatrix] {
                rec.push(check, alpha, eta, 0, ErrorMetric::Absolute, tolerance::SPECTRUM, Err(Error::InvalidProbe(msg.clone())));
            }
            return;
        }
    };
    let eigen = two_level_eigenvalues(analytic.det_sigma, options.eigenvalue_form).map(|(hi, lo)| {
        let worst = (hi - numeric.eigenvalues.0)
            .abs()
            .max((lo - numeric.eigenvalues.1).abs())
            .max((hi - numeric.full_spectrum.0).abs())
            .max((lo - numeric.full_spectrum.1).abs());
        (0.0, worst)
    });
    rec.push(Check::SpectrumEigenvalues, alpha, eta, 0, ErrorMetric::Absolute, tolerance::SPECTRUM, eigen);

    let m = analytic.orthogonal_basis_matrix(options.matrix_form);
    let mut worst = 0.0f64;
    for a in 0..2 {
        for b in 0..2 {
            worst = worst.max((m[a][b] - numeric.matrix[a][b]).abs());
        }
    }
    rec.push(Check::SpectrumMatrix, alpha, eta, 0, ErrorMetric::Absolute, tolerance::SPECTRUM, Ok((0.0, worst)));
}

/// Runs every closed-form-vs-oracle comparison on `grid`.
pub fn verify_all(grid: &[(f64, f64)], cfg: &OracleConfig, options: &VerifyOptions) -> VerifyReport {
    let mut rec = Recorder { rows: Vec::new() };
    let mut etas_seen: Vec<f64> = Vec::new();

    for &(alpha, eta) in grid {
        let spec = match ProbeSpec::ecs(alpha, eta) {
            Ok(s) => s,
            Err(e) => {
                rec.push(Check::NorefCompact, alpha, eta, 0, ErrorMetric::Relative, tolerance::NOREF, Err(e));
                continue;
            }
        };
        let noref = scenario_qfi(&spec, Reference::Without, cfg).map(|r| r.value);
        let with_ref = scenario_qfi(&spec, Reference::With, cfg).map(|r| r.value);

        let against = |closed: Result<QfiResult>, numeric: &Result<f64>| -> Result<(f64, f64)> {
            let closed = closed?.value;
            match numeric {
                Ok(v) => Ok((closed, *v)),
                Err(e) => Err(Error::InvalidProbe(e.to_string())),
            }
        };

        rec.push(Check::NorefCompact, alpha, eta, 0, ErrorMetric::Relative, tolerance::NOREF, against(qfi_ecs_noref(alpha, eta), &noref));
        rec.push(Check::NorefExact, alpha, eta, 0, ErrorMetric::Relative, tolerance::NOREF, against(qfi_ecs_noref_exact(alpha, eta), &noref));
        let blocksum = qfi_ecs_noref(alpha, eta).and_then(|compact| {
            let trunc = FockTruncation::for_amplitude(alpha, 1e-16);
            Ok((compact.value, qfi_ecs_noref_blocksum(alpha, eta, trunc)?.value))
        });
        rec.push(Check::NorefBlocksum, alpha, eta, 0, ErrorMetric::Relative, tolerance::BLOCKSUM, blocksum);
        rec.push(Check::RefClosedForm, alpha, eta, 0, ErrorMetric::Relative, tolerance::REF, against(qfi_ecs_ref(alpha, eta), &with_ref));

        if eta == 1.0 {
            let x = alpha * alpha;
            let lossless = 2.0 * norm_coeff(alpha).powi(2) * (x * x + x);
            for numeric in [&noref, &with_ref] {
                let outcome = match numeric {
                    Ok(v) => Ok((lossless, *v)),
                    Err(e) => Err(Error::InvalidProbe(e.to_string())),
                };
                rec.push(Check::Lossless, alpha, eta, 0, ErrorMetric::Relative, tolerance::LOSSLESS, outcome);
            }
        }

        if (-eta * alpha * alpha).exp() < tolerance::ASYMPTOTIC_OVERLAP {
            let outcome = qfi_ecs_ref(alpha, eta)
                .and_then(|exact| Ok((exact.value, qfi_ecs_ref_asymptotic(alpha, eta)?.value)));
            rec.push(Check::RefAsymptotic, alpha, eta, 0, ErrorMetric::Relative, tolerance::ASYMPTOTIC, outcome);
        }

        let generators = (|| {
            let (rho, two_arm) = build_scenario(&spec, Reference::Without, cfg)?;
            let single = PhaseGenerator::single_arm(rho.truncation());
            Ok((
                qfi_numeric_value(&rho, &two_arm, cfg)?,
                qfi_numeric_value(&rho, &single, cfg)?,
            ))
        })();
        rec.push(Check::GeneratorEquivalence, alpha, eta, 0, ErrorMetric::Relative, tolerance::GENERATOR, generators);

        if alpha <= tolerance::CHANNEL_MAX_ALPHA {
            rec.push(Check::ChannelEquality, alpha, eta, 0, ErrorMetric::Absolute, tolerance::CHANNEL, channel_equality(alpha, eta));
        }

        spectrum_rows(&mut rec, alpha, eta, cfg, options);

        for (reference, base) in [(Reference::Without, &noref), (Reference::With, &with_ref)] {
            let outcome = scenario_qfi(&spec, reference, &cfg.doubled_for(&spec)).and_then(|wide| match base {
                Ok(v) => Ok((wide.value, *v)),
                Err(e) => Err(Error::InvalidProbe(e.to_string())),
            });
            rec.push(Check::TruncationStability, alpha, eta, 0, ErrorMetric::Relative, tolerance::TRUNCATION, outcome);
        }

        if !etas_seen.contains(&eta) {
            etas_seen.push(eta);
            for &n in &options.noon_orders {
                for reference in [Reference::Without, Reference::With] {
                    let outcome = ProbeSpec::noon(n, eta).and_then(|s| {
                        let noon_cfg = OracleConfig {
                            truncation: TruncationPolicy::Auto {
                                tail_tol: DEFAULT_TAIL_TOL,
                            },
                            ..*cfg
                        };
                        Ok((qfi_noon(n, eta)?.value, scenario_qfi(&s, reference, &noon_cfg)?.value))
                    });
                    rec.push(Check::Noon, 0.0, eta, n, ErrorMetric::Relative, tolerance::NOON, outcome);
                }
            }
        }
    }

    // the asymptotic regime lies outside small grids; probe it at each eta
    for &eta in &etas_seen {
        if eta <= 0.0 {
            continue;
        }
        let alpha = (20.0 / eta).sqrt();
        let outcome = qfi_ecs_ref(alpha, eta)
            .and_then(|exact| Ok((exact.value, qfi_ecs_ref_asymptotic(alpha, eta)?.value)));
        rec.push(Check::RefAsymptotic, alpha, eta, 0, ErrorMetric::Relative, tolerance::ASYMPTOTIC, outcome);
    }

    VerifyReport { rows: rec.rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> OracleConfig {
        OracleConfig::default()
    }

    #[test]
    fn pure_noon_qfi_is_n_squared() {
        for n in 1..6u32 {
            let t = FockTruncation::new(n as usize);
            let rho = noon_vector(n as usize, t).unwrap().projector();
            let f = qfi_numeric(&rho, &PhaseGenerator::two_arm(t), &cfg()).unwrap().value;
            assert_relative_eq!(f, (n * n) as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn pure_state_qfi_is_four_variances() {
        let t = FockTruncation::for_amplitude(1.2, 1e-14);
        let psi = ecs_vector(1.2, t).unwrap();
        let g = PhaseGenerator::two_arm(t);
        let mean = psi.diagonal_expectation(g.diagonal());
        let sq: Vec<f64> = g.diagonal().iter().map(|x| x * x).collect();
        let var = psi.diagonal_expectation(&sq) - mean * mean;
        let f = qfi_numeric(&psi.projector(), &g, &cfg()).unwrap().value;
        assert_relative_eq!(f, 4.0 * var, epsilon = 1e-12);
    }

    #[test]
    fn reference_scenario_matches_closed_form() {
        let spec = ProbeSpec::ecs(1.0, 0.9).unwrap();
        let numeric = scenario_qfi(&spec, Reference::With, &cfg()).unwrap();
        assert_eq!(numeric.method, Method::Numeric);
        let closed = qfi_ecs_ref(1.0, 0.9).unwrap().value;
        assert!(relative_error(numeric.value, closed) < 1e-8);
    }

    #[test]
    fn reference_free_scenario_matches_sector_resolved_form() {
        let spec = ProbeSpec::ecs(1.0, 0.9).unwrap();
        let numeric = scenario_qfi(&spec, Reference::Without, &cfg()).unwrap().value;
        let exact = qfi_ecs_noref_exact(1.0, 0.9).unwrap().value;
        assert!(relative_error(numeric, exact) < 1e-9);
        // oracle value of the averaged state at this point
        assert_relative_eq!(numeric, 1.023_503_64, epsilon = 1e-8);
    }

    #[test]
    fn noon_scenarios() {
        for reference in [Reference::With, Reference::Without] {
            for n in 1..5 {
                let spec = ProbeSpec::noon(n, 0.8).unwrap();
                let f = scenario_qfi(&spec, reference, &cfg()).unwrap().value;
                assert!(relative_error(f, qfi_noon(n, 0.8).unwrap().value) < 1e-10);
            }
        }
        let t = FockTruncation::new(4);
        let rho = noon_vector(4, t).unwrap().projector();
        assert_eq!(phase_average(&rho).max_abs_diff(&rho), 0.0);
    }

    #[test]
    fn lossless_scenarios_agree() {
        for alpha in [0.5, 1.0, 2.0] {
            let spec = ProbeSpec::ecs(alpha, 1.0).unwrap();
            let a = scenario_qfi(&spec, Reference::With, &cfg()).unwrap().value;
            let b = scenario_qfi(&spec, Reference::Without, &cfg()).unwrap().value;
            assert!(relative_error(a, b) < 1e-9);
        }
    }

    #[test]
    fn total_loss_gives_zero() {
        let spec = ProbeSpec::ecs(1.0, 0.0).unwrap();
        for reference in [Reference::With, Reference::Without] {
            assert_eq!(scenario_qfi(&spec, reference, &cfg()).unwrap().value, 0.0);
        }
    }

    #[test]
    fn negative_eigenvalue_is_reported() {
        let t = FockTruncation::new(1);
        let mut m = DensityOperator::vacuum(t).into_matrix();
        m[(0, 0)] = C64::new(1.1, 0.0);
        m[(1, 1)] = C64::new(-0.1, 0.0);
        let rho = DensityOperator::from_matrix(m, t).unwrap();
        let err = qfi_numeric(&rho, &PhaseGenerator::two_arm(t), &cfg()).unwrap_err();
        assert!(matches!(err, Error::NegativeEigenvalue { .. }));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let rho = DensityOperator::vacuum(FockTruncation::new(2));
        let g = PhaseGenerator::two_arm(FockTruncation::new(3));
        assert!(matches!(qfi_numeric(&rho, &g, &cfg()), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn config_validation() {
        let mut c = cfg();
        c.eigenvalue_floor = 0.0;
        assert!(c.validate().is_err());
        assert!(OracleConfig::with_tail_tol(-1.0).validate().is_err());
        assert!(cfg().validate().is_ok());
    }

    #[test]
    fn numeric_two_level_resolves_typos() {
        let two = numeric_two_level(1.0, 0.9, &cfg()).unwrap();
        let s = sigma_spectrum(1.0, 0.9).unwrap();
        assert!((two.overlap - s.p).abs() < 1e-12);
        assert!((two.eigenvalues.0 - s.gamma_plus).abs() < 1e-10);
        assert!((two.full_spectrum.1 - s.gamma_minus).abs() < 1e-10);
        let m = s.orthogonal_basis_matrix(MatrixEntryForm::Corrected);
        assert!((m[1][1] - two.matrix[1][1]).abs() < 1e-10);
        let printed = s.orthogonal_basis_matrix(MatrixEntryForm::AsPrinted);
        assert!((printed[1][1] - two.matrix[1][1]).abs() > 1e-3);
    }

    #[test]
    fn single_trivial_point_passes() {
        let report = verify_all(&[(0.5, 1.0)], &cfg(), &VerifyOptions::default());
        assert!(report.passed(), "{}", report.to_table());
    }

    #[test]
    fn corrupted_eigenvalues_are_flagged() {
        let options = VerifyOptions {
            eigenvalue_form: EigenvalueForm::AsPrinted,
            ..VerifyOptions::default()
        };
        let report = verify_all(&[(1.0, 0.9)], &cfg(), &options);
        let flagged: Vec<_> = report.failures().map(|r| r.check).collect();
        assert!(flagged.contains(&Check::SpectrumEigenvalues));
        assert!(!flagged.contains(&Check::SpectrumMatrix));
    }

    #[test]
    fn report_csv_has_one_line_per_row() {
        let report = verify_all(&[(0.5, 1.0)], &cfg(), &VerifyOptions::default());
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), report.rows.len() + 1);
        assert_eq!(csv.lines().next().unwrap(), REPORT_CSV_HEADER);
        assert!(csv.ends_with('\n'));
    }
}
