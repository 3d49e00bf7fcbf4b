//! Closed-form quantum Fisher information for entangled coherent and NOON
//! probes, with and without a phase reference.
//!
//! The lossy ECS with a reference beam is the rank-two mixture
//!
//! ```text
//! sigma = N^2 ( |P1><P1| + |P2><P2| + p_perp (|P1><P2| + |P2><P1|) ),
//! P1 = |a sqrt(eta), 0>,  P2 = |0, a sqrt(eta)>,
//! p = <P1|P2> = e^{-eta |a|^2},  p_perp = e^{-(1 - eta) |a|^2},
//! ```
//!
//! whose spectrum follows from a Gram–Schmidt change to the orthonormal
//! pair `F1 = P1`, `F2 = (P2 - p P1) / sqrt(1 - p^2)`.

use faer::Mat;

use crate::channels::GeneratorKind;
use crate::error::{Error, Result};
use crate::fock::{coherent_vector, DensityOperator, FockTruncation, StateVector, C64};
use crate::states::{norm_coeff, validate_eta, ProbeSpec};

/// Below this the weight `4 gamma_+ gamma_-` of the coherence term is zero
/// to working precision and the term is dropped.
const NEAR_PURE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    ClosedForm,
    Asymptotic,
    Numeric,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Asymptotic => "asymptotic",
            Method::Numeric => "numeric",
        }
    }
}

/// A Fisher information value with its provenance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QfiResult {
    pub value: f64,
    pub method: Method,
    pub generator: GeneratorKind,
    /// The probe, when the value was computed for a named scenario.
    pub inputs: Option<ProbeSpec>,
}

fn ecs_inputs(alpha: f64, eta: f64) -> ProbeSpec {
    ProbeSpec {
        family: crate::states::ProbeFamily::Ecs,
        alpha: C64::new(alpha, 0.0),
        n: 0,
        eta,
    }
}

fn closed(value: f64, method: Method, inputs: ProbeSpec) -> QfiResult {
    QfiResult {
        value,
        method,
        generator: GeneratorKind::TwoArm,
        inputs: Some(inputs),
    }
}

fn check_alpha(alpha: f64) -> Result<f64> {
    if alpha.is_finite() {
        Ok(alpha.abs())
    } else {
        Err(Error::InvalidProbe(format!("amplitude {alpha} is not finite")))
    }
}

/// Phase-averaged lossy ECS in compact form:
/// `2 N^2 e^{-|a|^2 (1 - eta)} (|a|^4 eta^2 + |a|^2 eta)`.
///
/// This sums `n^2 eta^n` over the NOON components as if each lossy NOON
/// state occupied its own sector. For `eta < 1` the components overlap in
/// lower sectors and the numeric QFI of the averaged state is
/// [`qfi_ecs_noref_exact`] instead; the two agree at `eta = 1`.
pub fn qfi_ecs_noref(alpha: f64, eta: f64) -> Result<QfiResult> {
    validate_eta(eta)?;
    let a = check_alpha(alpha)?;
    let n2 = norm_coeff(a).powi(2);
    let x = a * a * eta;
    let value = 2.0 * n2 * (-(a * a) * (1.0 - eta)).exp() * (x * x + x);
    Ok(closed(value, Method::ClosedForm, ecs_inputs(a, eta)))
}

/// The same quantity as a truncated series `2 N^2 sum_n |c_n|^2 n^2 eta^n`.
pub fn qfi_ecs_noref_blocksum(alpha: f64, eta: f64, trunc: FockTruncation) -> Result<QfiResult> {
    validate_eta(eta)?;
    let a = check_alpha(alpha)?;
    let c = coherent_vector(C64::new(a, 0.0), trunc)?;
    let n2 = norm_coeff(a).powi(2);
    let value = 2.0
        * n2
        * c.iter()
            .enumerate()
            .map(|(n, cn)| cn.norm_sqr() * qfi_noon_continuous(n as f64, eta))
            .sum::<f64>();
    Ok(closed(value, Method::ClosedForm, ecs_inputs(a, eta)))
}

/// QFI of the phase-averaged lossy ECS, `2 N^2 p_perp^2 (|a|^4 eta^2 + |a|^2 eta)`.
///
/// After loss, sector `k >= 1` of the averaged state is
/// `w_k [[1, p_perp], [p_perp, 1]]` on `{|k,0>, |0,k>}` with
/// `w_k = N^2 |c_k(a sqrt(eta))|^2`; its QFI under `(n1 - n2)/2` is
/// `2 w_k p_perp^2 k^2`.
pub fn qfi_ecs_noref_exact(alpha: f64, eta: f64) -> Result<QfiResult> {
    validate_eta(eta)?;
    let a = check_alpha(alpha)?;
    let n2 = norm_coeff(a).powi(2);
    let x = a * a * eta;
    let p_perp_sq = (-2.0 * a * a * (1.0 - eta)).exp();
    let value = 2.0 * n2 * p_perp_sq * (x * x + x);
    Ok(closed(value, Method::ClosedForm, ecs_inputs(a, eta)))
}

/// Lossy NOON state: `eta^n n^2`.
pub fn qfi_noon(n: u32, eta: f64) -> Result<QfiResult> {
    validate_eta(eta)?;
    if n == 0 {
        return Err(Error::InvalidProbe("NOON photon number must be >= 1".into()));
    }
    Ok(QfiResult {
        value: qfi_noon_continuous(n as f64, eta),
        method: Method::ClosedForm,
        generator: GeneratorKind::TwoArm,
        inputs: Some(ProbeSpec {
            family: crate::states::ProbeFamily::Noon,
            alpha: C64::new(0.0, 0.0),
            n,
            eta,
        }),
    })
}

/// `eta^N N^2` for real `N`, evaluated as `exp(N ln eta) N^2`.
pub fn qfi_noon_continuous(n: f64, eta: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    if eta == 0.0 {
        return 0.0;
    }
    (n * eta.ln()).exp() * n * n
}

/// How the eigenvalues of the 2x2 block are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenvalueForm {
    /// `(1 +- sqrt(1 - 4 det)) / 2`.
    Corrected,
    /// `(1 +- sqrt(1 - det)) / 2`.
    AsPrinted,
}

/// How the (2,2) entry of the Gram–Schmidt matrix is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixEntryForm {
    /// `N^2 (1 - p^2)`.
    Corrected,
    /// `N^2 (1 - p^2) p_perp`.
    AsPrinted,
}

/// Eigenvalues of a unit-trace 2x2 block with determinant `det`.
pub fn two_level_eigenvalues(det: f64, form: EigenvalueForm) -> Result<(f64, f64)> {
    let disc = match form {
        EigenvalueForm::Corrected => 1.0 - 4.0 * det,
        EigenvalueForm::AsPrinted => 1.0 - det,
    };
    if disc < -1e-12 {
        return Err(Error::DegenerateSpectrum(disc));
    }
    let root = disc.max(0.0).sqrt();
    Ok((0.5 * (1.0 + root), 0.5 * (1.0 - root)))
}

/// Analytic spectral data of the lossy ECS with a reference beam.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EcsLossySpectrum {
    pub alpha: f64,
    pub eta: f64,
    /// `N^2`
    pub norm_sq: f64,
    pub p: f64,
    pub p_perp: f64,
    /// `1 - p^2`, kept separately to avoid cancellation when `p -> 1`.
    pub one_minus_p_sq: f64,
    pub det_sigma: f64,
    pub sigma3_expect: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub zeta_plus: f64,
    pub zeta_minus: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub d_plus: f64,
    pub d_minus: f64,
}

pub fn sigma_spectrum(alpha: f64, eta: f64) -> Result<EcsLossySpectrum> {
    validate_eta(eta)?;
    let a = check_alpha(alpha)?;
    if a == 0.0 || eta == 0.0 {
        return Err(Error::InvalidProbe(
            "spectrum requires |alpha| > 0 and eta > 0".into(),
        ));
    }
    let x = a * a;
    let norm_sq = norm_coeff(a).powi(2);
    let p = (-eta * x).exp();
    let p_perp = (-(1.0 - eta) * x).exp();
    let one_minus_p = -(-eta * x).exp_m1();
    let one_minus_pp = -(-(1.0 - eta) * x).exp_m1();
    let one_minus_p_sq = one_minus_p * (1.0 + p);
    if one_minus_p <= 0.0 {
        return Err(Error::DegenerateSpectrum(0.0));
    }
    let det_sigma = norm_sq * norm_sq * one_minus_p_sq * one_minus_pp * (1.0 + p_perp);
    // With e = e^{-|a|^2} = p p_perp the discriminant is a perfect square,
    //   1 - 4 det = ((p + p_perp) / (1 + e))^2,
    // so the eigenvalues factor and <sigma_3> / sqrt(1 - 4 det) = p.
    let e = p * p_perp;
    let sigma3_expect = p * (p + p_perp) / (1.0 + e);
    let gamma_plus = 0.5 * (1.0 + p) * (1.0 + p_perp) / (1.0 + e);
    let gamma_minus = 0.5 * one_minus_p * one_minus_pp / (1.0 + e);
    let zeta_plus = (0.5 * (1.0 + p)).sqrt();
    let zeta_minus = (0.5 * one_minus_p).sqrt();
    let s = one_minus_p_sq.sqrt();
    let d_minus = zeta_minus / s;
    let d_plus = zeta_plus / s;
    let c_plus = zeta_plus - p * d_minus;
    let c_minus = -zeta_minus - p * d_plus;
    Ok(EcsLossySpectrum {
        alpha: a,
        eta,
        norm_sq,
        p,
        p_perp,
        one_minus_p_sq,
        det_sigma,
        sigma3_expect,
        gamma_plus,
        gamma_minus,
        zeta_plus,
        zeta_minus,
        c_plus,
        c_minus,
        d_plus,
        d_minus,
    })
}

impl EcsLossySpectrum {
    /// Coefficients `(C, D)` of `|gamma_+>` and `|gamma_->` on `(P1, P2)`.
    pub fn eigenvector_coefficients(&self) -> [(f64, f64); 2] {
        [(self.c_plus, self.d_minus), (self.c_minus, self.d_plus)]
    }

    /// Largest deviation of `<gamma_i|gamma_j>` from the identity, using the
    /// Gram matrix `[[1, p], [p, 1]]` of the non-orthogonal pair.
    pub fn orthonormality_error(&self) -> f64 {
        let v = self.eigenvector_coefficients();
        let inner = |(c1, d1): (f64, f64), (c2, d2): (f64, f64)| {
            c1 * c2 + d1 * d2 + self.p * (c1 * d2 + d1 * c2)
        };
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((inner(v[i], v[j]) - target).abs());
            }
        }
        worst
    }

    /// The Gram–Schmidt representation of sigma.
    pub fn orthogonal_basis_matrix(&self, form: MatrixEntryForm) -> [[f64; 2]; 2] {
        let (p, pp, n2) = (self.p, self.p_perp, self.norm_sq);
        let s = self.one_minus_p_sq.sqrt();
        let off = n2 * (p + pp) * s;
        let last = match form {
            MatrixEntryForm::Corrected => n2 * self.one_minus_p_sq,
            MatrixEntryForm::AsPrinted => n2 * self.one_minus_p_sq * pp,
        };
        [[n2 * (1.0 + 2.0 * p * pp + p * p), off], [off, last]]
    }

    /// `<gamma|G|gamma>` and `<gamma|G^2|gamma>` for `G = (n1 - n2)/2`,
    /// from the moments `<P1|G|P1> = -<P2|G|P2> = x/2`,
    /// `<Pi|G^2|Pi> = (x + x^2)/4` and vanishing cross moments, `x = |a|^2 eta`.
    fn generator_moments(&self, (c, d): (f64, f64)) -> (f64, f64) {
        let x = self.alpha * self.alpha * self.eta;
        let g1 = 0.5 * x;
        let g2 = -0.5 * x;
        let q = 0.25 * (x + x * x);
        (c * c * g1 + d * d * g2, (c * c + d * d) * q)
    }

    /// Variances of `G` in `|gamma_+>`, `|gamma_->` and `|<gamma_+|G|gamma_->|^2`.
    pub fn generator_terms(&self) -> (f64, f64, f64) {
        let [plus, minus] = self.eigenvector_coefficients();
        let (m1p, m2p) = self.generator_moments(plus);
        let (m1m, m2m) = self.generator_moments(minus);
        let x = self.alpha * self.alpha * self.eta;
        let cross = 0.5 * x * (plus.0 * minus.0 - plus.1 * minus.1);
        (m2p - m1p * m1p, m2m - m1m * m1m, cross * cross)
    }
}

/// Eigenvalues of a real symmetric 2x2 matrix, descending.
pub fn symmetric_2x2_eigenvalues(m: [[f64; 2]; 2]) -> (f64, f64) {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let radius = (half_diff * half_diff + m[0][1] * m[1][0]).sqrt();
    (mean + radius, mean - radius)
}

/// `4 (g+ V+ + g- V- - 4 g+ g- |G+-|^2)` for a rank-two state.
pub fn qfi_two_level(
    gamma_plus: f64,
    gamma_minus: f64,
    variance_plus: f64,
    variance_minus: f64,
    cross_term_sq: f64,
) -> Result<f64> {
    let valid = gamma_plus >= -1e-12
        && gamma_minus >= -1e-12
        && gamma_plus + gamma_minus <= 1.0 + 1e-12
        && gamma_plus.is_finite()
        && gamma_minus.is_finite();
    if !valid {
        return Err(Error::InvalidWeights {
            gamma_plus,
            gamma_minus,
        });
    }
    let (gp, gm) = (gamma_plus.max(0.0), gamma_minus.max(0.0));
    let cross = if gp.min(gm) < NEAR_PURE {
        0.0
    } else {
        4.0 * gp * gm * cross_term_sq
    };
    Ok(4.0 * (gp * variance_plus + gm * variance_minus - cross))
}

/// Lossy ECS with a reference beam, from its analytic spectrum.
pub fn qfi_ecs_ref(alpha: f64, eta: f64) -> Result<QfiResult> {
    validate_eta(eta)?;
    let a = check_alpha(alpha)?;
    if a == 0.0 || eta == 0.0 {
        return Ok(closed(0.0, Method::ClosedForm, ecs_inputs(a, eta)));
    }
    let spectrum = sigma_spectrum(a, eta)?;
    let (var_plus, var_minus, cross_sq) = spectrum.generator_terms();
    let value = qfi_two_level(
        spectrum.gamma_plus,
        spectrum.gamma_minus,
        var_plus,
        var_minus,
        cross_sq,
    )?;
    Ok(closed(value.max(0.0), Method::ClosedForm, ecs_inputs(a, eta)))
}

/// Large-`eta |a|^2` limit of [`qfi_ecs_ref`]:
/// `2 N^2 (e^{-2 |a|^2 (1 - eta)} |a|^4 eta^2 + |a|^2 eta)`.
pub fn qfi_ecs_ref_asymptotic(alpha: f64, eta: f64) -> Result<QfiResult> {
    validate_eta(eta)?;
    let a = check_alpha(alpha)?;
    let n2 = norm_coeff(a).powi(2);
    let x = a * a * eta;
    let value = 2.0 * n2 * ((-2.0 * a * a * (1.0 - eta)).exp() * x * x + x);
    Ok(closed(value, Method::Asymptotic, ecs_inputs(a, eta)))
}

/// Cramér–Rao bound `(m F)^{-1/2}` in radians.
pub fn sensitivity(fisher: f64, repetitions: u32) -> Result<f64> {
    if repetitions == 0 {
        return Err(Error::InvalidRepetitions(repetitions));
    }
    if !(fisher > 0.0) {
        return Err(Error::NonpositiveFisher(fisher));
    }
    Ok((repetitions as f64 * fisher).powf(-0.5))
}

/// The four-term lossy ECS assembled directly from truncated coherent
/// vectors of amplitude `a sqrt(eta)`.
pub fn lossy_ecs_four_term(alpha: f64, eta: f64, trunc: FockTruncation) -> Result<DensityOperator> {
    validate_eta(eta)?;
    let a = check_alpha(alpha)?;
    let beta = coherent_vector(C64::new(a * eta.sqrt(), 0.0), trunc)?;
    let mut vacuum = vec![C64::new(0.0, 0.0); trunc.levels()];
    vacuum[0] = C64::new(1.0, 0.0);
    let psi1 = StateVector::product(&beta, &vacuum, trunc)?;
    let psi2 = StateVector::product(&vacuum, &beta, trunc)?;
    let (u, v) = (psi1.amplitudes(), psi2.amplitudes());
    let n2 = norm_coeff(a).powi(2);
    let p_perp = (-(1.0 - eta) * a * a).exp();
    let dim = trunc.dim();
    let matrix = Mat::from_fn(dim, dim, |i, j| {
        (u[i] * u[j].conj() + v[i] * v[j].conj() + (u[i] * v[j].conj() + v[i] * u[j].conj()) * p_perp)
            * n2
    });
    DensityOperator::from_matrix(matrix, trunc)
}
