//! Probe states: entangled coherent states, NOON states and their scalar
//! descriptors.

use crate::error::{Error, Result};
use crate::fock::{coherent_vector, FockTruncation, StateVector, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProbeFamily {
    Ecs,
    Noon,
}

/// Declarative description of a probe and the loss it suffers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeSpec {
    pub family: ProbeFamily,
    /// Coherent amplitude (ECS only).
    pub alpha: C64,
    /// Photon number (NOON only).
    pub n: u32,
    /// Transmittance of each arm.
    pub eta: f64,
}

impl ProbeSpec {
    pub fn ecs(alpha: impl Into<C64>, eta: f64) -> Result<Self> {
        let spec = Self {
            family: ProbeFamily::Ecs,
            alpha: alpha.into(),
            n: 0,
            eta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn noon(n: u32, eta: f64) -> Result<Self> {
        let spec = Self {
            family: ProbeFamily::Noon,
            alpha: C64::new(0.0, 0.0),
            n,
            eta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        validate_eta(self.eta)?;
        match self.family {
            ProbeFamily::Ecs if !(self.alpha.norm() > 0.0 && self.alpha.norm().is_finite()) => Err(
                Error::InvalidProbe(format!("ECS amplitude must be nonzero, got {}", self.alpha)),
            ),
            ProbeFamily::Noon if self.n == 0 => {
                Err(Error::InvalidProbe("NOON photon number must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn abs_alpha(&self) -> f64 {
        self.alpha.norm()
    }
}

pub(crate) fn validate_eta(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::InvalidEta(eta))
    }
}

/// ECS normalization `1 / sqrt(2 (1 + e^{-|a|^2}))`.
pub fn norm_coeff(abs_alpha: f64) -> f64 {
    1.0 / (2.0 * (1.0 + (-abs_alpha * abs_alpha).exp())).sqrt()
}

/// Mean photon number `2 N^2 |a|^2` of the ECS.
pub fn mean_photon_number(abs_alpha: f64) -> f64 {
    let x = abs_alpha * abs_alpha;
    x / (1.0 + (-x).exp())
}

fn mean_photon_derivative(a: f64) -> f64 {
    let x = a * a;
    let e = (-x).exp();
    2.0 * a / (1.0 + e) + 2.0 * a * x * e / ((1.0 + e) * (1.0 + e))
}

/// Real amplitude whose ECS carries `target` photons on average.
///
/// Bisection on `[0, sqrt(target) + 2]` followed by Newton polishing.
pub fn alpha_for_mean_photon(target: f64) -> Result<f64> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidProbe(format!(
            "mean photon number must be positive, got {target}"
        )));
    }
    const MAX_BISECT: usize = 200;
    const MAX_NEWTON: usize = 50;
    let f = |a: f64| mean_photon_number(a) - target;

    let (mut lo, mut hi) = (0.0, target.sqrt() + 2.0);
    let mut iterations = 0;
    while hi - lo > 1e-6 * (1.0 + hi) && iterations < MAX_BISECT {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }

    let mut a = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON {
        let r = f(a);
        if r.abs() <= 1e-13 * target.max(1.0) {
            break;
        }
        let step = r / mean_photon_derivative(a);
        let next = a - step;
        // keep the iterate inside the bracket
        a = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if f(a) < 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        iterations += 1;
    }

    let residual = f(a).abs();
    if residual > 1e-10 * target.max(1.0) {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }
    Ok(a)
}

/// Scalars of the ECS at a given cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct EcsScalars {
    pub norm_coeff: f64,
    pub mean_photons: f64,
    /// Probability of each total-photon sector, `2 N^2 |c_n|^2` for `n >= 1`.
    /// The vacuum sector carries `4 N^2 |c_0|^2` because both branches of the
    /// superposition share `|0, 0>`.
    pub noon_weights: Vec<f64>,
}

pub fn ecs_scalars(alpha: impl Into<C64>, trunc: FockTruncation) -> Result<EcsScalars> {
    let alpha = alpha.into();
    let c = coherent_vector(alpha, trunc)?;
    let norm = norm_coeff(alpha.norm());
    let n2 = norm * norm;
    let noon_weights = c
        .iter()
        .enumerate()
        .map(|(n, cn)| {
            let w = 2.0 * n2 * cn.norm_sqr();
            if n == 0 {
                2.0 * w
            } else {
                w
            }
        })
        .collect();
    Ok(EcsScalars {
        norm_coeff: norm,
        mean_photons: mean_photon_number(alpha.norm()),
        noon_weights,
    })
}

/// `N (|a>|0> + |0>|a>)` on the truncated space.
pub fn ecs_vector(alpha: impl Into<C64>, trunc: FockTruncation) -> Result<StateVector> {
    let alpha = alpha.into();
    let coherent = coherent_vector(alpha, trunc)?;
    let mut vacuum = vec![C64::new(0.0, 0.0); trunc.levels()];
    vacuum[0] = C64::new(1.0, 0.0);
    let left = StateVector::product(&coherent, &vacuum, trunc)?;
    let right = StateVector::product(&vacuum, &coherent, trunc)?;
    let norm = norm_coeff(alpha.norm());
    Ok(left.add(&right).scaled(C64::new(norm, 0.0)))
}

/// `(|n, 0> + |0, n>) / sqrt(2)`.
pub fn noon_vector(n: usize, trunc: FockTruncation) -> Result<StateVector> {
    if n == 0 {
        return Err(Error::InvalidProbe("NOON photon number must be >= 1".into()));
    }
    if n > trunc.n_max() {
        return Err(Error::TruncationTooSmall {
            n_max: trunc.n_max(),
            tail: 1.0,
            tol: trunc.tail_tol(),
        });
    }
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let left = StateVector::basis(n, 0, trunc)?;
    let right = StateVector::basis(0, n, trunc)?;
    Ok(left.add(&right).scaled(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{number_operator, Mode};
    use approx::assert_relative_eq;

    #[test]
    fn ecs_overlap_with_noon_components() {
        let alpha = 1.3;
        let t = FockTruncation::for_amplitude(alpha, 1e-14);
        let ecs = ecs_vector(alpha, t).unwrap();
        let c = coherent_vector(C64::new(alpha, 0.0), t).unwrap();
        let norm = norm_coeff(alpha);
        for n in 1..=t.n_max() {
            let overlap = noon_vector(n, t).unwrap().inner(&ecs);
            let expected = std::f64::consts::SQRT_2 * norm * c[n].re;
            assert!((overlap.re - expected).abs() < 1e-10, "n = {n}");
            assert!(overlap.im.abs() < 1e-15);
        }
    }

    #[test]
    fn ecs_is_normalized() {
        for alpha in [0.5, 1.0, 2.0] {
            let t = FockTruncation::for_amplitude(alpha, 1e-12);
            let v = ecs_vector(alpha, t).unwrap();
            assert!((v.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn norm_coeff_at_unit_amplitude() {
        // 1 / sqrt(2 (1 + e^-1))
        assert_relative_eq!(norm_coeff(1.0), 0.604_590_182_946_268_5, epsilon = 1e-15);
    }

    #[test]
    fn noon_vector_moments() {
        let t = FockTruncation::new(6);
        let v = noon_vector(1, t).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(v.amplitude(1, 0).re, s);
        assert_relative_eq!(v.amplitude(0, 1).re, s);
        assert_relative_eq!(v.norm_sqr(), 1.0, epsilon = 1e-15);

        let n1 = number_operator(Mode::One, t);
        let n2 = number_operator(Mode::Two, t);
        for n in 1..=6 {
            let v = noon_vector(n, t).unwrap();
            let total = v.inner(&n1.apply(&v)).re + v.inner(&n2.apply(&v)).re;
            assert_relative_eq!(total, n as f64, epsilon = 1e-14);
            // G = (n1 - n2) / 2
            let g: Vec<f64> = (0..t.dim())
                .map(|i| {
                    let (a, b) = t.occupations(i);
                    (a as f64 - b as f64) / 2.0
                })
                .collect();
            let g2: Vec<f64> = g.iter().map(|x| x * x).collect();
            let var = v.diagonal_expectation(&g2) - v.diagonal_expectation(&g).powi(2);
            assert_relative_eq!(var, (n * n) as f64 / 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn noon_vector_errors() {
        let t = FockTruncation::new(3);
        assert!(matches!(noon_vector(4, t), Err(Error::TruncationTooSmall { .. })));
        assert!(matches!(noon_vector(0, t), Err(Error::InvalidProbe(_))));
    }

    #[test]
    fn mean_photon_number_values() {
        assert_eq!(mean_photon_number(0.0), 0.0);
        assert!(mean_photon_number(1e-6) < 1e-12);
        // 1 / (1 + e^-1)
        assert_relative_eq!(mean_photon_number(1.0), 0.731_058_578_630_004_9, epsilon = 1e-15);
        for a in [5.0, 10.0, 30.0] {
            assert_relative_eq!(mean_photon_number(a) / (a * a), 1.0, epsilon = 1e-10);
        }
        // agrees with <n1 + n2> of the truncated vector
        let t = FockTruncation::for_amplitude(1.0, 1e-14);
        let v = ecs_vector(1.0, t).unwrap();
        let total: Vec<f64> = t.total_numbers().iter().map(|&n| n as f64).collect();
        assert_relative_eq!(v.diagonal_expectation(&total), 0.731_058_578_630_004_9, epsilon = 1e-12);
    }

    #[test]
    fn alpha_for_mean_photon_round_trip() {
        for x in [0.1, 1.0, 10.0, 100.0] {
            let a = alpha_for_mean_photon(x).unwrap();
            assert!((mean_photon_number(a) - x).abs() <= 1e-9);
        }
        let a = alpha_for_mean_photon(0.731_058_578_630_004_9).unwrap();
        assert_relative_eq!(a, 1.0, epsilon = 1e-10);
        let big = alpha_for_mean_photon(1.0e4).unwrap();
        assert_relative_eq!(big, 100.0, max_relative = 1e-12);
        assert!(alpha_for_mean_photon(0.0).is_err());
        assert!(alpha_for_mean_photon(f64::NAN).is_err());
    }

    #[test]
    fn mean_photon_number_is_strictly_increasing() {
        let mut prev = mean_photon_number(0.0);
        for k in 1..=5000 {
            let next = mean_photon_number(k as f64 * 1e-3);
            assert!(next > prev);
            prev = next;
        }
    }

    #[test]
    fn noon_weights_sum_and_mean() {
        let alpha = 1.6;
        let t = FockTruncation::for_amplitude(alpha, 1e-13);
        let s = ecs_scalars(alpha, t).unwrap();
        let total: f64 = s.noon_weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mean: f64 = s.noon_weights.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
        assert_relative_eq!(mean, s.mean_photons, epsilon = 1e-11);
    }

    #[test]
    fn probe_spec_validation() {
        assert!(ProbeSpec::ecs(1.0, 0.5).is_ok());
        assert!(matches!(ProbeSpec::ecs(0.0, 0.5), Err(Error::InvalidProbe(_))));
        assert!(matches!(ProbeSpec::ecs(1.0, 1.5), Err(Error::InvalidEta(_))));
        assert!(matches!(ProbeSpec::noon(0, 0.5), Err(Error::InvalidProbe(_))));
        assert!(matches!(ProbeSpec::noon(2, -0.1), Err(Error::InvalidEta(_))));
    }
}
