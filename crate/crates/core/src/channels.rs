//! Quantum operations of the lossy interferometer: photon loss, phase
//! encoding and the reference-free phase average.

use faer::Mat;

use crate::error::{Error, Result};
use crate::fock::{
    partial_trace_pure, CMat, DensityOperator, FockTruncation, TensorLayout, C64, NEGATIVE_FLOOR,
};
use crate::states::validate_eta;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    /// `(n1 - n2) / 2`
    TwoArm,
    /// `n1`
    SingleArm,
    /// `(n1 + n2) / 2`, the unobservable common phase.
    SumPhase,
    /// Any other Fock-diagonal generator.
    Custom,
}

impl GeneratorKind {
    pub fn label(self) -> &'static str {
        match self {
            GeneratorKind::TwoArm => "two_arm",
            GeneratorKind::SingleArm => "single_arm",
            GeneratorKind::SumPhase => "sum_phase",
            GeneratorKind::Custom => "custom",
        }
    }
}

/// A phase generator diagonal in the Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGenerator {
    kind: GeneratorKind,
    diagonal: Vec<f64>,
}

impl PhaseGenerator {
    fn from_occupations(kind: GeneratorKind, trunc: FockTruncation, f: impl Fn(f64, f64) -> f64) -> Self {
        let diagonal = (0..trunc.dim())
            .map(|i| {
                let (a, b) = trunc.occupations(i);
                f(a as f64, b as f64)
            })
            .collect();
        Self { kind, diagonal }
    }

    pub fn two_arm(trunc: FockTruncation) -> Self {
        Self::from_occupations(GeneratorKind::TwoArm, trunc, |a, b| (a - b) / 2.0)
    }

    pub fn single_arm(trunc: FockTruncation) -> Self {
        Self::from_occupations(GeneratorKind::SingleArm, trunc, |a, _| a)
    }

    pub fn sum_phase(trunc: FockTruncation) -> Self {
        Self::from_occupations(GeneratorKind::SumPhase, trunc, |a, b| (a + b) / 2.0)
    }

    pub fn custom(diagonal: Vec<f64>) -> Self {
        Self {
            kind: GeneratorKind::Custom,
            diagonal,
        }
    }

    pub fn of_kind(kind: GeneratorKind, trunc: FockTruncation) -> Option<Self> {
        match kind {
            GeneratorKind::TwoArm => Some(Self::two_arm(trunc)),
            GeneratorKind::SingleArm => Some(Self::single_arm(trunc)),
            GeneratorKind::SumPhase => Some(Self::sum_phase(trunc)),
            GeneratorKind::Custom => None,
        }
    }

    /// `G + shift * I`, keeping the kind.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            kind: self.kind,
            diagonal: self.diagonal.iter().map(|g| g + shift).collect(),
        }
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn matrix(&self) -> CMat {
        let n = self.diagonal.len();
        Mat::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(self.diagonal[i], 0.0)
            } else {
                ZERO
            }
        })
    }
}

fn binomial_table(n_max: usize) -> Vec<Vec<f64>> {
    let mut table = vec![vec![0.0; n_max + 1]; n_max + 1];
    for n in 0..=n_max {
        table[n][0] = 1.0;
        for k in 1..=n {
            table[n][k] = table[n - 1][k - 1] + if k < n { table[n - 1][k] } else { 0.0 };
        }
    }
    table
}

/// Equal photon loss in both arms, transmittance `eta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossChannel {
    eta: f64,
}

impl LossChannel {
    pub fn new(eta: f64) -> Result<Self> {
        validate_eta(eta)?;
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `weights[k][m] = <m| K_k |m + k>` with
    /// `K_k = sqrt((1 - eta)^k / k!) eta^{n/2} a^k`.
    fn kraus_weights(&self, n_max: usize) -> Vec<Vec<f64>> {
        let binom = binomial_table(n_max);
        let (eta, loss) = (self.eta, 1.0 - self.eta);
        (0..=n_max)
            .map(|k| {
                (0..=n_max - k)
                    .map(|m| (binom[m + k][k] * eta.powi(m as i32) * loss.powi(k as i32)).sqrt())
                    .collect()
            })
            .collect()
    }

    /// Single-mode Kraus operators `K_0 .. K_{n_max}`; the series is exact at
    /// finite cutoff because `a^k` annihilates every level below `k`.
    pub fn kraus_operators(&self, trunc: FockTruncation) -> Vec<CMat> {
        let n_max = trunc.n_max();
        let levels = trunc.levels();
        self.kraus_weights(n_max)
            .into_iter()
            .enumerate()
            .map(|(k, w)| {
                Mat::from_fn(levels, levels, |m, n| {
                    if n == m + k {
                        C64::new(w[m], 0.0)
                    } else {
                        ZERO
                    }
                })
            })
            .collect()
    }

    /// Applies the single-mode Kraus family to each arm.
    pub fn apply(&self, rho: &DensityOperator) -> DensityOperator {
        let trunc = rho.truncation();
        let weights = self.kraus_weights(trunc.n_max());
        let once = apply_single_mode_loss(rho.matrix(), trunc, &weights, 0);
        let twice = apply_single_mode_loss(once.as_ref(), trunc, &weights, 1);
        DensityOperator::from_matrix_unchecked(twice, trunc)
    }
}

/// Scatters every nonzero entry of `rho` through `sum_k K_k rho K_k^dagger`
/// on one mode.
fn apply_single_mode_loss(
    rho: faer::MatRef<'_, C64>,
    trunc: FockTruncation,
    weights: &[Vec<f64>],
    mode: usize,
) -> CMat {
    let dim = trunc.dim();
    let mut out: CMat = Mat::zeros(dim, dim);
    let split = |index: usize| {
        let (a, b) = trunc.occupations(index);
        if mode == 0 {
            (a, b)
        } else {
            (b, a)
        }
    };
    let join = |lossy: usize, spectator: usize| {
        if mode == 0 {
            trunc.index(lossy, spectator)
        } else {
            trunc.index(spectator, lossy)
        }
    };
    for j in 0..dim {
        let (bj, sj) = split(j);
        for i in 0..dim {
            let value = rho[(i, j)];
            if value == ZERO {
                continue;
            }
            let (bi, si) = split(i);
            for k in 0..=bi.min(bj) {
                let w = weights[k][bi - k] * weights[k][bj - k];
                if w == 0.0 {
                    continue;
                }
                out[(join(bi - k, si), join(bj - k, sj))] += value * w;
            }
        }
    }
    out
}

pub fn apply_loss(rho: &DensityOperator, eta: f64) -> Result<DensityOperator> {
    Ok(LossChannel::new(eta)?.apply(rho))
}

/// Real matrix exponential by scaling and squaring with a Taylor kernel.
fn expm(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let norm: f64 = a
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings as i32);
    let scaled: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|x| x * scale).collect()).collect();
    let matmul = |x: &[Vec<f64>], y: &[Vec<f64>]| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| x[i][k] * y[k][j]).sum())
                    .collect()
            })
            .collect()
    };
    let mut result: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut term = result.clone();
    for order in 1..=24 {
        term = matmul(&term, &scaled);
        let inv = 1.0 / order as f64;
        term.iter_mut().flatten().for_each(|x| *x *= inv);
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// Beam-splitter coupling of one signal mode to a vacuum environment mode,
/// `exp[arccos(sqrt(eta)) (a^dagger v - a v^dagger)]`.
///
/// Returns `amp[n][k]`: the amplitude of `|n - k>_signal |k>_env` produced
/// from `|n>_signal |0>_env`. Computed by exponentiating the generator in
/// each conserved total-photon sector.
pub fn beam_splitter_amplitudes(eta: f64, n_max: usize) -> Result<Vec<Vec<f64>>> {
    validate_eta(eta)?;
    let theta = eta.sqrt().acos();
    Ok((0..=n_max)
        .map(|total| {
            // sector basis j <-> |total - j>_signal |j>_env
            let dim = total + 1;
            let mut generator = vec![vec![0.0; dim]; dim];
            for j in 0..dim {
                let n_sig = (total - j) as f64;
                let n_env = j as f64;
                if j >= 1 {
                    // a^dagger v: j -> j - 1
                    generator[j - 1][j] += theta * ((n_sig + 1.0) * n_env).sqrt();
                }
                if j + 1 < dim {
                    // -a v^dagger: j -> j + 1
                    generator[j + 1][j] -= theta * (n_sig * (n_env + 1.0)).sqrt();
                }
            }
            let unitary = expm(&generator);
            (0..dim).map(|k| unitary[k][0]).collect()
        })
        .collect())
}

/// Photon loss through explicit beam splitters and vacuum environment modes,
/// followed by a partial trace over the environment. `env` bounds the
/// photon number kept in each environment mode.
pub fn apply_loss_via_bs(
    rho: &DensityOperator,
    eta: f64,
    env: FockTruncation,
) -> Result<DensityOperator> {
    let trunc = rho.truncation();
    let levels = trunc.levels();
    let env_levels = env.levels();
    let amp = beam_splitter_amplitudes(eta, trunc.n_max())?;
    let layout = TensorLayout::new(vec![levels, levels, env_levels, env_levels]);
    let spectrum = rho.eigen()?;

    let dim = trunc.dim();
    let mut out: CMat = Mat::zeros(dim, dim);
    for (weight, psi) in spectrum.eigenpairs() {
        if weight < -NEGATIVE_FLOOR {
            return Err(Error::NegativeEigenvalue {
                value: weight,
                floor: -NEGATIVE_FLOOR,
            });
        }
        if weight <= 0.0 {
            continue;
        }
        let mut joint = vec![ZERO; layout.total()];
        for a1 in 0..levels {
            for a2 in 0..levels {
                for e3 in 0..env_levels {
                    let n1 = a1 + e3;
                    if n1 > trunc.n_max() {
                        break;
                    }
                    for e4 in 0..env_levels {
                        let n2 = a2 + e4;
                        if n2 > trunc.n_max() {
                            break;
                        }
                        let source = psi[trunc.index(n1, n2)];
                        if source == ZERO {
                            continue;
                        }
                        let flat = ((a1 * levels + a2) * env_levels + e3) * env_levels + e4;
                        joint[flat] = source * amp[n1][e3] * amp[n2][e4];
                    }
                }
            }
        }
        let reduced = partial_trace_pure(&joint, &layout, &[0, 1])?;
        let m = reduced.matrix();
        for i in 0..dim {
            for j in 0..dim {
                out[(i, j)] += m[(i, j)] * weight;
            }
        }
    }

    let result = DensityOperator::from_matrix_unchecked(out, trunc);
    let lost = rho.trace() - result.trace();
    if lost > trunc.tail_tol().max(env.tail_tol()) {
        return Err(Error::TruncationTooSmall {
            n_max: env.n_max(),
            tail: lost,
            tol: env.tail_tol(),
        });
    }
    Ok(result)
}

/// Removes all coherence between sectors of different total photon number:
/// the exact value of the uniform average over a common phase.
pub fn phase_average(rho: &DensityOperator) -> DensityOperator {
    let trunc = rho.truncation();
    let totals = trunc.total_numbers();
    let m = rho.matrix();
    let dim = rho.dim();
    let matrix = Mat::from_fn(dim, dim, |i, j| {
        if totals[i] == totals[j] {
            m[(i, j)]
        } else {
            ZERO
        }
    });
    DensityOperator::from_matrix_unchecked(matrix, trunc)
}

/// `U rho U^dagger` with `U = diag(exp(-i theta_k))`.
pub fn apply_diagonal_unitary(rho: &DensityOperator, phases: &[f64]) -> Result<DensityOperator> {
    if phases.len() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: phases.len(),
        });
    }
    let m = rho.matrix();
    let dim = rho.dim();
    let matrix = Mat::from_fn(dim, dim, |i, j| {
        m[(i, j)] * C64::from_polar(1.0, phases[j] - phases[i])
    });
    Ok(DensityOperator::from_matrix_unchecked(matrix, rho.truncation()))
}

/// Encodes `phi` with `exp(-i phi G)`.
pub fn apply_phase(rho: &DensityOperator, phi: f64, generator: &PhaseGenerator) -> Result<DensityOperator> {
    let phases: Vec<f64> = generator.diagonal().iter().map(|g| phi * g).collect();
    apply_diagonal_unitary(rho, &phases)
}
