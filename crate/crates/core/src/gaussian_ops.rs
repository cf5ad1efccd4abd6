//! Symplectic building blocks and Gaussian measurement conditioning.

use nalgebra::{DMatrix, DVector};

use crate::error::{GaussError, Result};
use crate::phase_space::{validate_cm, CovarianceMatrix, GaussianState, SymplecticForm};

/// Tolerance on `SΩSᵀ = Ω` at construction.
pub const SYMPLECTIC_TOL: f64 = 1e-10;
/// Singular values below this are dropped by the homodyne pseudo-inverse.
pub const PINV_CUTOFF: f64 = 1e-12;

/// A symplectic matrix acting on `n_modes` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    n_modes: usize,
    matrix: DMatrix<f64>,
}

/// Sign layout of a balanced beam splitter on the mode pair `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsVariant {
    /// `(1/√2)[[1, 1], [1, -1]]`: `i → (i + j)/√2`, `j → (i - j)/√2`.
    Plus,
    /// `(1/√2)[[1, -1], [1, 1]]`: `i → (i - j)/√2`, `j → (i + j)/√2`.
    Minus,
}

impl SymplecticTransform {
    /// Checks `SΩSᵀ = Ω` to [`SYMPLECTIC_TOL`].
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols || rows == 0 || rows % 2 != 0 {
            return Err(GaussError::BadShape { rows, cols });
        }
        let n_modes = rows / 2;
        let omega = SymplecticForm::new(n_modes).matrix();
        let deviation = (&matrix * &omega * matrix.transpose() - &omega).amax();
        if deviation > SYMPLECTIC_TOL * matrix.amax().max(1.0).powi(2) {
            return Err(GaussError::NotSymplectic { deviation });
        }
        Ok(Self { n_modes, matrix })
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            n_modes,
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `self ∘ first`: applies `first`, then `self`.
    pub fn after(&self, first: &SymplecticTransform) -> Result<SymplecticTransform> {
        if self.n_modes != first.n_modes {
            return Err(GaussError::DimensionMismatch {
                expected: self.n_modes,
                found: first.n_modes,
            });
        }
        Ok(Self {
            n_modes: self.n_modes,
            matrix: &self.matrix * &first.matrix,
        })
    }

    /// Rotation by `theta` in the `(x, p)` plane of one mode.
    pub fn phase_rotation(n_modes: usize, mode: usize, theta: f64) -> Result<Self> {
        check_mode(n_modes, mode)?;
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        let (s, c) = theta.sin_cos();
        let k = 2 * mode;
        m[(k, k)] = c;
        m[(k, k + 1)] = -s;
        m[(k + 1, k)] = s;
        m[(k + 1, k + 1)] = c;
        Ok(Self { n_modes, matrix: m })
    }

    /// Single-mode squeezer `diag(e^{-s}, e^{s})`, position squeezed for `s > 0`.
    pub fn squeezer(n_modes: usize, mode: usize, s: f64) -> Result<Self> {
        check_mode(n_modes, mode)?;
        let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
        m[(2 * mode, 2 * mode)] = (-s).exp();
        m[(2 * mode + 1, 2 * mode + 1)] = s.exp();
        Ok(Self { n_modes, matrix: m })
    }

    /// Output mode `k` is input mode `perm[k]`.
    pub fn mode_permutation(perm: &[usize]) -> Result<Self> {
        let n_modes = perm.len();
        let mut seen = vec![false; n_modes];
        for &p in perm {
            check_mode(n_modes, p)?;
            if std::mem::replace(&mut seen[p], true) {
                return Err(GaussError::BadModeSelection);
            }
        }
        let mut m = DMatrix::zeros(2 * n_modes, 2 * n_modes);
        for (k, &p) in perm.iter().enumerate() {
            m[(2 * k, 2 * p)] = 1.0;
            m[(2 * k + 1, 2 * p + 1)] = 1.0;
        }
        Ok(Self { n_modes, matrix: m })
    }
}

fn check_mode(n_modes: usize, mode: usize) -> Result<()> {
    if mode >= n_modes {
        return Err(GaussError::BadModeIndex {
            index: mode,
            n_modes,
        });
    }
    Ok(())
}

/// Balanced beam splitter on modes `i` and `j`, identity elsewhere.
pub fn beam_splitter(
    n_modes: usize,
    i: usize,
    j: usize,
    variant: BsVariant,
) -> Result<SymplecticTransform> {
    check_mode(n_modes, i)?;
    check_mode(n_modes, j)?;
    if i == j {
        return Err(GaussError::BadModeSelection);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (ii, ij, ji, jj) = match variant {
        BsVariant::Plus => (h, h, h, -h),
        BsVariant::Minus => (h, -h, h, h),
    };
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for q in 0..2 {
        let (a, b) = (2 * i + q, 2 * j + q);
        m[(a, a)] = ii;
        m[(a, b)] = ij;
        m[(b, a)] = ji;
        m[(b, b)] = jj;
    }
    Ok(SymplecticTransform { n_modes, matrix: m })
}

/// `γ → SγSᵀ`, `d → Sd`.
pub fn apply_symplectic(state: &GaussianState, s: &SymplecticTransform) -> Result<GaussianState> {
    if state.n_modes() != s.n_modes {
        return Err(GaussError::DimensionMismatch {
            expected: s.n_modes,
            found: state.n_modes(),
        });
    }
    let cm = &s.matrix * state.cm().matrix() * s.matrix.transpose();
    let cm = (&cm + cm.transpose()) * 0.5;
    let d = &s.matrix * state.displacement();
    GaussianState::new(CovarianceMatrix::trusted(cm), d)
}

/// Inserts a vacuum mode so that it becomes mode `position`.
pub fn embed_vacuum(state: &GaussianState, position: usize) -> Result<GaussianState> {
    let n = state.n_modes();
    if position > n {
        return Err(GaussError::BadModeIndex {
            index: position,
            n_modes: n + 1,
        });
    }
    // old quadrature index -> new quadrature index
    let shift = |k: usize| if k / 2 >= position { k + 2 } else { k };
    let dim = 2 * (n + 1);
    let old = state.cm().matrix();
    let mut cm = DMatrix::zeros(dim, dim);
    for i in 0..2 * n {
        for j in 0..2 * n {
            cm[(shift(i), shift(j))] = old[(i, j)];
        }
    }
    cm[(2 * position, 2 * position)] = 1.0;
    cm[(2 * position + 1, 2 * position + 1)] = 1.0;
    let mut d = DVector::zeros(dim);
    for i in 0..2 * n {
        d[shift(i)] = state.displacement()[i];
    }
    GaussianState::new(CovarianceMatrix::trusted(cm), d)
}

/// What is measured on a single mode.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementKind {
    HomodyneX,
    HomodyneP,
    /// Projection onto a pure or mixed Gaussian state with this 2×2 CM.
    General(CovarianceMatrix),
}

impl MeasurementKind {
    /// General-dyne measurement with a validated 2×2 seed CM.
    pub fn general(seed: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = seed.shape();
        if (rows, cols) != (2, 2) {
            return Err(GaussError::BadShape { rows, cols });
        }
        Ok(Self::General(validate_cm(seed)?))
    }

    /// Pure seed `R(θ) diag(t, 1/t) R(θ)ᵀ`.
    ///
    /// `t → 0` at `θ = 0` approaches [`MeasurementKind::HomodyneX`], `t → ∞`
    /// approaches [`MeasurementKind::HomodyneP`].
    pub fn rotated_squeezed(theta: f64, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(GaussError::InvalidParams(format!(
                "seed squeezing {t} must be positive"
            )));
        }
        let (s, c) = theta.sin_cos();
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![t, 1.0 / t]));
        let seed = &rot * diag * rot.transpose();
        let seed = (&seed + seed.transpose()) * 0.5;
        Ok(Self::General(CovarianceMatrix::trusted(seed)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSpec {
    pub mode: usize,
    pub kind: MeasurementKind,
}

impl MeasurementSpec {
    pub fn new(mode: usize, kind: MeasurementKind) -> Self {
        Self { mode, kind }
    }

    pub fn homodyne_x(mode: usize) -> Self {
        Self::new(mode, MeasurementKind::HomodyneX)
    }

    pub fn homodyne_p(mode: usize) -> Self {
        Self::new(mode, MeasurementKind::HomodyneP)
    }
}

/// Conditional state of the unmeasured modes after measuring `spec.mode`.
///
/// With the CM split into the kept block `A`, the measured block `B` and the
/// cross block `C`, a general-dyne measurement with seed `γ_m` leaves
/// `A - C (B + γ_m)⁻¹ Cᵀ`; a homodyne of quadrature `Π` leaves
/// `A - C (ΠBΠ)⁺ Cᵀ`. The conditional CM does not depend on the outcome.
/// The returned displacement is the outcome-averaged one, i.e. the prior
/// mean of the kept modes.
pub fn condition_on_measurement(
    state: &GaussianState,
    spec: &MeasurementSpec,
) -> Result<GaussianState> {
    let n = state.n_modes();
    check_mode(n, spec.mode)?;
    if n < 2 {
        return Err(GaussError::InvalidParams(
            "cannot condition a single-mode state".into(),
        ));
    }
    let kept: Vec<usize> = (0..n).filter(|&k| k != spec.mode).collect();
    let kept_idx: Vec<usize> = kept.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
    let g = state.cm().matrix();
    let mm = [2 * spec.mode, 2 * spec.mode + 1];

    let a = DMatrix::from_fn(kept_idx.len(), kept_idx.len(), |i, j| {
        g[(kept_idx[i], kept_idx[j])]
    });
    let b = DMatrix::from_fn(2, 2, |i, j| g[(mm[i], mm[j])]);
    let c = DMatrix::from_fn(kept_idx.len(), 2, |i, j| g[(kept_idx[i], mm[j])]);

    let gain = match &spec.kind {
        MeasurementKind::General(seed) => {
            let total = &b + seed.matrix();
            let sv = total.singular_values();
            if sv.min() <= PINV_CUTOFF * sv.max().max(1.0) {
                return Err(GaussError::SingularConditioning);
            }
            total
                .try_inverse()
                .ok_or(GaussError::SingularConditioning)?
        }
        MeasurementKind::HomodyneX | MeasurementKind::HomodyneP => {
            let keep = usize::from(spec.kind == MeasurementKind::HomodyneP);
            let mut projected = DMatrix::zeros(2, 2);
            projected[(keep, keep)] = b[(keep, keep)];
            projected
                .pseudo_inverse(PINV_CUTOFF)
                .map_err(|e| GaussError::NumericalFailure(e.to_string()))?
        }
    };

    let cond = &a - &c * gain * c.transpose();
    let cond = (&cond + cond.transpose()) * 0.5;
    let d = DVector::from_iterator(
        kept_idx.len(),
        kept_idx.iter().map(|&i| state.displacement()[i]),
    );
    GaussianState::new(CovarianceMatrix::trusted(cond), d)
}
