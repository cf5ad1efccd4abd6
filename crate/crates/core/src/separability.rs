//! PPT-based separability tests for two- and three-mode Gaussian states.
//!
//! Three-mode splittings `X|(YZ)` are decided by the sign of
//! `Σ_x = I₃ - I₂ + I₁ - 1`, built from the symplectic invariants of the
//! state transposed on `X`. Two-mode pairs use the lower symplectic
//! eigenvalue `μ` of the partial transpose.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GaussError, Result};
use crate::gaussian_ops::{condition_on_measurement, MeasurementKind, MeasurementSpec};
use crate::phase_space::{
    char_poly_invariants, CovarianceMatrix, GaussianState, SymplecticForm, BOUNDARY_BAND,
};

/// Mode names used in labels, in quadrature order.
pub const MODE_LABELS: [&str; 3] = ["A", "A′", "B"];

/// Tolerance for the bisymmetry precondition of [`localizable_mu`].
pub const BISYMMETRY_TOL: f64 = 1e-8;
/// Slack on a negative `Δ² - 4 det σ` before it is treated as an error.
pub const DISCRIMINANT_TOL: f64 = 1e-9;

/// `"X|(YZ)"` for mode `x` of a three-mode system.
pub fn splitting_label(x: usize) -> String {
    let rest: String = (0..3).filter(|&k| k != x).map(|k| MODE_LABELS[k]).collect();
    format!("{}|({})", MODE_LABELS[x], rest)
}

/// `"X|Y"` for a pair of modes.
pub fn pair_label(i: usize, j: usize) -> String {
    format!("{}|{}", MODE_LABELS[i], MODE_LABELS[j])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingVerdict {
    pub splitting: String,
    pub sigma: f64,
    pub entangled: bool,
    pub boundary: bool,
}

impl SplittingVerdict {
    fn from_sigma(splitting: String, sigma: f64) -> Self {
        Self {
            splitting,
            sigma,
            entangled: sigma < -BOUNDARY_BAND,
            boundary: sigma.abs() <= BOUNDARY_BAND,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementMetrics {
    /// Lower symplectic eigenvalue of the partial transpose.
    pub mu: f64,
    pub log_negativity: f64,
    /// `det A + det B - 2 det C`.
    pub delta_tilde: f64,
    /// `det σ - Δ̃ + 1`, negative for entangled states.
    pub ppt_condition_value: f64,
}

impl EntanglementMetrics {
    pub fn entangled(&self) -> bool {
        self.mu < 1.0 - BOUNDARY_BAND
    }

    pub fn boundary(&self) -> bool {
        (self.mu - 1.0).abs() <= BOUNDARY_BAND
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub pair: String,
    #[serde(flatten)]
    pub metrics: EntanglementMetrics,
    pub entangled: bool,
}

/// Separability class of a three-mode state as far as PPT can tell.
///
/// Three-mode biseparable and fully separable states are not told apart;
/// both land in [`SeparabilityClass::PptAllSplittings`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparabilityClass {
    FullyInseparable,
    OneModeBiseparable,
    TwoModeBiseparable,
    PptAllSplittings,
}

impl SeparabilityClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::FullyInseparable => "fully-inseparable",
            Self::OneModeBiseparable => "one-mode-biseparable",
            Self::TwoModeBiseparable => "two-mode-biseparable",
            Self::PptAllSplittings => "ppt-all-splittings",
        }
    }
}

impl std::fmt::Display for SeparabilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub verdicts: Vec<SplittingVerdict>,
    pub pairwise: Vec<PairMetrics>,
    #[serde(rename = "class")]
    pub class_label: SeparabilityClass,
    /// The one separable splitting of a one-mode biseparable state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separable_splitting: Option<String>,
    /// The one entangled splitting of a two-mode biseparable state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entangled_splitting: Option<String>,
}

impl SeparabilityReport {
    pub fn verdict(&self, mode: usize) -> &SplittingVerdict {
        &self.verdicts[mode]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn require_modes(cm: &CovarianceMatrix, n: usize) -> Result<()> {
    if cm.n_modes() != n {
        return Err(GaussError::DimensionMismatch {
            expected: 2 * n,
            found: cm.dim(),
        });
    }
    Ok(())
}

/// `Σ_x` test of mode `mode` against the other two.
pub fn sigma_x(cm: &CovarianceMatrix, mode: usize) -> Result<SplittingVerdict> {
    require_modes(cm, 3)?;
    let pt = cm.partial_transpose(&[mode])?;
    let sigma = char_poly_invariants(&pt)?.sigma();
    Ok(SplittingVerdict::from_sigma(splitting_label(mode), sigma))
}

fn det2(m: &DMatrix<f64>, r: usize, c: usize) -> f64 {
    m[(r, c)] * m[(r + 1, c + 1)] - m[(r, c + 1)] * m[(r + 1, c)]
}

/// Two-mode PPT quantities.
///
/// `μ = sqrt((Δ̃ - sqrt(Δ̃² - 4 det σ)) / 2)` with `Δ̃ = det A + det B - 2 det C`.
/// `Δ̃² - 4 det σ` cancels badly near `μ = 1`, so the square root is taken of
/// the equal quantity `tr[(N - Δ̃/2)²]`, `N = -(Ωσ̃)²` with `σ̃` the partial
/// transpose, whose eigenvalues are the squared PT symplectic eigenvalues.
/// The naive form is still used to reject unphysical input.
pub fn two_mode_condition(cm: &CovarianceMatrix) -> Result<EntanglementMetrics> {
    require_modes(cm, 2)?;
    let m = cm.matrix();
    let delta_tilde = det2(m, 0, 0) + det2(m, 2, 2) - 2.0 * det2(m, 0, 2);
    let det = m.determinant();
    let naive = delta_tilde * delta_tilde - 4.0 * det;
    if naive < -DISCRIMINANT_TOL {
        return Err(GaussError::ComplexEigenvalue {
            discriminant: naive,
        });
    }

    let omega = SymplecticForm::new(2).matrix();
    let w = omega * cm.partial_transpose(&[1])?;
    let n = -(&w * &w);
    let centered = n - DMatrix::identity(4, 4) * (0.5 * delta_tilde);
    let disc = (&centered * &centered).trace().max(0.0);

    let mu = (0.5 * (delta_tilde - disc.sqrt())).max(0.0).sqrt();
    Ok(EntanglementMetrics {
        mu,
        log_negativity: log_negativity(mu),
        delta_tilde,
        ppt_condition_value: det - delta_tilde + 1.0,
    })
}

/// `max(0, -log₂ μ)`.
pub fn log_negativity(mu: f64) -> f64 {
    (-mu.log2()).max(0.0)
}

/// Runs all three `Σ_x` tests and all three pairwise tests.
pub fn classify_three_mode(cm: &CovarianceMatrix) -> Result<SeparabilityReport> {
    require_modes(cm, 3)?;
    let verdicts = (0..3).map(|k| sigma_x(cm, k)).collect::<Result<Vec<_>>>()?;
    let pairwise = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| {
            let metrics = two_mode_condition(&cm.reduce(&[i, j])?)?;
            Ok(PairMetrics {
                pair: pair_label(i, j),
                entangled: metrics.entangled(),
                metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let entangled: Vec<usize> = (0..3).filter(|&k| verdicts[k].entangled).collect();
    let (class_label, separable_splitting, entangled_splitting) = match entangled.len() {
        3 => (SeparabilityClass::FullyInseparable, None, None),
        2 => {
            let sep = (0..3)
                .find(|k| !entangled.contains(k))
                .expect("one splitting left");
            (
                SeparabilityClass::OneModeBiseparable,
                Some(splitting_label(sep)),
                None,
            )
        }
        1 => (
            SeparabilityClass::TwoModeBiseparable,
            None,
            Some(splitting_label(entangled[0])),
        ),
        _ => (SeparabilityClass::PptAllSplittings, None, None),
    };
    Ok(SeparabilityReport {
        verdicts,
        pairwise,
        class_label,
        separable_splitting,
        entangled_splitting,
    })
}

fn check_bisymmetric(cm: &CovarianceMatrix, measured: usize) -> Result<()> {
    let kept: Vec<usize> = (0..3).filter(|&k| k != measured).collect();
    let straight = cm.reduce(&[kept[0], kept[1], measured])?;
    let swapped = cm.reduce(&[kept[1], kept[0], measured])?;
    let deviation = (straight.matrix() - swapped.matrix()).amax();
    if deviation > BISYMMETRY_TOL {
        return Err(GaussError::NotBisymmetric { deviation });
    }
    Ok(())
}

/// Lower PT symplectic eigenvalue of the two modes left after an
/// `x`-homodyne on `measured`.
///
/// For states symmetric under exchange of the two unmeasured modes this
/// measurement is the optimal Gaussian one, so the result is the minimum
/// over all Gaussian measurements.
pub fn localizable_mu(cm: &CovarianceMatrix, measured: usize) -> Result<f64> {
    require_modes(cm, 3)?;
    if measured >= 3 {
        return Err(GaussError::BadModeIndex {
            index: measured,
            n_modes: 3,
        });
    }
    check_bisymmetric(cm, measured)?;
    conditioned_mu(cm, &MeasurementSpec::homodyne_x(measured))
}

fn conditioned_mu(cm: &CovarianceMatrix, spec: &MeasurementSpec) -> Result<f64> {
    let state = GaussianState::centered(cm.clone());
    let cond = condition_on_measurement(&state, spec)?;
    Ok(two_mode_condition(cond.cm())?.mu)
}

/// Seeds `R(θ) diag(t, 1/t) R(θ)ᵀ` with `θ` uniform on `[0, π)` and `t`
/// log-spaced on `[t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub n_theta: usize,
    pub n_t: usize,
    pub t_min: f64,
    pub t_max: f64,
}

impl ScanGrid {
    pub fn square(n: usize) -> Self {
        Self {
            n_theta: n,
            n_t: n,
            t_min: 1e-6,
            t_max: 1e6,
        }
    }

    pub fn theta(&self, i: usize) -> f64 {
        std::f64::consts::PI * i as f64 / self.n_theta as f64
    }

    pub fn t(&self, j: usize) -> f64 {
        if self.n_t == 1 {
            return self.t_min;
        }
        let (lo, hi) = (self.t_min.ln(), self.t_max.ln());
        (lo + (hi - lo) * j as f64 / (self.n_t - 1) as f64).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanMinimum {
    pub mu: f64,
    pub theta: f64,
    pub t: f64,
}

/// Brute-force minimum of the conditional `μ` over a grid of pure
/// general-dyne measurements on `measured`.
pub fn measurement_scan_oracle(
    cm: &CovarianceMatrix,
    measured: usize,
    grid: &ScanGrid,
) -> Result<ScanMinimum> {
    require_modes(cm, 3)?;
    if grid.n_theta == 0 || grid.n_t == 0 || !(grid.t_min > 0.0 && grid.t_min <= grid.t_max) {
        return Err(GaussError::InvalidParams(
            "scan grid must be nonempty with 0 < t_min <= t_max".into(),
        ));
    }
    let points: Vec<(usize, usize)> = (0..grid.n_theta)
        .flat_map(|i| (0..grid.n_t).map(move |j| (i, j)))
        .collect();
    let values = points
        .par_iter()
        .map(|&(i, j)| {
            let kind = MeasurementKind::rotated_squeezed(grid.theta(i), grid.t(j))?;
            conditioned_mu(cm, &MeasurementSpec::new(measured, kind))
        })
        .collect::<Result<Vec<f64>>>()?;
    // first minimum in grid order, independent of scheduling
    let (best, &mu) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .expect("grid is nonempty");
    let (i, j) = points[best];
    Ok(ScanMinimum {
        mu,
        theta: grid.theta(i),
        t: grid.t(j),
    })
}
