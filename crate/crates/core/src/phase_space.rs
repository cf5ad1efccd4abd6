//! Covariance matrices, the symplectic form and the spectral tools built on them.
//!
//! Quadratures are ordered mode by mode, `(x1, p1, x2, p2, ...)`, and the
//! vacuum covariance matrix is the identity. A classical displacement of
//! variance `v` therefore adds `2v` to the matching covariance entry.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GaussError, Result};

/// Largest tolerated asymmetry before a matrix is rejected.
pub const TAU_SYM: f64 = 1e-10;
/// Slack on the physicality (and classicality) tests.
pub const TAU_PSD: f64 = 1e-9;
/// Width of the band around a threshold that is reported as a boundary case.
pub const BOUNDARY_BAND: f64 = 1e-12;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// Block-diagonal symplectic form with `[[0, 1], [-1, 0]]` blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticForm {
    n_modes: usize,
}

impl SymplecticForm {
    pub fn new(n_modes: usize) -> Self {
        Self { n_modes }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let dim = 2 * self.n_modes;
        let mut omega = DMatrix::zeros(dim, dim);
        for k in 0..self.n_modes {
            omega[(2 * k, 2 * k + 1)] = 1.0;
            omega[(2 * k + 1, 2 * k)] = -1.0;
        }
        omega
    }
}

/// A validated, physical covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n_modes: usize,
    matrix: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validates `m` (see [`validate_cm`]).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        validate_cm(m)
    }

    /// Vacuum of `n_modes` modes.
    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            n_modes,
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Builds from a row-major slice and validates.
    pub fn from_row_slice(n_modes: usize, entries: &[f64]) -> Result<Self> {
        let dim = 2 * n_modes;
        if entries.len() != dim * dim {
            return Err(GaussError::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        validate_cm(DMatrix::from_row_slice(dim, dim, entries))
    }

    /// Wraps a matrix already known to be a physical CM (closed forms, exact
    /// symplectic images of physical states).
    pub(crate) fn trusted(matrix: DMatrix<f64>) -> Self {
        debug_assert!(matrix.nrows() == matrix.ncols() && matrix.nrows().is_multiple_of(2));
        Self {
            n_modes: matrix.nrows() / 2,
            matrix,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        2 * self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    /// Symplectic spectrum, ascending.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(&self.matrix)
    }

    pub fn partial_transpose(&self, modes: &[usize]) -> Result<DMatrix<f64>> {
        partial_transpose(&self.matrix, modes)
    }

    pub fn reduce(&self, modes: &[usize]) -> Result<CovarianceMatrix> {
        reduce(self, modes)
    }

    pub fn is_classical(&self) -> bool {
        is_classical(self)
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        row_major(&self.matrix)
    }

    /// Rows as nested vectors, handy for serialization.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        rows(&self.matrix)
    }
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub(crate) fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Covariance matrix plus first moments.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    cm: CovarianceMatrix,
    displacement: DVector<f64>,
}

impl GaussianState {
    pub fn new(cm: CovarianceMatrix, displacement: DVector<f64>) -> Result<Self> {
        if displacement.len() != cm.dim() {
            return Err(GaussError::DimensionMismatch {
                expected: cm.dim(),
                found: displacement.len(),
            });
        }
        Ok(Self { cm, displacement })
    }

    /// Zero-mean state with the given CM.
    pub fn centered(cm: CovarianceMatrix) -> Self {
        let dim = cm.dim();
        Self {
            cm,
            displacement: DVector::zeros(dim),
        }
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self::centered(CovarianceMatrix::vacuum(n_modes))
    }

    pub fn n_modes(&self) -> usize {
        self.cm.n_modes()
    }

    pub fn cm(&self) -> &CovarianceMatrix {
        &self.cm
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.displacement
    }

    /// Marginal state of the listed modes, in the given order.
    pub fn reduce(&self, modes: &[usize]) -> Result<GaussianState> {
        let cm = reduce(&self.cm, modes)?;
        let idx = quadrature_indices(self.n_modes(), modes)?;
        let displacement =
            DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.displacement[i]));
        Ok(GaussianState { cm, displacement })
    }

    /// Parses the JSON covariance-matrix file format.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: CmFile =
            serde_json::from_str(text).map_err(|e| GaussError::Format(e.to_string()))?;
        file.into_state()
    }

    pub fn to_json(&self) -> String {
        let file = CmFile {
            n_modes: self.n_modes(),
            cm: self.cm.to_row_major(),
            displacement: Some(self.displacement.iter().copied().collect()),
        };
        serde_json::to_string_pretty(&file).expect("plain numeric struct serializes")
    }
}

/// On-disk form: `{ "n_modes", "cm": row-major 2n*2n, "displacement"?: 2n }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CmFile {
    pub n_modes: usize,
    pub cm: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement: Option<Vec<f64>>,
}

impl CmFile {
    pub fn into_state(self) -> Result<GaussianState> {
        if self.n_modes == 0 {
            return Err(GaussError::Format("n_modes must be positive".into()));
        }
        let cm = CovarianceMatrix::from_row_slice(self.n_modes, &self.cm)?;
        match self.displacement {
            Some(d) => GaussianState::new(cm, DVector::from_vec(d)),
            None => Ok(GaussianState::centered(cm)),
        }
    }
}

/// Coefficients of `det(Ωγ - q·1) = q⁶ + i1·q⁴ + i2·q² + i3` for three modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantTriple {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
}

impl InvariantTriple {
    /// `i3 - i2 + i1 - 1`; negative means the transposed mode is entangled
    /// with the other two.
    pub fn sigma(&self) -> f64 {
        self.i3 - self.i2 + self.i1 - 1.0
    }

    /// Evaluates the characteristic polynomial at a (complex) point `q`.
    pub fn eval(&self, q: nalgebra::Complex<f64>) -> nalgebra::Complex<f64> {
        let q2 = q * q;
        q2 * q2 * q2 + q2 * q2 * self.i1 + q2 * self.i2 + self.i3
    }
}

fn check_shape(m: &DMatrix<f64>) -> Result<usize> {
    let (rows, cols) = m.shape();
    if rows != cols || rows == 0 || rows % 2 != 0 {
        return Err(GaussError::BadShape { rows, cols });
    }
    Ok(rows / 2)
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let scale = m.amax().max(1.0);
    let asym = max_asymmetry(m);
    if asym > TAU_SYM * scale {
        return Err(GaussError::NotSymmetric {
            max_asymmetry: asym,
        });
    }
    Ok(())
}

/// Checks shape, symmetry and physicality (`γ + iΩ ⪰ 0`), symmetrizing
/// round-off asymmetry below [`TAU_SYM`].
///
/// For an indefinite matrix the reported eigenvalue is the smallest ordinary
/// eigenvalue, since the symplectic spectrum is not meaningful there.
pub fn validate_cm(m: DMatrix<f64>) -> Result<CovarianceMatrix> {
    let n_modes = check_shape(&m)?;
    check_symmetric(&m)?;
    let sym = (&m + m.transpose()) * 0.5;

    if sym.clone().cholesky().is_none() {
        let smallest = sym.clone().symmetric_eigenvalues().min();
        return Err(GaussError::Unphysical {
            eigenvalue: smallest,
        });
    }
    let nu = symplectic_eigenvalues(&sym)?;
    if nu[0] < 1.0 - TAU_PSD {
        return Err(GaussError::Unphysical { eigenvalue: nu[0] });
    }
    Ok(CovarianceMatrix {
        n_modes,
        matrix: sym,
    })
}

/// Symplectic eigenvalues of a symmetric matrix, ascending, one per mode.
///
/// Positive-definite inputs (every physical CM and every partial transpose of
/// one) go through the Cholesky factor `γ = L Lᵀ`: `Ωγ` is similar to the
/// antisymmetric `LᵀΩL`, whose squared singular values are the eigenvalues of
/// `-(Ωγ)²`, so the problem reduces to a real symmetric eigensolve. Indefinite
/// inputs fall back to a real Schur decomposition of `Ωγ`.
pub fn symplectic_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n_modes = check_shape(m)?;
    check_symmetric(m)?;
    let omega = SymplecticForm::new(n_modes).matrix();

    let mut moduli: Vec<f64> = match m.clone().cholesky() {
        Some(chol) => {
            let l = chol.l();
            let a = l.transpose() * &omega * &l;
            let gram = a.transpose() * &a;
            let gram = (&gram + gram.transpose()) * 0.5;
            let eig = gram
                .try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITER)
                .ok_or_else(|| {
                    GaussError::NumericalFailure("symmetric eigensolver did not converge".into())
                })?;
            eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect()
        }
        None => {
            let schur = (&omega * m)
                .try_schur(EIGEN_EPS, EIGEN_MAX_ITER)
                .ok_or_else(|| {
                    GaussError::NumericalFailure("Schur decomposition did not converge".into())
                })?;
            schur
                .complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .collect()
        }
    };
    if moduli.iter().any(|v| !v.is_finite()) {
        return Err(GaussError::NumericalFailure(
            "non-finite symplectic eigenvalue".into(),
        ));
    }
    moduli.sort_by(f64::total_cmp);
    Ok(moduli
        .chunks(2)
        .map(|pair| 0.5 * (pair[0] + pair[1]))
        .collect())
}

fn check_modes(n_modes: usize, modes: &[usize]) -> Result<()> {
    if modes.is_empty() {
        return Err(GaussError::BadModeSelection);
    }
    for (k, &mode) in modes.iter().enumerate() {
        if mode >= n_modes {
            return Err(GaussError::BadModeIndex {
                index: mode,
                n_modes,
            });
        }
        if modes[..k].contains(&mode) {
            return Err(GaussError::BadModeSelection);
        }
    }
    Ok(())
}

fn quadrature_indices(n_modes: usize, modes: &[usize]) -> Result<Vec<usize>> {
    check_modes(n_modes, modes)?;
    Ok(modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect())
}

/// `Λ γ Λᵀ` with `Λ` flipping the momentum of every listed mode.
pub fn partial_transpose(m: &DMatrix<f64>, modes: &[usize]) -> Result<DMatrix<f64>> {
    let n_modes = check_shape(m)?;
    check_modes(n_modes, modes)?;
    let mut out = m.clone();
    for &mode in modes {
        let p = 2 * mode + 1;
        for k in 0..out.ncols() {
            out[(p, k)] = -out[(p, k)];
        }
        for k in 0..out.nrows() {
            out[(k, p)] = -out[(k, p)];
        }
    }
    Ok(out)
}

/// Sum of the principal `k`×`k` minors of `m` (the elementary symmetric
/// function `e_k` of its eigenvalues).
pub(crate) fn principal_minor_sum(m: &DMatrix<f64>, k: usize) -> f64 {
    fn walk(m: &DMatrix<f64>, k: usize, next: usize, subset: &mut Vec<usize>, total: &mut f64) {
        if subset.len() == k {
            let minor = DMatrix::from_fn(k, k, |i, j| m[(subset[i], subset[j])]);
            *total += minor.determinant();
            return;
        }
        let remaining = k - subset.len();
        for idx in next..=(m.nrows() - remaining) {
            subset.push(idx);
            walk(m, k, idx + 1, subset, total);
            subset.pop();
        }
    }

    if k == 0 {
        return 1.0;
    }
    if k > m.nrows() {
        return 0.0;
    }
    let mut total = 0.0;
    walk(m, k, 0, &mut Vec::with_capacity(k), &mut total);
    total
}

/// Symplectic invariants of a (partially transposed) three-mode matrix.
///
/// `det(M - q·1) = Σ_k (-q)^(6-k) e_k(M)`; for `M = Ωγ` with symmetric `γ`
/// the odd `e_k` vanish, leaving `i1 = e₂`, `i2 = e₄`, `i3 = e₆ = det γ`.
/// The vacuum gives `(q² + 1)³`, i.e. `(3, 3, 1)`.
pub fn char_poly_invariants(pt_cm: &DMatrix<f64>) -> Result<InvariantTriple> {
    let (rows, cols) = pt_cm.shape();
    if rows != 6 || cols != 6 {
        return Err(GaussError::BadShape { rows, cols });
    }
    let m = SymplecticForm::new(3).matrix() * pt_cm;
    Ok(InvariantTriple {
        i1: principal_minor_sum(&m, 2),
        i2: principal_minor_sum(&m, 4),
        i3: pt_cm.determinant(),
    })
}

/// Principal submatrix on the quadrature pairs of `modes`, in that order.
pub fn reduce(cm: &CovarianceMatrix, modes: &[usize]) -> Result<CovarianceMatrix> {
    let idx = quadrature_indices(cm.n_modes(), modes)?;
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| cm.matrix[(idx[i], idx[j])]);
    Ok(CovarianceMatrix::trusted(sub))
}

/// True when the normally ordered CM `γ - 1` is positive semidefinite.
pub fn is_classical(cm: &CovarianceMatrix) -> bool {
    let shifted = cm.matrix() - DMatrix::identity(cm.dim(), cm.dim());
    shifted.symmetric_eigenvalues().min() >= -TAU_PSD
}
