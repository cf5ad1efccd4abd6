//! The three-mode entanglement-sharing protocol.
//!
//! Modes are ordered `(A, A′, B)`. A position-squeezed mode `A` and a vacuum
//! mode `B` receive anti-correlated classical position kicks, giving a
//! separable two-mode state. Splitting `A` on a balanced beam splitter with
//! vacuum `A′` yields a state with no pairwise entanglement that is entangled
//! across `A|(A′B)` and `A′|(AB)` only. Mixing `B` with either `A′` or `A`
//! on a second beam splitter then makes the state fully inseparable.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GaussError, Result};
use crate::gaussian_ops::{apply_symplectic, beam_splitter, embed_vacuum, BsVariant};
use crate::phase_space::{CovarianceMatrix, GaussianState};
use crate::separability::{
    classify_three_mode, localizable_mu, two_mode_condition, SeparabilityReport,
};

pub const MODE_A: usize = 0;
pub const MODE_A_PRIME: usize = 1;
pub const MODE_B: usize = 2;

/// Bracket used when thresholds are located by bisection.
pub const BISECTION_BRACKET: (f64, f64) = (0.0, 5.0);
/// Bracket width at which bisection stops.
pub const BISECTION_WIDTH: f64 = 1e-10;
/// Slack allowed when clamping the `arccos` argument of the cubic root.
pub const ARCCOS_SLACK: f64 = 1e-12;

/// Squeezing `r` and noise `ε`, both dimensionless and nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub r: f64,
    pub epsilon: f64,
}

impl ProtocolParams {
    pub fn new(r: f64, epsilon: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(GaussError::InvalidParams(format!(
                "squeezing r = {r} must be finite and >= 0"
            )));
        }
        check_epsilon(epsilon)?;
        Ok(Self { r, epsilon })
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(GaussError::InvalidParams(format!(
            "noise epsilon = {epsilon} must be finite and >= 0"
        )));
    }
    Ok(())
}

/// A diagonal 2×2 block `diag(x, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagBlock {
    pub x: f64,
    pub p: f64,
}

impl DiagBlock {
    pub const fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    pub fn det(&self) -> f64 {
        self.x * self.p
    }

    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.p + o.p)
    }

    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.p - o.p)
    }

    fn scale(self, s: f64) -> Self {
        Self::new(self.x * s, self.p * s)
    }
}

/// The diagonal blocks `α, β, τ, δ` of the shared three-mode CM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockSet {
    pub alpha: DiagBlock,
    pub beta: DiagBlock,
    pub tau: DiagBlock,
    pub delta: DiagBlock,
}

impl BlockSet {
    pub fn new(params: ProtocolParams) -> Self {
        let e = (-2.0 * params.r).exp();
        let noise = e * (2.0 * params.epsilon).exp_m1();
        let e2r = (2.0 * params.r).exp();
        let kick = (-2.0 * params.r).exp_m1();
        Self {
            alpha: DiagBlock::new((2.0 + noise) / 2.0, (e2r + 1.0) / 2.0),
            beta: DiagBlock::new(2.0 - e, 1.0),
            tau: DiagBlock::new(kick * std::f64::consts::FRAC_1_SQRT_2, 0.0),
            delta: DiagBlock::new(noise / 2.0, (e2r - 1.0) / 2.0),
        }
    }
}

/// Lays out a symmetric block matrix from its upper triangle of diagonal blocks.
fn assemble(upper: &[&[DiagBlock]]) -> DMatrix<f64> {
    let n = upper.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for (k, block) in upper[i].iter().enumerate() {
            let j = i + k;
            for (q, v) in [block.x, block.p].into_iter().enumerate() {
                m[(2 * i + q, 2 * j + q)] = v;
                m[(2 * j + q, 2 * i + q)] = v;
            }
        }
    }
    m
}

/// Two-mode `(A, B)` state before splitting.
pub fn initial_cm(params: ProtocolParams) -> GaussianState {
    let e = (-2.0 * params.r).exp();
    let a = DiagBlock::new(
        1.0 + e * (2.0 * params.epsilon).exp_m1(),
        (2.0 * params.r).exp(),
    );
    let c = DiagBlock::new((-2.0 * params.r).exp_m1(), 0.0);
    let b = DiagBlock::new(2.0 - e, 1.0);
    GaussianState::centered(CovarianceMatrix::trusted(assemble(&[&[a, c], &[b]])))
}

/// Shared `(A, A′, B)` state after Alice's beam splitter.
pub fn shared_cm(params: ProtocolParams) -> (GaussianState, BlockSet) {
    let s = BlockSet::new(params);
    let m = assemble(&[&[s.alpha, s.delta, s.tau], &[s.alpha, s.tau], &[s.beta]]);
    (GaussianState::centered(CovarianceMatrix::trusted(m)), s)
}

/// Which split mode travels to Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// `A′` is sent and mixed with `B`; Alice keeps `A`.
    ViaAPrime,
    /// `A` is sent and mixed with `B`; Alice keeps `A′`.
    ViaA,
}

/// Final three-mode state after Bob's beam splitter.
pub fn final_cm(params: ProtocolParams, route: Route) -> GaussianState {
    let s = BlockSet::new(params);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b, t, d) = (s.alpha, s.beta, s.tau, s.delta);
    let bright = a.add(b).add(t.scale(2.0)).scale(0.5);
    let dark = a.add(b).sub(t.scale(2.0)).scale(0.5);
    let m = match route {
        Route::ViaAPrime => assemble(&[
            &[a, t.sub(d).scale(h), t.add(d).scale(h)],
            &[dark, b.sub(a).scale(0.5)],
            &[bright],
        ]),
        Route::ViaA => assemble(&[
            &[dark, d.sub(t).scale(h), a.sub(b).scale(0.5)],
            &[a, d.add(t).scale(h)],
            &[bright],
        ]),
    };
    GaussianState::centered(CovarianceMatrix::trusted(m))
}

/// Two-mode state Alice and Bob end up with (identical for both routes).
pub fn reduced_pair_cm(params: ProtocolParams) -> CovarianceMatrix {
    let s = BlockSet::new(params);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bright = s.alpha.add(s.beta).add(s.tau.scale(2.0)).scale(0.5);
    CovarianceMatrix::trusted(assemble(&[
        &[s.alpha, s.delta.add(s.tau).scale(h)],
        &[bright],
    ]))
}

/// Left side of the two-mode entanglement condition written with the block
/// structure of the shared state: `det γ̃ - Δ + 1`, where
/// `Δ = det α + det(α + β + 2τ)/4 - det(δ + τ)`.
pub fn pair_condition_from_blocks(params: ProtocolParams) -> f64 {
    let s = BlockSet::new(params);
    let delta = s.alpha.det() + 0.25 * s.alpha.add(s.beta).add(s.tau.scale(2.0)).det()
        - s.delta.add(s.tau).det();
    reduced_pair_cm(params).determinant() - delta + 1.0
}

/// Shared state built by embedding `A′` and applying the `A`–`A′` beam splitter.
pub fn shared_via_pipeline(params: ProtocolParams) -> Result<GaussianState> {
    let embedded = embed_vacuum(&initial_cm(params), MODE_A_PRIME)?;
    apply_symplectic(
        &embedded,
        &beam_splitter(3, MODE_A, MODE_A_PRIME, BsVariant::Plus)?,
    )
}

/// Final state built by applying Bob's beam splitter to the pipeline shared state.
pub fn final_via_pipeline(params: ProtocolParams, route: Route) -> Result<GaussianState> {
    let shared = shared_via_pipeline(params)?;
    let bs = match route {
        Route::ViaAPrime => beam_splitter(3, MODE_B, MODE_A_PRIME, BsVariant::Plus)?,
        Route::ViaA => beam_splitter(3, MODE_A, MODE_B, BsVariant::Minus)?,
    };
    apply_symplectic(&shared, &bs)
}

/// Squeezing above which the Alice–Bob pair is entangled.
///
/// Evaluated with `e^{2ε}` factored out of the logarithm so large `ε` does
/// not overflow; clamped at zero.
pub fn threshold_r_e(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let k = 8.0 * std::f64::consts::SQRT_2 - 1.0;
    let inv_e = (-2.0 * epsilon).exp();
    let a = 11.0 + (k - 12.0) * inv_e;
    let ratio = (a + (a * a + 4.0 * k * inv_e).sqrt()) / (2.0 * k);
    Ok((epsilon + 0.5 * ratio.ln()).max(0.0))
}

/// Squeezing above which an `x`-homodyne on `B` localizes `A`–`A′` entanglement.
pub fn threshold_r_m(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    Ok(epsilon + 0.5 * (-(-2.0 * epsilon).exp_m1()).sqrt().ln_1p())
}

/// Coefficients `(p, q)` of the depressed cubic whose largest root is `e^{2 r_l}`.
pub fn cubic_coefficients(epsilon: f64) -> (f64, f64) {
    let e2 = (2.0 * epsilon).exp();
    (1.0 / 6.0 - e2, 5.0 / 54.0 + e2 / 6.0)
}

/// Squeezing at which the two branches of the localizable eigenvalue cross.
pub fn threshold_r_l(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let (p, q) = cubic_coefficients(epsilon);
    let mut arg = -q / 2.0 * (-27.0 / (p * p * p)).sqrt();
    if arg.abs() > 1.0 {
        if arg.abs() > 1.0 + ARCCOS_SLACK {
            return Err(GaussError::DomainError { argument: arg });
        }
        arg = arg.clamp(-1.0, 1.0);
    }
    let root = 1.0 / 3.0 + 2.0 * (-p / 3.0).sqrt() * (arg.acos() / 3.0).cos();
    Ok(0.5 * root.ln())
}

/// Second branch of the localizable eigenvalue (the `x`-homodyne conditional state).
pub fn mu_m_homodyne_branch(params: ProtocolParams) -> f64 {
    let e = (-2.0 * params.r).exp();
    let kick = (-2.0 * params.r).exp_m1();
    (1.0 + e * (2.0 * params.epsilon).exp_m1() - kick * kick / (2.0 - e)).sqrt()
}

/// Minimal PT lower symplectic eigenvalue of `A`–`A′` over Gaussian
/// measurements on `B`: `e^r` below `r_l`, the homodyne branch above.
pub fn mu_m(params: ProtocolParams) -> Result<f64> {
    let r_l = threshold_r_l(params.epsilon)?;
    Ok(if params.r < r_l {
        params.r.exp()
    } else {
        mu_m_homodyne_branch(params)
    })
}

/// Bisection for the last point where `f` is nonnegative before it turns
/// negative at `hi`.
///
/// `f(lo)` is never evaluated: the thresholds of interest can sit exactly at
/// `lo`, where `f` is zero up to rounding.
pub fn bisect<F>(mut lo: f64, mut hi: f64, width: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if f(hi)? >= 0.0 {
        return Err(GaussError::NumericalFailure(format!(
            "no sign change in [{lo}, {hi}]"
        )));
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `r_e` located as the root of `μ(reduced pair) - 1` through the generic
/// two-mode machinery.
pub fn r_e_by_bisection(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let (lo, hi) = BISECTION_BRACKET;
    bisect(lo, hi, BISECTION_WIDTH, |r| {
        Ok(two_mode_condition(&reduced_pair_cm(ProtocolParams::new(r, epsilon)?))?.mu - 1.0)
    })
}

/// `r_m` located as the root of the numerically conditioned `μ - 1`.
pub fn r_m_by_bisection(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let (lo, hi) = BISECTION_BRACKET;
    bisect(lo, hi, BISECTION_WIDTH, |r| {
        let (shared, _) = shared_cm(ProtocolParams::new(r, epsilon)?);
        Ok(localizable_mu(shared.cm(), MODE_B)? - 1.0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub epsilon: f64,
    pub r_l: f64,
    pub r_e: f64,
    pub r_m: f64,
    pub gap: f64,
    pub p: f64,
    pub q: f64,
}

pub fn threshold_report(epsilon: f64) -> Result<ThresholdReport> {
    let r_e = threshold_r_e(epsilon)?;
    let r_m = threshold_r_m(epsilon)?;
    let (p, q) = cubic_coefficients(epsilon);
    Ok(ThresholdReport {
        epsilon,
        r_l: threshold_r_l(epsilon)?,
        r_e,
        r_m,
        gap: r_m - r_e,
        p,
        q,
    })
}

/// Threshold reports over a grid of `ε`, in input order.
pub fn gap_profile(epsilon_grid: &[f64]) -> Result<Vec<ThresholdReport>> {
    epsilon_grid
        .par_iter()
        .map(|&e| threshold_report(e))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Initial,
    Shared,
    FinalViaAPrime,
    FinalViaA,
}

impl Stage {
    pub const ALL: [Stage; 4] = [
        Stage::Initial,
        Stage::Shared,
        Stage::FinalViaAPrime,
        Stage::FinalViaA,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Initial => "initial",
            Stage::Shared => "shared",
            Stage::FinalViaAPrime => "final-via-a-prime",
            Stage::FinalViaA => "final-via-a",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = GaussError;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| GaussError::InvalidParams(format!("unknown stage '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageState {
    pub stage: Stage,
    pub state: GaussianState,
    pub report: SeparabilityReport,
}

/// Three-mode state at a protocol stage plus its separability report.
///
/// The initial stage is the two-mode state with `A′` still in vacuum,
/// i.e. the product of the initial CM with a vacuum in slot `A′`.
pub fn stage_state(params: ProtocolParams, stage: Stage) -> Result<StageState> {
    let state = match stage {
        Stage::Initial => embed_vacuum(&initial_cm(params), MODE_A_PRIME)?,
        Stage::Shared => shared_cm(params).0,
        Stage::FinalViaAPrime => final_cm(params, Route::ViaAPrime),
        Stage::FinalViaA => final_cm(params, Route::ViaA),
    };
    let report = classify_three_mode(state.cm())?;
    Ok(StageState {
        stage,
        state,
        report,
    })
}
