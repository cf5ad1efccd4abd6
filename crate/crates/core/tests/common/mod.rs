#![allow(dead_code)]

use gaussent::{beam_splitter, BsVariant, CovarianceMatrix, GaussianState, SymplecticTransform};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Product of random phase rotations, squeezers and balanced beam splitters.
/// Balanced splitters interleaved with phases generate every passive
/// transform, so with squeezers this reaches a generic symplectic matrix.
pub fn random_symplectic(
    n_modes: usize,
    layers: usize,
    max_squeeze: f64,
    rng: &mut impl Rng,
) -> SymplecticTransform {
    let mut s = SymplecticTransform::identity(n_modes);
    for _ in 0..layers {
        for mode in 0..n_modes {
            let rot = SymplecticTransform::phase_rotation(
                n_modes,
                mode,
                rng.random_range(0.0..std::f64::consts::TAU),
            )
            .unwrap();
            let sq = SymplecticTransform::squeezer(
                n_modes,
                mode,
                rng.random_range(-max_squeeze..max_squeeze),
            )
            .unwrap();
            s = sq.after(&rot.after(&s).unwrap()).unwrap();
        }
        if n_modes > 1 {
            let i = rng.random_range(0..n_modes);
            let j = (i + rng.random_range(1..n_modes)) % n_modes;
            let variant = if rng.random_bool(0.5) {
                BsVariant::Plus
            } else {
                BsVariant::Minus
            };
            s = beam_splitter(n_modes, i, j, variant)
                .unwrap()
                .after(&s)
                .unwrap();
        }
    }
    s
}

/// `S (⊕ ν_k 1) Sᵀ` with thermal factors `ν_k ∈ [1, 1 + max_excess]`.
pub fn random_physical_cm(n_modes: usize, max_excess: f64, rng: &mut impl Rng) -> CovarianceMatrix {
    let s = random_symplectic(n_modes, 3, 0.8, rng);
    let mut thermal = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        let nu = 1.0 + rng.random_range(0.0..max_excess);
        thermal[(2 * k, 2 * k)] = nu;
        thermal[(2 * k + 1, 2 * k + 1)] = nu;
    }
    let m = s.matrix() * thermal * s.matrix().transpose();
    CovarianceMatrix::new((&m + m.transpose()) * 0.5).unwrap()
}

pub fn random_pure_state(n_modes: usize, rng: &mut impl Rng) -> GaussianState {
    let s = random_symplectic(n_modes, 3, 0.8, rng);
    gaussent::apply_symplectic(&GaussianState::vacuum(n_modes), &s).unwrap()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}
