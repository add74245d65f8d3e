//! Seeded samplers for the property suites.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{sym_fn, symmetrize};
use crate::spd::{OrderInterval, SpdPoint, SymTangent};

pub type SuiteRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SuiteRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random symmetric matrix with entries of standard deviation `scale`.
pub fn sym_matrix(rng: &mut impl Rng, n: usize, scale: f64) -> DMatrix<f64> {
    symmetrize(&gaussian_matrix(rng, n, n)) * scale
}

pub fn tangent(rng: &mut impl Rng, n: usize) -> SymTangent {
    SymTangent::from_symmetrized(&sym_matrix(rng, n, 1.0))
}

/// exp(S) for a random symmetric S; `spread` controls the log-eigenvalue scale.
pub fn spd(rng: &mut impl Rng, n: usize, spread: f64) -> SpdPoint {
    SpdPoint::new(sym_fn(&sym_matrix(rng, n, spread), f64::exp)).expect("exp of symmetric is SPD")
}

/// Random SPD matrix with spectrum drawn uniformly in log-space from [α, β].
pub fn spd_in_interval(rng: &mut impl Rng, n: usize, iv: &OrderInterval) -> SpdPoint {
    let q = gaussian_matrix(rng, n, n).qr().q();
    let (la, lb) = (iv.alpha().ln(), iv.beta().ln());
    let diag: Vec<f64> = (0..n).map(|_| rng.random_range(la..=lb).exp()).collect();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
    SpdPoint::new(symmetrize(&(&q * d * q.transpose()))).expect("positive spectrum")
}

/// Random well-conditioned invertible matrix.
pub fn invertible(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    loop {
        let g = gaussian_matrix(rng, n, n);
        let sv = crate::linalg::singular_values(&g);
        if sv[n - 1] > 0.05 * sv[0] {
            return g;
        }
    }
}
