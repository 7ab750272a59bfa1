//! Deterministic per-task random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; decorrelates adjacent stream indices.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for `(base_seed, index)`.
pub fn stream(base_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(base_seed ^ mix(index.wrapping_add(0x5851_F42D_4C95_7F2D))))
}

/// Two-level stream, e.g. `(seed, cell, start)`.
pub fn substream(base_seed: u64, outer: u64, inner: u64) -> ChaCha8Rng {
    stream(mix(base_seed ^ mix(outer)), inner)
}

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal folded into `Q`).
pub fn haar_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `Q·diag(u)·Qᵀ` with Haar `Q` and `u` uniform on `[0,1]^n`: a random point
/// of the matrix interval `[0, I]`.
pub fn random_unit_interval<R: Rng + ?Sized>(rng: &mut R, n: usize) -> crate::linalg::SymMatrix {
    let q = haar_orthogonal(rng, n);
    let u = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.random::<f64>()));
    crate::linalg::SymMatrix::new(&q * u * q.transpose())
}
