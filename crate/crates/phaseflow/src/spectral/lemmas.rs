//! Finite-dimensional property checks of the two operator lemmas the
//! reduction rests on: the contraction bound ‖A(A*A+B)⁻¹A*‖ ≤ 1 for positive
//! definite B, and the Schur-complement positivity of PSD block matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// ‖A(AᵀA + B)⁻¹Aᵀ‖₂ for dense fixtures; the lemma bounds this by 1 whenever
/// B is positive definite.
pub fn contraction_fixture_check(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let ata = a.transpose() * a;
    let sys = &ata + b;
    let inv = sys
        .clone()
        .try_inverse()
        .ok_or(Error::SolveFailure("contraction_fixture_check"))?;
    let k = a * inv * a.transpose();
    // spectral norm via the symmetric part is not valid for general K; use
    // the largest singular value
    Ok(k.svd(false, false).singular_values.max())
}

/// Smallest eigenvalue of S − RᵀT⁻¹R for a PSD block matrix [[S, Rᵀ], [R, T]]
/// with invertible T; the Schur lemma asserts it is ≥ 0.
pub fn schur_check(s: &DMatrix<f64>, r: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<f64> {
    let t_inv = t
        .clone()
        .try_inverse()
        .ok_or(Error::SolveFailure("schur_check"))?;
    let complement = s - r.transpose() * t_inv * r;
    let sym = (&complement + complement.transpose()) * 0.5;
    Ok(sym.symmetric_eigen().eigenvalues.min())
}

/// Deterministic dense fixture streams for the property tests: a PSD block
/// matrix partitioned into (S, R, T) blocks, or a plain (A, B) pair.
pub mod fixtures {
    use nalgebra::DMatrix;

    /// xorshift-based reproducible stream, independent of external crates so
    /// the library can expose the acceptance checks itself.
    pub struct Stream(u64);

    impl Stream {
        pub fn new(seed: u64) -> Self {
            Stream(seed.max(1))
        }
        pub fn next_f64(&mut self) -> f64 {
            // xorshift64*
            let mut x = self.0;
            x ^= x >> 12;
            x ^= x << 25;
            x ^= x >> 27;
            self.0 = x;
            let v = x.wrapping_mul(0x2545F4914F6CDD1D);
            (v >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        }
        pub fn matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
            DMatrix::from_fn(rows, cols, |_, _| self.next_f64())
        }
    }

    /// PSD block matrix GᵀG (+ εI on the T block to keep it invertible),
    /// partitioned as [[S, Rᵀ], [R, T]] with block sizes (p, q).
    pub fn psd_blocks(
        stream: &mut Stream,
        p: usize,
        q: usize,
    ) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let g = stream.matrix(p + q, p + q);
        let mut m = g.transpose() * &g;
        for i in 0..q {
            m[(p + i, p + i)] += 1e-6;
        }
        let s = m.view((0, 0), (p, p)).into_owned();
        let r = m.view((p, 0), (q, p)).into_owned();
        let t = m.view((p, p), (q, q)).into_owned();
        (s, r, t)
    }

    /// Rectangular A with a positive definite B = GᵀG + δI.
    pub fn contraction_pair(
        stream: &mut Stream,
        v_dim: usize,
        h_dim: usize,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let a = stream.matrix(v_dim, h_dim);
        let g = stream.matrix(h_dim, h_dim);
        let mut b = g.transpose() * &g;
        for i in 0..h_dim {
            b[(i, i)] += 0.05;
        }
        (a, b)
    }
}
