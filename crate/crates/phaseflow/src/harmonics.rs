//! Surface-harmonic bookkeeping shared by the variation and spectral modules.
//!
//! On the sphere of radius R in R^n the degree-l harmonics are eigenfunctions
//! of the Laplace–Beltrami operator with eigenvalue −l(l+n−2)/R². Harmonics
//! are normalized so that the surface mean of Y² is 1 (constants are Y ≡ 1);
//! tangential data uses the matching unit-norm basis Ŵ = ∇_ω Y / √ν.

use serde::{Deserialize, Serialize};

/// One harmonic mode: dimension and degree (Fourier index |k| when n = 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeIndex {
    pub n: usize,
    pub l: usize,
}

impl ModeIndex {
    pub fn new(n: usize, l: usize) -> Self {
        ModeIndex { n, l }
    }

    /// ν = l(l+n−2), the (unit-sphere) Laplace–Beltrami eigenvalue magnitude.
    pub fn nu(&self) -> f64 {
        (self.l * (self.l + self.n - 2)) as f64
    }

    /// Laplace–Beltrami eigenvalue −l(l+n−2)/R² on the sphere of radius R.
    pub fn laplace_beltrami_eig(&self, radius: f64) -> f64 {
        -self.nu() / (radius * radius)
    }

    /// Number of independent harmonics of this degree.
    pub fn multiplicity(&self) -> usize {
        match (self.n, self.l) {
            (_, 0) => 1,
            (2, _) => 2,
            (3, l) => 2 * l + 1,
            _ => panic!("dimension {} not supported", self.n),
        }
    }

    /// Symbol of A_Σ = −H′(0) = −(n−1)/R² − Δ_Σ on this mode:
    /// a_l = (l(l+n−2) − (n−1))/R².
    pub fn a_sigma(&self, radius: f64) -> f64 {
        (self.nu() - (self.n as f64 - 1.0)) / (radius * radius)
    }

    /// Symbol of H′(Γ_*) = (n−1)/R² + Δ_Σ on this mode (the negative of
    /// `a_sigma`).
    pub fn h_prime(&self, radius: f64) -> f64 {
        -self.a_sigma(radius)
    }
}

/// Coefficients of a surface scalar on one sphere, modes l = 0..=l_max with
/// the full multiplicity per degree. `coeffs[l]` has length multiplicity(l).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicCoeffs {
    pub n: usize,
    coeffs: Vec<Vec<f64>>,
}

impl HarmonicCoeffs {
    pub fn zeros(n: usize, l_max: usize) -> Self {
        let coeffs = (0..=l_max)
            .map(|l| vec![0.0; ModeIndex::new(n, l).multiplicity()])
            .collect();
        HarmonicCoeffs { n, coeffs }
    }

    /// Constant field of the given value (only the l = 0 coefficient).
    pub fn constant(n: usize, l_max: usize, value: f64) -> Self {
        let mut c = Self::zeros(n, l_max);
        c.coeffs[0][0] = value;
        c
    }

    /// Single unit coefficient in degree l, index i.
    pub fn unit(n: usize, l_max: usize, l: usize, i: usize) -> Self {
        let mut c = Self::zeros(n, l_max);
        c.coeffs[l][i] = 1.0;
        c
    }

    pub fn l_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn get(&self, l: usize, i: usize) -> f64 {
        self.coeffs[l][i]
    }

    pub fn set(&mut self, l: usize, i: usize, value: f64) {
        self.coeffs[l][i] = value;
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0][0]
    }

    pub fn shift_mean(&mut self, delta: f64) {
        self.coeffs[0][0] += delta;
    }

    /// Σ over all modes of coeff², i.e. the surface mean of the field squared
    /// (harmonics are mean-square orthonormal).
    pub fn mean_square(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|per_l| per_l.iter())
            .map(|c| c * c)
            .sum()
    }

    /// Iterator over (l, i, coefficient).
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .flat_map(|(l, per_l)| per_l.iter().enumerate().map(move |(i, &c)| (l, i, c)))
    }

    pub fn all_finite(&self) -> bool {
        self.coeffs.iter().flatten().all(|c| c.is_finite())
    }
}
