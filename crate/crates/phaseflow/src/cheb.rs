//! Chebyshev–Lobatto collocation on an interval: nodes, differentiation
//! matrices and Clenshaw–Curtis quadrature weights.
//!
//! Nodes are returned in ascending order. Differentiation matrices use the
//! barycentric form with the negative-sum trick on the diagonal, so constants
//! differentiate to exactly zero.

use nalgebra::DMatrix;

/// Collocation data on [a, b] with `len` points.
#[derive(Debug, Clone)]
pub struct Lobatto {
    pub nodes: Vec<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    /// Clenshaw–Curtis weights; Σ wᵢ f(rᵢ) ≈ ∫ₐᵇ f.
    pub weights: Vec<f64>,
}

/// Builds the Lobatto grid on [a, b] with `len` ≥ 2 points.
pub fn lobatto(a: f64, b: f64, len: usize) -> Lobatto {
    assert!(len >= 2, "need at least two collocation points");
    let n = len - 1;
    let half = 0.5 * (b - a);

    // standard grid t_j = cos(j pi / n) descending maps to ascending r
    let t: Vec<f64> = (0..=n)
        .map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos())
        .collect();
    let nodes: Vec<f64> = t.iter().map(|tj| a + half * (1.0 - tj)).collect();

    let c = |j: usize| -> f64 {
        let base = if j == 0 || j == n { 2.0 } else { 1.0 };
        if j % 2 == 0 {
            base
        } else {
            -base
        }
    };

    let mut d = DMatrix::<f64>::zeros(len, len);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[(i, j)] = (c(i) / c(j)) / (t[i] - t[j]);
            }
        }
    }
    for i in 0..=n {
        let mut row_sum = 0.0;
        for j in 0..=n {
            if i != j {
                row_sum += d[(i, j)];
            }
        }
        d[(i, i)] = -row_sum;
    }
    // d/dr = -(1/half) d/dt under r = a + half (1 - t)
    let d1 = d.map(|v| -v / half);
    let d2 = &d1 * &d1;

    let weights = clencurt(n).into_iter().map(|w| w * half).collect();

    Lobatto {
        nodes,
        d1,
        d2,
        weights,
    }
}

/// Clenshaw–Curtis weights on the n+1 Lobatto points of [-1, 1], returned in
/// the same ascending order as the nodes.
fn clencurt(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    if n == 1 {
        w[0] = 1.0;
        w[1] = 1.0;
        return w;
    }
    let end = if n % 2 == 0 {
        1.0 / (n * n - 1) as f64
    } else {
        1.0 / (n * n) as f64
    };
    w[0] = end;
    w[n] = end;
    for (i, wi) in w.iter_mut().enumerate().take(n).skip(1) {
        let theta = std::f64::consts::PI * i as f64 / n as f64;
        let mut v = 1.0;
        if n % 2 == 0 {
            for k in 1..n / 2 {
                v -= 2.0 * (2.0 * k as f64 * theta).cos() / (4 * k * k - 1) as f64;
            }
            v -= (n as f64 * theta).cos() / (n * n - 1) as f64;
        } else {
            for k in 1..=(n - 1) / 2 {
                v -= 2.0 * (2.0 * k as f64 * theta).cos() / (4 * k * k - 1) as f64;
            }
        }
        *wi = 2.0 * v / n as f64;
    }
    // weights come out symmetric; node order reversal is harmless
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiates_polynomials_exactly() {
        let g = lobatto(0.5, 2.0, 16);
        let f: Vec<f64> = g.nodes.iter().map(|r| r.powi(5) - 3.0 * r + 1.0).collect();
        let fv = nalgebra::DVector::from_vec(f);
        let df = &g.d1 * &fv;
        let d2f = &g.d2 * &fv;
        for (i, &r) in g.nodes.iter().enumerate() {
            assert!((df[i] - (5.0 * r.powi(4) - 3.0)).abs() < 1e-9);
            assert!((d2f[i] - 20.0 * r.powi(3)).abs() < 1e-7);
        }
    }

    #[test]
    fn constants_differentiate_to_zero() {
        let g = lobatto(0.0, 1.0, 24);
        let ones = nalgebra::DVector::from_element(24, 1.0);
        assert!((&g.d1 * &ones).amax() < 1e-12);
    }

    #[test]
    fn quadrature_integrates_smooth_functions() {
        let g = lobatto(0.0, 2.0, 32);
        let integral: f64 = g
            .nodes
            .iter()
            .zip(&g.weights)
            .map(|(r, w)| w * (r.powi(3) + r.exp()))
            .sum();
        let exact = 4.0 + (2f64.exp() - 1.0);
        assert!((integral - exact).abs() < 1e-12);
    }

    #[test]
    fn quadrature_weights_sum_to_length() {
        for len in [8, 9, 48] {
            let g = lobatto(1.0, 3.5, len);
            let s: f64 = g.weights.iter().sum();
            assert!((s - 2.5).abs() < 1e-13);
        }
    }
}
