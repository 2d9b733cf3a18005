//! Container and sphere-family geometry in dimensions 2 and 3.
//!
//! The container is a ball of radius R_Ω centered at the origin; the
//! interface is a union of m disjoint spheres of common radius strictly
//! inside it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Volume of the unit ball in R^n.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => panic!("dimension {n} not supported"),
    }
}

/// Surface area of the sphere of radius `r` in R^n.
pub fn sphere_area(n: usize, r: f64) -> f64 {
    n as f64 * unit_ball_volume(n) * r.powi(n as i32 - 1)
}

/// Volume of the ball of radius `r` in R^n.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    unit_ball_volume(n) * r.powi(n as i32)
}

/// Bounded container: ball of radius `r_omega` at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub n: usize,
    pub r_omega: f64,
}

impl Domain {
    pub fn new(n: usize, r_omega: f64) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::InvalidInput(format!("dimension must be 2 or 3, got {n}")));
        }
        if r_omega <= 0.0 {
            return Err(Error::InvalidInput("container radius must be positive".into()));
        }
        Ok(Domain { n, r_omega })
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.n, self.r_omega)
    }
}

/// m disjoint spheres of common radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereFamily {
    pub centers: Vec<[f64; 3]>,
    pub radius: f64,
}

/// Diagnostics from the non-degeneracy check: which pair touches, which
/// sphere leaves the container.
#[derive(Debug, Clone, Default, Serialize)]
pub struct DegeneracyDiagnostics {
    pub touching_pairs: Vec<(usize, usize)>,
    pub boundary_contacts: Vec<usize>,
}

impl SphereFamily {
    pub fn new(centers: Vec<[f64; 3]>, radius: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidInput("at least one sphere required".into()));
        }
        if radius <= 0.0 {
            return Err(Error::InvalidInput("sphere radius must be positive".into()));
        }
        Ok(SphereFamily { centers, radius })
    }

    /// Single sphere at the origin (the concentric configuration).
    pub fn concentric(radius: f64) -> Self {
        SphereFamily {
            centers: vec![[0.0; 3]],
            radius,
        }
    }

    pub fn count(&self) -> usize {
        self.centers.len()
    }

    /// Total interface area.
    pub fn area(&self, n: usize) -> f64 {
        self.count() as f64 * sphere_area(n, self.radius)
    }

    /// Total phase-1 volume.
    pub fn volume(&self, n: usize) -> f64 {
        self.count() as f64 * ball_volume(n, self.radius)
    }

    /// True iff the closed balls are pairwise disjoint and strictly inside
    /// the container. Touching counts as degenerate.
    pub fn validate_nondegenerate(&self, dom: &Domain) -> (bool, DegeneracyDiagnostics) {
        let mut diag = DegeneracyDiagnostics::default();
        let m = self.count();
        for i in 0..m {
            let c = &self.centers[i];
            let norm = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            if norm + self.radius >= dom.r_omega {
                diag.boundary_contacts.push(i);
            }
            for j in (i + 1)..m {
                let d = &self.centers[j];
                let dist = ((c[0] - d[0]).powi(2) + (c[1] - d[1]).powi(2) + (c[2] - d[2]).powi(2))
                    .sqrt();
                if dist <= 2.0 * self.radius {
                    diag.touching_pairs.push((i, j));
                }
            }
        }
        (
            diag.touching_pairs.is_empty() && diag.boundary_contacts.is_empty(),
            diag,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sphere_inside_is_fine() {
        let dom = Domain::new(3, 2.0).unwrap();
        let s = SphereFamily::concentric(1.0);
        assert!(s.validate_nondegenerate(&dom).0);
    }

    #[test]
    fn touching_pair_is_degenerate() {
        let dom = Domain::new(3, 10.0).unwrap();
        let s = SphereFamily::new(vec![[0.0; 3], [2.0, 0.0, 0.0]], 1.0).unwrap();
        let (ok, diag) = s.validate_nondegenerate(&dom);
        assert!(!ok);
        assert_eq!(diag.touching_pairs, vec![(0, 1)]);
    }

    #[test]
    fn boundary_contact_is_degenerate() {
        let dom = Domain::new(2, 2.0).unwrap();
        let s = SphereFamily::new(vec![[1.0, 0.0, 0.0]], 1.0).unwrap();
        let (ok, diag) = s.validate_nondegenerate(&dom);
        assert!(!ok);
        assert_eq!(diag.boundary_contacts, vec![0]);
    }

    #[test]
    fn permutation_invariance_against_brute_force() {
        // the O(m^2) pairwise check is the definition; shuffling centers must
        // not change the verdict
        let dom = Domain::new(3, 10.0).unwrap();
        let centers = vec![
            [0.0, 0.0, 0.0],
            [3.0, 0.0, 0.0],
            [0.0, 3.5, 0.0],
            [0.0, 0.0, 4.0],
        ];
        let mut perm = centers.clone();
        perm.reverse();
        let a = SphereFamily::new(centers, 1.2).unwrap();
        let b = SphereFamily::new(perm, 1.2).unwrap();
        assert_eq!(
            a.validate_nondegenerate(&dom).0,
            b.validate_nondegenerate(&dom).0
        );
    }
}
