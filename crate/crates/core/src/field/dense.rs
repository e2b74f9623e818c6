//! Dense precision-factor sampler for irregular windows.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use super::{FieldSampler, SamplerKind};
use crate::error::{Error, Result};
use crate::greens::KilledGreen;
use crate::lattice::Window;
use crate::rng::standard_normals;

/// Largest `|U|` accepted.
pub const DENSE_MAX: usize = 4000;

/// Samples `N(0, g_U)` by `Q = L Lᵀ`, `Lᵀ x = z` with `Q = I - P_U`.
pub struct DenseSampler {
    window: Window,
    sites: Vec<usize>,
    upper: DMatrix<f64>,
}

impl DenseSampler {
    pub fn new(u: &KilledGreen) -> Result<Self> {
        let n = u.len();
        if n > DENSE_MAX {
            return Err(Error::InvalidArgument(format!("{n} sites exceed the dense sampler cap {DENSE_MAX}")));
        }
        let w = u.window();
        let d = w.dim();
        let mut q = DMatrix::<f64>::identity(n, n);
        let inv = 1.0 / (2 * d) as f64;
        for (k, &i) in u.site_indices().iter().enumerate() {
            for axis in 0..d {
                for fwd in [false, true] {
                    if let Some(j) = w.step(i, axis, fwd) {
                        if let Some(c) = u.compact_index(&w.point(j)) {
                            q[(k, c)] -= inv;
                        }
                    }
                }
            }
        }
        let chol = Cholesky::new(q).ok_or_else(|| Error::NotPositiveDefinite(" (precision of U)".into()))?;
        Ok(DenseSampler { window: w.clone(), sites: u.site_indices().to_vec(), upper: chol.l().transpose() })
    }
}

impl FieldSampler for DenseSampler {
    fn window(&self) -> &Window {
        &self.window
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let z = DVector::from_vec(standard_normals(rng, self.sites.len()));
        let x = self.upper.solve_upper_triangular(&z).expect("triangular factor has a positive diagonal");
        out.iter_mut().for_each(|v| *v = 0.0);
        for (k, &i) in self.sites.iter().enumerate() {
            out[i] = x[k];
        }
    }

    fn tag(&self) -> SamplerKind {
        SamplerKind::Dense
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeBox, Point};
    use approx::assert_abs_diff_eq;

    #[test]
    fn factor_inverse_is_killed_green() {
        let bx = LatticeBox::ball(&Point::origin(3), 1);
        let w = Window::new(bx);
        let mut mask = vec![true; w.len()];
        mask[w.index(&Point::origin(3)).unwrap()] = false;
        let kg = KilledGreen::new(w, &mask).unwrap();
        let s = DenseSampler::new(&kg).unwrap();
        let ut = &s.upper;
        let prec = ut.transpose() * ut;
        let cov = prec.try_inverse().unwrap();
        let g = kg.dense().unwrap();
        for i in 0..kg.len() {
            for j in 0..kg.len() {
                assert_abs_diff_eq!(cov[(i, j)], g[(i, j)], epsilon = 1e-9);
            }
        }
    }
}
