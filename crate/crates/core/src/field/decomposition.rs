//! `φ|_{Z^3} = ψ + ξ` for the field on `Z^d`, `d ≥ 6`: `ψ` iid with variance
//! `σ²(d)` and `ξ` independent with covariance `G' = g|_{Z^3} - σ² I`.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::highdim::{gprime_matrix, highdim_scalars};
use crate::greens::{GreenTable, HighDimScalars};
use crate::lattice::Point;
use crate::rng::{experiment, standard_normals, StreamKey};

/// Largest `|A|` accepted by the dense factorization.
pub const DECOMPOSITION_MAX: usize = 4000;
const JITTERS: [f64; 4] = [0.0, 1e-12, 1e-11, 1e-10];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionSample {
    pub points: Vec<Point>,
    pub psi: Vec<f64>,
    pub xi: Vec<f64>,
    pub scalars: HighDimScalars,
}

impl DecompositionSample {
    /// `ψ + ξ`, a sample of the `Z^d` field on `A`.
    pub fn total(&self) -> Vec<f64> {
        self.psi.iter().zip(&self.xi).map(|(a, b)| a + b).collect()
    }
}

/// Reusable factor of `G'_A`.
pub struct DecompositionSampler {
    points: Vec<Point>,
    scalars: HighDimScalars,
    lower: DMatrix<f64>,
    jitter: f64,
}

impl DecompositionSampler {
    pub fn new(d: usize, a: &[Point], table: &GreenTable) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::EmptySet);
        }
        if a.len() > DECOMPOSITION_MAX {
            return Err(Error::InvalidArgument(format!(
                "|A| = {} exceeds the dense cap {DECOMPOSITION_MAX}",
                a.len()
            )));
        }
        if table.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: table.dim() });
        }
        let scalars = highdim_scalars(d)?;
        let m = gprime_matrix(table, &scalars, a)?;
        for jitter in JITTERS {
            let shifted = &m + DMatrix::<f64>::identity(a.len(), a.len()) * jitter;
            if let Some(c) = Cholesky::new(shifted) {
                return Ok(DecompositionSampler { points: a.to_vec(), scalars, lower: c.l(), jitter });
            }
        }
        Err(Error::NotPositiveDefinite(format!(" (G' on {} sites, jitter up to 1e-10)", a.len())))
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn scalars(&self) -> &HighDimScalars {
        &self.scalars
    }

    /// Diagonal shift needed for the factorization to succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn sample_with(&self, rng: &mut ChaCha8Rng) -> DecompositionSample {
        let n = self.points.len();
        let sd = self.scalars.sigma2.sqrt();
        let psi: Vec<f64> = standard_normals(rng, n).into_iter().map(|z| sd * z).collect();
        let xi = self.xi_with(rng);
        DecompositionSample { points: self.points.clone(), psi, xi, scalars: self.scalars }
    }

    /// Only the correlated part `ξ`.
    pub fn xi_with(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let z = DVector::from_vec(standard_normals(rng, self.points.len()));
        (&self.lower * z).iter().cloned().collect()
    }

    pub fn sample(&self, key: &StreamKey, index: u64) -> DecompositionSample {
        self.sample_with(&mut key.stream(index))
    }
}

/// One draw of `(ψ, ξ)` on `A ⊂ Z^3`.
pub fn sample_decomposition(d: usize, a: &[Point], seed: u64, index: u64) -> Result<DecompositionSample> {
    let table = GreenTable::new(d, 1e-11)?;
    let s = DecompositionSampler::new(d, a, &table)?;
    Ok(s.sample(&StreamKey::new(seed, experiment::DECOMPOSITION), index))
}
