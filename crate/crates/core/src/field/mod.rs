//! Samplers for the zero-boundary free field and derived fields.

pub mod conditional;
pub mod decomposition;
pub mod dense;
pub mod dump;
pub mod spectral;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lattice::{LatticeBox, Point, Window};
use crate::rng::StreamKey;

pub use conditional::{conditional_decomposition_check, fkg_mc_check, ConditionalShift, WindowShift};
pub use decomposition::{sample_decomposition, DecompositionSample, DecompositionSampler};
pub use dense::DenseSampler;
pub use spectral::SpectralSampler;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Spectral,
    Dense,
    Decomposition,
    Derived,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Zero outside the window.
    Zero,
    /// Values outside the window are not defined.
    Free,
}

/// A real field on a window.
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub window: Window,
    pub values: Vec<f64>,
    pub seed: u64,
    pub index: u64,
    pub sampler: SamplerKind,
    pub boundary: Boundary,
}

impl ScalarField {
    pub fn new(window: Window, values: Vec<f64>) -> Self {
        assert_eq!(window.len(), values.len(), "field length must match its window");
        ScalarField { window, values, seed: 0, index: 0, sampler: SamplerKind::Derived, boundary: Boundary::Free }
    }

    /// Value at `p`; zero outside a zero-boundary window.
    pub fn value(&self, p: &Point) -> Option<f64> {
        match self.window.index(p) {
            Some(i) => Some(self.values[i]),
            None if self.boundary == Boundary::Zero => Some(0.0),
            None => None,
        }
    }

    pub fn negate(&self) -> ScalarField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = -*v);
        out
    }

    /// Restriction to a sub-box.
    pub fn restrict(&self, sub: &LatticeBox) -> crate::Result<ScalarField> {
        if !self.window.bounds().contains_box(sub) {
            return Err(crate::Error::Geometry("sub-box not contained in window".into()));
        }
        // copy whole rows along the last axis
        let d = sub.dim();
        let run = sub.extent(d - 1);
        let mut top = sub.upper().coords().to_vec();
        top[d - 1] = sub.lower()[d - 1];
        let starts = LatticeBox::new(sub.lower().clone(), Point::new(top))?;
        let mut values = Vec::with_capacity(sub.len());
        for p in starts.points() {
            let i = self.window.index(&p).unwrap();
            values.extend_from_slice(&self.values[i..i + run]);
        }
        Ok(ScalarField {
            window: Window::new(sub.clone()),
            values,
            seed: self.seed,
            index: self.index,
            sampler: self.sampler,
            boundary: Boundary::Free,
        })
    }
}

/// A sampler of centered Gaussian fields on a fixed window.
pub trait FieldSampler: Sync {
    fn window(&self) -> &Window;
    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]);
    fn tag(&self) -> SamplerKind;

    /// Sample number `index` of the stream family `key`.
    fn sample(&self, key: &StreamKey, index: u64) -> ScalarField {
        let mut values = vec![0.0; self.window().len()];
        self.sample_into(&mut key.stream(index), &mut values);
        ScalarField {
            window: self.window().clone(),
            values,
            seed: key.seed,
            index,
            sampler: self.tag(),
            boundary: Boundary::Zero,
        }
    }
}

/// One zero-boundary sample on the box `interior`.
pub fn sample_gff(interior: &LatticeBox, seed: u64, index: u64) -> ScalarField {
    let s = SpectralSampler::new(interior.clone());
    s.sample(&StreamKey::new(seed, crate::rng::experiment::GFF_SAMPLE), index)
}
