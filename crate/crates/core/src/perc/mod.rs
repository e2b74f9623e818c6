//! Excursion sets `{φ ≥ h}`, clusters, crossings and Monte Carlo estimators.

pub mod blocks;
pub mod clusters;
pub mod crossing;
pub mod estimate;
pub mod fit;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::ScalarField;
use crate::lattice::{LatticeBox, Window};

pub use blocks::{
    bad_circuit_probe, block_events, exact_surround_probability, psi_block_probability, BlockSource, SlabSample,
};
pub use clusters::{label_clusters, ClusterLabeling, UnionFind};
pub use crossing::{connection_level, crossing, crossing_level, face_crossing_level, merge_level};
pub use estimate::{
    crossing_curve, crossing_levels, estimate_connectivity, estimate_crossing, estimate_eta_proxy, estimate_hstar,
    estimate_plane_crossing, hstar_from_runs, BoxSampler, CrossingRun, FieldModel, HstarEstimate, Margin,
};
pub use fit::{fit_decay, DecayClass, DecayFit};

/// Open sites of a window at level `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryConfig {
    pub window: Window,
    pub bits: Vec<bool>,
    pub level: f64,
}

impl BinaryConfig {
    pub fn open_count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Restriction to a sub-box.
    pub fn restrict(&self, sub: &LatticeBox) -> Result<BinaryConfig> {
        let idx = self.window.indices_of_box(sub)?;
        Ok(BinaryConfig {
            window: Window::new(sub.clone()),
            bits: idx.into_iter().map(|i| self.bits[i]).collect(),
            level: self.level,
        })
    }

    /// True when every open site of `self` is open in `other`.
    pub fn dominated_by(&self, other: &BinaryConfig) -> bool {
        self.window == other.window && self.bits.iter().zip(&other.bits).all(|(a, b)| !a || *b)
    }
}

/// `{x : φ_x ≥ h}` within the field's window.
pub fn excursion_set(field: &ScalarField, h: f64) -> BinaryConfig {
    BinaryConfig { window: field.window.clone(), bits: field.values.iter().map(|&v| v >= h).collect(), level: h }
}
