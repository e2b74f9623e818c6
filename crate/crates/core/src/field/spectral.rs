//! Exact zero-boundary sampler on a box via the discrete sine transform.
//!
//! On a box interior with extents `n_j`, `I - P_U` is diagonalized by the
//! orthonormal sine basis `sqrt(2/(n+1)) sin(π j k/(n+1))` with eigenvalues
//! `1 - (1/d) Σ_j cos(π k_j/(n_j+1))`, so `φ = S Λ^{-1/2} z` has covariance
//! exactly `g_U`.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::FieldSampler;
use crate::lattice::{LatticeBox, Window};
use crate::rng::fill_standard_normal;

/// Lines at most this long use the dense sine matrix.
const DIRECT_MAX: usize = 40;

enum Transform {
    Direct { n: usize, matrix: Vec<f64> },
    Fft { n: usize, fft: Arc<dyn Fft<f64>>, scale: f64 },
}

impl Transform {
    fn new(n: usize, planner: &mut FftPlanner<f64>) -> Self {
        let scale = (2.0 / (n as f64 + 1.0)).sqrt();
        if n <= DIRECT_MAX {
            let mut matrix = vec![0.0; n * n];
            for j in 0..n {
                for k in 0..n {
                    matrix[j * n + k] =
                        scale * (std::f64::consts::PI * ((j + 1) * (k + 1)) as f64 / (n as f64 + 1.0)).sin();
                }
            }
            Transform::Direct { n, matrix }
        } else {
            Transform::Fft { n, fft: planner.plan_fft_forward(2 * (n + 1)), scale }
        }
    }

    fn scratch_len(&self) -> usize {
        match self {
            Transform::Direct { n, .. } => *n,
            Transform::Fft { n, fft, .. } => 2 * (n + 1) + fft.get_inplace_scratch_len(),
        }
    }

    /// Transforms `a` and, if given, `b` in place.
    fn apply(&self, a: &mut [f64], b: Option<&mut [f64]>, buf: &mut Vec<Complex<f64>>, tmp: &mut [f64]) {
        match self {
            Transform::Direct { n, matrix } => {
                for line in std::iter::once(a).chain(b) {
                    for k in 0..*n {
                        let row = &matrix[k * n..(k + 1) * n];
                        tmp[k] = row.iter().zip(line.iter()).map(|(m, x)| m * x).sum();
                    }
                    line.copy_from_slice(&tmp[..*n]);
                }
            }
            Transform::Fft { n, fft, scale } => {
                let n = *n;
                let len = 2 * (n + 1);
                buf.clear();
                buf.resize(len + fft.get_inplace_scratch_len(), Complex::new(0.0, 0.0));
                let (data, scratch) = buf.split_at_mut(len);
                let has_b = b.is_some();
                let bl: &[f64] = match &b {
                    Some(b) => b,
                    None => &[],
                };
                for j in 0..n {
                    let im = if has_b { bl[j] } else { 0.0 };
                    data[j + 1] = Complex::new(a[j], im);
                    data[len - 1 - j] = Complex::new(-a[j], -im);
                }
                fft.process_with_scratch(data, scratch);
                let half = 0.5 * scale;
                for k in 0..n {
                    a[k] = -data[k + 1].im * half;
                }
                if let Some(b) = b {
                    for k in 0..n {
                        b[k] = data[k + 1].re * half;
                    }
                }
            }
        }
    }
}

/// Exact sampler of the zero-boundary field on a box.
pub struct SpectralSampler {
    window: Window,
    transforms: Vec<Transform>,
    inv_sqrt_eig: Vec<f64>,
}

impl SpectralSampler {
    /// Field with zero boundary outside `interior`.
    pub fn new(interior: LatticeBox) -> Self {
        let window = Window::new(interior);
        let ext = window.extents().to_vec();
        let d = ext.len();
        let mut planner = FftPlanner::new();
        let transforms = ext.iter().map(|&n| Transform::new(n, &mut planner)).collect();
        let cosines: Vec<Vec<f64>> = ext
            .iter()
            .map(|&n| (1..=n).map(|k| (std::f64::consts::PI * k as f64 / (n as f64 + 1.0)).cos()).collect())
            .collect();
        let mut coords = vec![0usize; d];
        let inv_sqrt_eig = (0..window.len())
            .map(|i| {
                window.local_coords(i, &mut coords);
                let s: f64 = coords.iter().enumerate().map(|(a, &k)| cosines[a][k]).sum();
                (1.0 - s / d as f64).sqrt().recip()
            })
            .collect();
        SpectralSampler { window, transforms, inv_sqrt_eig }
    }

    /// Eigenvalue of `I - P_U` paired with the basis vector at multi-index
    /// position `i` (row-major).
    pub fn eigenvalue(&self, i: usize) -> f64 {
        self.inv_sqrt_eig[i].powi(-2)
    }

    /// In-place separable orthonormal DST-I over all axes.
    pub fn transform(&self, values: &mut [f64]) {
        let ext = self.window.extents();
        let strides = self.window.strides();
        let total = values.len();
        let mut buf = Vec::new();
        for (axis, tr) in self.transforms.iter().enumerate() {
            let n = ext[axis];
            let s = strides[axis];
            let mut la = vec![0.0; n];
            let mut lb = vec![0.0; n];
            let mut tmp = vec![0.0; tr.scratch_len().max(n)];
            let bases: Vec<usize> = (0..total / (n * s))
                .flat_map(|outer| (0..s).map(move |inner| outer * n * s + inner))
                .collect();
            for pair in bases.chunks(2) {
                for t in 0..n {
                    la[t] = values[pair[0] + t * s];
                }
                if pair.len() == 2 {
                    for t in 0..n {
                        lb[t] = values[pair[1] + t * s];
                    }
                    tr.apply(&mut la, Some(&mut lb), &mut buf, &mut tmp);
                    for t in 0..n {
                        values[pair[1] + t * s] = lb[t];
                    }
                } else {
                    tr.apply(&mut la, None, &mut buf, &mut tmp);
                }
                for t in 0..n {
                    values[pair[0] + t * s] = la[t];
                }
            }
        }
    }
}

impl FieldSampler for SpectralSampler {
    fn window(&self) -> &Window {
        &self.window
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        fill_standard_normal(rng, out);
        for (v, w) in out.iter_mut().zip(&self.inv_sqrt_eig) {
            *v *= w;
        }
        self.transform(out);
    }

    fn tag(&self) -> super::SamplerKind {
        super::SamplerKind::Spectral
    }
}
