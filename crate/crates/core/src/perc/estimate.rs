//! Monte Carlo estimators for crossing and connection probabilities.
//!
//! Each sample size `L` draws its own stream family, and every level `h`
//! evaluated at that size reuses the same samples, so estimated curves are
//! exactly monotone in `h`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::crossing::{connection_level, crossing_level, face_crossing_level};
use crate::error::{Error, Result};
use crate::field::{FieldSampler, ScalarField, SpectralSampler};
use crate::greens::{green, GreenMethod};
use crate::lattice::{LatticeBox, Point, Window};
use crate::rng::{experiment, StreamKey};
use crate::stats::{normal_tail, McEstimate};

/// Zero-boundary margin added around an observation window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Margin {
    Fixed(u64),
    /// `ceil(f · L)`
    Scaled(f64),
}

impl Margin {
    pub fn at(&self, l: u64) -> u64 {
        match *self {
            Margin::Fixed(m) => m,
            Margin::Scaled(f) => (f * l as f64).ceil().max(0.0) as u64,
        }
    }
}

impl std::str::FromStr for Margin {
    type Err = Error;

    /// `12` for a fixed margin, `0.25L` for a multiple of `L`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Some(f) = t.strip_suffix('L').or_else(|| t.strip_suffix('l')) {
            let f: f64 = f.parse().map_err(|_| Error::Config(format!("bad margin {s:?}")))?;
            return Ok(Margin::Scaled(f));
        }
        t.parse().map(Margin::Fixed).map_err(|_| Error::Config(format!("bad margin {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldModel {
    /// Free field with zero boundary at the given margin.
    Gff { margin: Margin },
    /// Independent uniform values on `[0, 1]`: `{u ≥ h}` is Bernoulli site
    /// percolation with density `1 - h`.
    IidUniform,
}

impl FieldModel {
    fn tag(&self) -> String {
        match self {
            FieldModel::Gff { .. } => "gff".into(),
            FieldModel::IidUniform => "iid-uniform".into(),
        }
    }
}

/// Draws fields on a fixed observation box.
pub struct BoxSampler {
    obs: LatticeBox,
    model: FieldModel,
    margin: u64,
    spectral: Option<SpectralSampler>,
}

impl BoxSampler {
    /// `l` is the scale used to resolve a scaled margin.
    pub fn new(obs: LatticeBox, model: FieldModel, l: u64) -> Self {
        let (margin, spectral) = match model {
            FieldModel::Gff { margin } => {
                let m = margin.at(l);
                (m, Some(SpectralSampler::new(obs.enlarge(m))))
            }
            FieldModel::IidUniform => (0, None),
        };
        BoxSampler { obs, model, margin, spectral }
    }

    pub fn observation(&self) -> &LatticeBox {
        &self.obs
    }

    pub fn margin(&self) -> u64 {
        self.margin
    }

    pub fn model(&self) -> FieldModel {
        self.model
    }

    pub fn sample(&self, key: &StreamKey, index: u64) -> ScalarField {
        match &self.spectral {
            Some(s) => {
                let full = s.sample(key, index);
                if self.margin == 0 {
                    full
                } else {
                    let mut f = full.restrict(&self.obs).expect("observation box inside the sampled box");
                    f.sampler = full.sampler;
                    f.boundary = crate::field::Boundary::Free;
                    f
                }
            }
            None => {
                let w = Window::new(self.obs.clone());
                let mut rng = key.stream(index);
                let values = (0..w.len()).map(|_| rng.random::<f64>()).collect();
                let mut f = ScalarField::new(w, values);
                f.seed = key.seed;
                f.index = index;
                f
            }
        }
    }
}

fn crossing_key(seed: u64, l: u64) -> StreamKey {
    StreamKey::new(seed, experiment::CROSSING).child(l)
}

fn annulus(d: usize, l: u64) -> (LatticeBox, LatticeBox) {
    let o = Point::origin(d);
    (LatticeBox::ball(&o, l), LatticeBox::ball(&o, 2 * l))
}

fn check_common(d: usize, l: u64, n: u64) -> Result<()> {
    if d < 2 {
        return Err(Error::UnsupportedDimension { d, reason: "crossings need d ≥ 2" });
    }
    if l == 0 || n == 0 {
        return Err(Error::InvalidArgument("L and n must be positive".into()));
    }
    Ok(())
}

/// Per-sample crossing levels `h_c` for `B(0,L) ⟷ S(0,2L)`: sample `i`
/// crosses at level `h` iff `h ≤ h_c[i]`. Levels below `floor` are reported
/// as `-∞`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossingRun {
    pub d: usize,
    pub l: u64,
    pub n: u64,
    pub seed: u64,
    pub margin: u64,
    pub model: FieldModel,
    pub floor: f64,
    pub levels: Vec<f64>,
}

impl CrossingRun {
    pub fn count_at(&self, h: f64) -> u64 {
        self.levels.iter().filter(|&&c| h <= c).count() as u64
    }

    pub fn estimate(&self, h: f64) -> Result<McEstimate> {
        if h < self.floor {
            return Err(Error::InvalidArgument(format!("level {h} below the run floor {}", self.floor)));
        }
        Ok(McEstimate::bernoulli(self.count_at(h), self.n, self.seed)
            .with_meta("d", self.d)
            .with_meta("L", self.l)
            .with_meta("h", h)
            .with_meta("margin", self.margin)
            .with_meta("model", self.model.tag()))
    }

    /// The level where the empirical curve crosses `1/2`, by bisection
    /// inside the bracketing cell of `grid`.
    pub fn half_locus(&self, grid: &[f64]) -> Result<f64> {
        let mut g = grid.to_vec();
        g.sort_by(f64::total_cmp);
        if g.first().is_none_or(|&h| h < self.floor) {
            return Err(Error::InvalidArgument("grid empty or below the run floor".into()));
        }
        let p = |h: f64| self.count_at(h) as f64 / self.n as f64;
        let k = g.windows(2).position(|w| p(w[0]) >= 0.5 && p(w[1]) < 0.5).ok_or_else(|| {
            Error::ToleranceNotMet(format!(
                "grid [{}, {}] does not bracket the 1/2 crossing at L = {} (p = {:.3} .. {:.3})",
                g[0],
                g[g.len() - 1],
                self.l,
                p(g[0]),
                p(g[g.len() - 1])
            ))
        })?;
        let (mut lo, mut hi) = (g[k], g[k + 1]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if p(mid) >= 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

/// Crossing levels of `n` samples at size `L`.
pub fn crossing_levels(d: usize, l: u64, n: u64, seed: u64, model: FieldModel, floor: f64) -> Result<CrossingRun> {
    check_common(d, l, n)?;
    let (inner, outer) = annulus(d, l);
    let sampler = BoxSampler::new(outer.clone(), model, l);
    let key = crossing_key(seed, l);
    let levels = (0..n)
        .into_par_iter()
        .map(|i| crossing_level(&sampler.sample(&key, i), &inner, &outer, floor))
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossingRun { d, l, n, seed, margin: sampler.margin(), model, floor, levels })
}

/// `P[B(0,L) ⟷ S(0,2L)]` in `{φ ≥ h}`.
pub fn estimate_crossing(d: usize, l: u64, h: f64, n: u64, seed: u64, margin: Margin) -> Result<McEstimate> {
    let run = crossing_levels(d, l, n, seed, FieldModel::Gff { margin }, h)?;
    run.estimate(h)
}

/// Crossing probabilities over a level grid on common samples.
pub fn crossing_curve(
    d: usize,
    l: u64,
    grid: &[f64],
    n: u64,
    seed: u64,
    model: FieldModel,
) -> Result<Vec<McEstimate>> {
    let floor = grid.iter().cloned().fold(f64::INFINITY, f64::min);
    if !floor.is_finite() {
        return Err(Error::InvalidArgument("empty level grid".into()));
    }
    let run = crossing_levels(d, l, n, seed, model, floor)?;
    grid.iter().map(|&h| run.estimate(h)).collect()
}

/// `P[0 ⟷ x]` in `{φ ≥ h}`, paths confined to the hull of `{0, x}` grown by
/// `max(|x|_∞, 2)`.
pub fn estimate_connectivity(d: usize, x: &Point, h: f64, n: u64, seed: u64, margin: Margin) -> Result<McEstimate> {
    if x.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.dim() });
    }
    check_common(d, 1, n)?;
    let o = Point::origin(d);
    let r = x.norm_inf().max(2);
    let lo: Vec<i64> = x.coords().iter().map(|&c| c.min(0)).collect();
    let hi: Vec<i64> = x.coords().iter().map(|&c| c.max(0)).collect();
    let obs = LatticeBox::new(Point::new(lo), Point::new(hi))?.enlarge(r);
    let sampler = BoxSampler::new(obs, FieldModel::Gff { margin }, r);
    let key = StreamKey::new(seed, experiment::CONNECTIVITY).child(x.norm_inf());
    let hits = (0..n)
        .into_par_iter()
        .map(|i| connection_level(&sampler.sample(&key, i), &o, x, h).map(|c| (h <= c) as u64))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(McEstimate::bernoulli(hits, n, seed)
        .with_meta("d", d)
        .with_meta("x", x)
        .with_meta("h", h)
        .with_meta("margin", sampler.margin()))
}

/// Origin-to-`S(0,2L)` connection probability, a finite-volume proxy for
/// the percolation function.
pub fn estimate_eta_proxy(d: usize, l: u64, h: f64, n: u64, seed: u64, margin: Margin) -> Result<McEstimate> {
    check_common(d, l, n)?;
    let o = Point::origin(d);
    let outer = LatticeBox::ball(&o, 2 * l);
    let inner = LatticeBox::ball(&o, 0);
    let sampler = BoxSampler::new(outer.clone(), FieldModel::Gff { margin }, l);
    let key = StreamKey::new(seed, experiment::CONNECTIVITY).child(0x1_0000_0000 + l);
    let hits = (0..n)
        .into_par_iter()
        .map(|i| crossing_level(&sampler.sample(&key, i), &inner, &outer, h).map(|c| (h <= c) as u64))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(McEstimate::bernoulli(hits, n, seed)
        .with_meta("d", d)
        .with_meta("L", l)
        .with_meta("h", h)
        .with_meta("margin", sampler.margin()))
}

/// Left-right crossing of the square `[0,L]^2 × {0}` for the `d = 3` field
/// restricted to the plane.
pub fn estimate_plane_crossing(l: u64, h: f64, n: u64, seed: u64, margin: Margin) -> Result<McEstimate> {
    check_common(3, l, n)?;
    let sq = LatticeBox::new(Point::origin(3), Point::new(vec![l as i64, l as i64, 0]))?;
    let m = margin.at(l);
    let sampler = SpectralSampler::new(sq.enlarge(m));
    let key = StreamKey::new(seed, experiment::PLANE).child(l);
    let hits = (0..n)
        .into_par_iter()
        .map(|i| {
            let f = sampler.sample(&key, i).restrict(&sq)?;
            Ok((h <= face_crossing_level(&f, 0, h)) as u64)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(McEstimate::bernoulli(hits, n, seed).with_meta("L", l).with_meta("h", h).with_meta("margin", m))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HstarEstimate {
    pub d: usize,
    pub model: FieldModel,
    /// `(L, 1/2-crossing level)`
    pub loci: Vec<(u64, f64)>,
    /// Spread of the loci over sizes.
    pub interval: (f64, f64),
    /// Locus at the largest size.
    pub point: f64,
    /// `P[φ_0 ≥ point]` (`1 - point` for the uniform model).
    pub tail_probability: f64,
    /// Smallest sample count over the sizes.
    pub n: u64,
    pub seed: u64,
}

/// Locates the `1/2`-crossing level at each size and reports their spread.
pub fn estimate_hstar(
    d: usize,
    sizes: &[u64],
    grid: &[f64],
    n: u64,
    seed: u64,
    model: FieldModel,
) -> Result<HstarEstimate> {
    if sizes.len() < 3 {
        return Err(Error::InvalidArgument("estimate_hstar needs at least 3 sizes".into()));
    }
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("estimate_hstar needs at least 2 grid levels".into()));
    }
    let floor = grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let runs = sizes
        .iter()
        .map(|&l| crossing_levels(d, l, n, seed, model, floor))
        .collect::<Result<Vec<_>>>()?;
    hstar_from_runs(&runs, grid)
}

/// [`estimate_hstar`] on precomputed runs, which may differ in sample count.
pub fn hstar_from_runs(runs: &[CrossingRun], grid: &[f64]) -> Result<HstarEstimate> {
    let first = runs.first().ok_or_else(|| Error::InvalidArgument("no crossing runs".into()))?;
    if runs.iter().any(|r| r.d != first.d || r.model != first.model || r.seed != first.seed) {
        return Err(Error::InvalidArgument("runs differ in dimension, model or seed".into()));
    }
    let (d, model, seed) = (first.d, first.model, first.seed);
    let mut loci = Vec::with_capacity(runs.len());
    for run in runs {
        loci.push((run.l, run.half_locus(grid)?));
    }
    let lo = loci.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let hi = loci.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let point = loci.iter().max_by_key(|x| x.0).unwrap().1;
    let tail_probability = match model {
        FieldModel::Gff { .. } => {
            let g0 = green(&Point::origin(d), 1e-10, GreenMethod::Quadrature)?.value;
            normal_tail(point / g0.sqrt())
        }
        FieldModel::IidUniform => 1.0 - point,
    };
    let n = runs.iter().map(|r| r.n).min().unwrap();
    Ok(HstarEstimate { d, model, loci, interval: (lo, hi), point, tail_probability, n, seed })
}
