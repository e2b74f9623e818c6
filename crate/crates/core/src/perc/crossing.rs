//! Crossing events and the levels at which they stop occurring.

use super::clusters::{for_each_neighbor, UnionFind};
use super::BinaryConfig;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::lattice::{LatticeBox, Point, Window};

fn check_annulus(inner: &LatticeBox, outer: &LatticeBox) -> Result<()> {
    if inner.dim() != outer.dim() {
        return Err(Error::DimensionMismatch { expected: outer.dim(), got: inner.dim() });
    }
    let strict = (0..outer.dim())
        .all(|a| outer.lower()[a] < inner.lower()[a] && inner.upper()[a] < outer.upper()[a]);
    if !strict {
        return Err(Error::Geometry("inner box must lie strictly inside the outer box".into()));
    }
    Ok(())
}

fn inner_mask(w: &Window, inner: &LatticeBox) -> Result<Vec<bool>> {
    let mut m = vec![false; w.len()];
    for i in w.indices_of_box(inner)? {
        m[i] = true;
    }
    Ok(m)
}

/// Whether an open nearest-neighbour path joins `source` sites to `sink`
/// sites.
pub fn connects<S, T>(w: &Window, open: &[bool], source: S, sink: T) -> bool
where
    S: Fn(usize) -> bool,
    T: Fn(usize) -> bool,
{
    let n = w.len();
    let (src, snk) = (n, n + 1);
    let mut uf = UnionFind::new(n + 2);
    for i in 0..n {
        if !open[i] {
            continue;
        }
        if source(i) {
            uf.union(i, src);
        }
        if sink(i) {
            uf.union(i, snk);
        }
        for_each_neighbor(w, i, None, true, |j| {
            if open[j] {
                uf.union(i, j);
            }
        });
    }
    uf.same(src, snk)
}

/// Largest `h ≥ floor` such that `{values ≥ h}` joins a source to a sink,
/// or `-∞` if they are not joined at `floor`. Sites are added in decreasing
/// order of value until the virtual source and sink merge.
pub fn merge_level<S, T>(w: &Window, values: &[f64], source: S, sink: T, floor: f64) -> f64
where
    S: Fn(usize) -> bool,
    T: Fn(usize) -> bool,
{
    let n = w.len();
    let mut order: Vec<u32> = (0..n as u32).filter(|&i| values[i as usize] >= floor).collect();
    order.sort_unstable_by(|&a, &b| values[b as usize].total_cmp(&values[a as usize]));
    let (src, snk) = (n, n + 1);
    let mut uf = UnionFind::new(n + 2);
    let mut added = vec![false; n];
    for &i in &order {
        let i = i as usize;
        added[i] = true;
        if source(i) {
            uf.union(i, src);
        }
        if sink(i) {
            uf.union(i, snk);
        }
        for_each_neighbor(w, i, None, false, |j| {
            if added[j] {
                uf.union(i, j);
            }
        });
        if uf.same(src, snk) {
            return values[i];
        }
    }
    f64::NEG_INFINITY
}

/// `inner ⟷ ∂outer` by an open path inside `outer`.
pub fn crossing(config: &BinaryConfig, inner: &LatticeBox, outer: &LatticeBox) -> Result<bool> {
    check_annulus(inner, outer)?;
    let sub = if config.window.bounds() == outer { config.clone() } else { config.restrict(outer)? };
    let w = &sub.window;
    let mask = inner_mask(w, inner)?;
    Ok(connects(w, &sub.bits, |i| mask[i], |i| w.on_face(i)))
}

/// Largest level `h ≥ floor` at which `inner ⟷ ∂outer` in `{φ ≥ h}`.
pub fn crossing_level(field: &ScalarField, inner: &LatticeBox, outer: &LatticeBox, floor: f64) -> Result<f64> {
    check_annulus(inner, outer)?;
    let owned;
    let sub = if field.window.bounds() == outer {
        field
    } else {
        owned = field.restrict(outer)?;
        &owned
    };
    let w = &sub.window;
    let mask = inner_mask(w, inner)?;
    Ok(merge_level(w, &sub.values, |i| mask[i], |i| w.on_face(i), floor))
}

/// Largest level `h ≥ floor` at which `a ⟷ b` in `{φ ≥ h}` within the field's
/// window.
pub fn connection_level(field: &ScalarField, a: &Point, b: &Point, floor: f64) -> Result<f64> {
    let w = &field.window;
    let ia = w.index_or_err(a)?;
    let ib = w.index_or_err(b)?;
    Ok(merge_level(w, &field.values, |i| i == ia, |i| i == ib, floor))
}

/// Left-right crossing of the whole window along `axis`.
pub fn face_crossing_level(field: &ScalarField, axis: usize, floor: f64) -> f64 {
    let w = &field.window;
    let s = w.strides()[axis];
    let e = w.extents()[axis];
    merge_level(w, &field.values, |i| (i / s).is_multiple_of(e), |i| (i / s) % e == e - 1, floor)
}
