//! Signed distance to the interface of a [`GridSet`].
//!
//! The interface is the union of cell faces separating member cells from
//! non-member cells (the region outside the box counts as non-member). It is
//! sampled by its face midpoints: `d̄_E(x)` is the distance from the cell
//! center `x` to the nearest interface face midpoint, negative inside `E`.
//! This differs from the distance to the faces themselves by less than half
//! a face diagonal, i.e. less than `Δx`.
//!
//! Cell centers and face midpoints all live on the lattice of half-cell
//! spacing, so the distance is computed exactly (in integer lattice units)
//! either by brute force or by the separable squared distance transform of
//! Felzenszwalb and Huttenlocher; both routes return identical values.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{GridSet, ScalarField};

/// Grids with `cells * interface_faces` above this use the separable
/// transform; below it the direct scan is cheaper than setting up the lattice.
const BRUTE_FORCE_BUDGET: usize = 1 << 22;

/// `d̄_E` at cell centers. For the empty set every value is `+∞`.
pub fn signed_distance(set: &GridSet) -> ScalarField {
    if set.is_empty() {
        return ScalarField::constant(set.grid(), f64::INFINITY);
    }
    let faces = interface_midpoints(set);
    if faces.len().saturating_mul(set.grid().len()) <= BRUTE_FORCE_BUDGET {
        signed_from_squared(set, brute_force_squared(set, &faces))
    } else {
        signed_from_squared(set, transform_squared(set, &faces))
    }
}

/// Direct minimum over all interface face midpoints; `O(cells * faces)`.
pub fn signed_distance_brute_force(set: &GridSet) -> ScalarField {
    if set.is_empty() {
        return ScalarField::constant(set.grid(), f64::INFINITY);
    }
    let faces = interface_midpoints(set);
    signed_from_squared(set, brute_force_squared(set, &faces))
}

/// Separable exact transform; `O(2^n cells)`.
pub fn signed_distance_transform(set: &GridSet) -> ScalarField {
    if set.is_empty() {
        return ScalarField::constant(set.grid(), f64::INFINITY);
    }
    let faces = interface_midpoints(set);
    signed_from_squared(set, transform_squared(set, &faces))
}

fn signed_from_squared(set: &GridSet, squared: Vec<f64>) -> ScalarField {
    let half = 0.5 * set.grid().spacing();
    let values = squared
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let d = libm::sqrt(s) * half;
            if set.contains(i) {
                -d
            } else {
                d
            }
        })
        .collect();
    ScalarField::from_values(set.grid(), values).expect("field matches grid")
}

/// Interface face midpoints in half-cell lattice coordinates.
///
/// Cell `i` sits at lattice coordinate `2i + 1`; the face between cells
/// `i - 1` and `i` sits at `2i`. Inactive axes have coordinate `0`.
pub(crate) fn interface_midpoints(set: &GridSet) -> Vec<[i64; 3]> {
    let g = set.grid();
    let shape = g.shape();
    let strides = g.strides();
    let mut out = Vec::new();
    let lattice = |c: usize, a: usize| if a < g.dim() { 2 * c as i64 + 1 } else { 0 };
    for axis in 0..g.dim() {
        for idx in 0..g.len() {
            let c = g.coords(idx);
            let inside = set.contains(idx);
            // Face below this cell along `axis`.
            let below = c[axis] > 0 && set.contains(idx - strides[axis]);
            if inside != below {
                let mut p = [lattice(c[0], 0), lattice(c[1], 1), lattice(c[2], 2)];
                p[axis] = 2 * c[axis] as i64;
                out.push(p);
            }
            // Face at the top of the box.
            if c[axis] + 1 == shape[axis] && inside {
                let mut p = [lattice(c[0], 0), lattice(c[1], 1), lattice(c[2], 2)];
                p[axis] = 2 * shape[axis] as i64;
                out.push(p);
            }
        }
    }
    out
}

fn brute_force_squared(set: &GridSet, faces: &[[i64; 3]]) -> Vec<f64> {
    let g = set.grid();
    let dim = g.dim();
    (0..g.len())
        .map(|idx| {
            let c = g.coords(idx);
            let mut p = [0i64; 3];
            for a in 0..dim {
                p[a] = 2 * c[a] as i64 + 1;
            }
            let mut best = i64::MAX;
            for f in faces {
                let mut s = 0;
                for a in 0..dim {
                    let d = p[a] - f[a];
                    s += d * d;
                }
                best = best.min(s);
            }
            best as f64
        })
        .collect()
}

fn transform_squared(set: &GridSet, faces: &[[i64; 3]]) -> Vec<f64> {
    let g = set.grid();
    let dim = g.dim();
    let cells = g.shape();
    // Current array shape; axes already processed are reduced to cell count.
    let mut shape = [1usize; 3];
    for a in 0..dim {
        shape[a] = 2 * cells[a] + 1;
    }
    let mut data = vec![f64::INFINITY; shape[0] * shape[1] * shape[2]];
    for f in faces {
        let idx = (f[0] as usize * shape[1] + f[1] as usize) * shape[2] + f[2] as usize;
        data[idx] = 0.0;
    }
    let mut line = Vec::new();
    let mut out = Vec::new();
    let mut env = Envelope::default();
    for axis in 0..dim {
        let mut next_shape = shape;
        next_shape[axis] = cells[axis];
        let mut next = vec![0.0; next_shape[0] * next_shape[1] * next_shape[2]];
        let strides = [shape[1] * shape[2], shape[2], 1];
        let next_strides = [next_shape[1] * next_shape[2], next_shape[2], 1];
        let (o1, o2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for u in 0..shape[o1] {
            for v in 0..shape[o2] {
                let base = u * strides[o1] + v * strides[o2];
                let nbase = u * next_strides[o1] + v * next_strides[o2];
                line.clear();
                line.extend((0..shape[axis]).map(|t| data[base + t * strides[axis]]));
                env.lower_envelope(&line, &mut out);
                for i in 0..cells[axis] {
                    next[nbase + i * next_strides[axis]] = out[2 * i + 1];
                }
            }
        }
        data = next;
        shape = next_shape;
    }
    data
}

/// Scratch space for the 1D lower envelope of parabolas.
#[derive(Default)]
struct Envelope {
    v: Vec<usize>,
    z: Vec<f64>,
}

impl Envelope {
    /// `out[q] = min_p (q - p)^2 + f[p]`, skipping infinite samples.
    fn lower_envelope(&mut self, f: &[f64], out: &mut Vec<f64>) {
        let n = f.len();
        out.clear();
        out.resize(n, f64::INFINITY);
        self.v.clear();
        self.z.clear();
        for (q, &fq) in f.iter().enumerate() {
            if !fq.is_finite() {
                continue;
            }
            loop {
                let Some(&p) = self.v.last() else {
                    self.v.push(q);
                    self.z.push(f64::NEG_INFINITY);
                    break;
                };
                let (qf, pf) = (q as f64, p as f64);
                let s = ((fq + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf));
                if s <= *self.z.last().unwrap() {
                    self.v.pop();
                    self.z.pop();
                } else {
                    self.v.push(q);
                    self.z.push(s);
                    break;
                }
            }
        }
        if self.v.is_empty() {
            return;
        }
        let mut k = 0;
        for (q, o) in out.iter_mut().enumerate() {
            let qf = q as f64;
            while k + 1 < self.v.len() && self.z[k + 1] < qf {
                k += 1;
            }
            let p = self.v[k];
            let d = qf - p as f64;
            *o = d * d + f[p];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, Point};

    fn ball(g: &Grid, c: Point, r: f64) -> GridSet {
        GridSet::from_fn(g, |p| {
            let s: f64 = (0..3).map(|a| (p[a] - c[a]) * (p[a] - c[a])).sum();
            s < r * r
        })
    }

    /// Exact distance from each cell center to the union of interface faces
    /// (segments in 2D, squares in 3D), by direct enumeration.
    fn distance_to_faces(set: &GridSet) -> Vec<f64> {
        let g = set.grid();
        let dim = g.dim();
        let faces = interface_midpoints(set);
        let h = 0.5; // half a cell in lattice units of one cell
        (0..g.len())
            .map(|idx| {
                let c = g.coords(idx);
                let p: Vec<f64> = (0..dim).map(|a| c[a] as f64 + 0.5).collect();
                let mut best = f64::INFINITY;
                for f in &faces {
                    let mut s = 0.0;
                    for a in 0..dim {
                        let m = f[a] as f64 / 2.0;
                        // The face is flat along the axis with even lattice
                        // coordinate and spans one cell on the others.
                        let d = if f[a] % 2 == 0 {
                            p[a] - m
                        } else {
                            let lo = m - h;
                            let hi = m + h;
                            if p[a] < lo {
                                lo - p[a]
                            } else if p[a] > hi {
                                p[a] - hi
                            } else {
                                0.0
                            }
                        };
                        s += d * d;
                    }
                    best = best.min(s);
                }
                libm::sqrt(best) * g.spacing()
            })
            .collect()
    }

    #[test]
    fn empty_set_is_infinite_everywhere() {
        let g = Grid::centered(2, &[9, 9], 0.1).unwrap();
        let d = signed_distance(&GridSet::empty(&g));
        assert!(d.values().iter().all(|v| *v == f64::INFINITY));
    }

    #[test]
    fn ball_center_value() {
        let g = Grid::centered(2, &[129, 129], 1.0 / 128.0).unwrap();
        let r = 0.3;
        let d = signed_distance(&ball(&g, [0.0; 3], r));
        let at_center = d.sample(&[0.0; 3]).unwrap();
        assert!((at_center + r).abs() <= g.spacing(), "{at_center}");
    }

    #[test]
    fn half_space_matches_brute_force_over_boundary_cells() {
        let g = Grid::centered(2, &[64, 32], 1.0 / 32.0).unwrap();
        let set = GridSet::from_fn(&g, |p| p[0] < 0.0);
        let d = signed_distance(&set);
        let dx = g.spacing();
        // Oracle: min distance to the centers of boundary cells of the set.
        let ring: Vec<Point> = set.boundary_ring().members().map(|i| g.cell_center(g.coords(i))).collect();
        for j in [3usize, 16, 28] {
            for i in 33..60 {
                let p = g.cell_center([i, j, 0]);
                let oracle = ring
                    .iter()
                    .map(|q| libm::sqrt((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)))
                    .fold(f64::INFINITY, f64::min);
                let v = d.get(g.index([i, j, 0]));
                assert!((v - oracle).abs() <= dx, "{v} vs {oracle}");
                assert!((v - p[0]).abs() <= dx);
            }
        }
    }

    #[test]
    fn transform_and_brute_force_agree_exactly() {
        let g = Grid::centered(2, &[48, 37], 1.0 / 32.0).unwrap();
        let set = ball(&g, [0.1, -0.05, 0.0], 0.3)
            .union(&ball(&g, [-0.4, 0.2, 0.0], 0.12))
            .unwrap();
        assert_eq!(signed_distance_transform(&set), signed_distance_brute_force(&set));
        let g = Grid::centered(3, &[20, 17, 23], 1.0 / 16.0).unwrap();
        let set = ball(&g, [0.1, 0.0, 0.05], 0.35).union(&GridSet::from_fn(&g, |p| p[2] > 0.6)).unwrap();
        assert_eq!(signed_distance_transform(&set), signed_distance_brute_force(&set));
    }

    #[test]
    fn within_one_cell_of_face_distance() {
        for g in [Grid::centered(2, &[40, 33], 1.0 / 32.0).unwrap(), Grid::centered(3, &[18, 15, 16], 1.0 / 16.0).unwrap()] {
            let set = ball(&g, [0.07, -0.03, 0.02], 0.31);
            let d = signed_distance(&set);
            let exact = distance_to_faces(&set);
            for (i, e) in exact.iter().enumerate() {
                assert!((d.get(i).abs() - e).abs() <= g.spacing(), "cell {i}");
                assert!(d.get(i).abs() >= *e);
            }
        }
    }

    #[test]
    fn sign_convention() {
        let g = Grid::centered(2, &[33, 33], 1.0 / 32.0).unwrap();
        let set = ball(&g, [0.0; 3], 0.25);
        let d = signed_distance(&set);
        for i in 0..g.len() {
            assert_eq!(d.get(i) < 0.0, set.contains(i));
            assert!(d.get(i).abs() >= 0.5 * g.spacing() - 1e-15);
        }
    }

    #[test]
    fn full_box_measures_distance_to_box_boundary() {
        let g = Grid::new(2, &[8, 8], 0.125, &[0.0, 0.0]).unwrap();
        let d = signed_distance(&GridSet::full(&g));
        assert!((d.get(g.index([3, 3, 0])) + 0.4375).abs() < 1e-12);
        assert!((d.get(g.index([0, 5, 0])) + 0.0625).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_across_cells() {
        let g = Grid::centered(2, &[64, 64], 1.0 / 64.0).unwrap();
        let set = ball(&g, [0.1, 0.0, 0.0], 0.2).union(&ball(&g, [-0.2, 0.1, 0.0], 0.15)).unwrap();
        let d = signed_distance(&set);
        let dx = g.spacing();
        let strides = g.strides();
        for idx in 0..g.len() {
            let c = g.coords(idx);
            for a in 0..2 {
                if c[a] + 1 < g.shape()[a] {
                    let diff = (d.get(idx) - d.get(idx + strides[a])).abs();
                    assert!(diff <= dx + 2.0 * dx);
                }
            }
        }
    }
}
