//! Exact geometric predicates with symbolic perturbation.
//!
//! Orientation convention throughout the crate: `orient(a, b, c, d) > 0` iff
//! `det[b - a, c - a, d - a] > 0`, i.e. (a, b, c) winds counterclockwise seen
//! from d. This is the negation of Shewchuk's sign, so the wrappers below swap
//! one argument pair when calling into `robust` and `simplicity`.
//!
//! The fast path is the adaptive exact predicate; only a true zero falls
//! through to Simulation of Simplicity, which breaks ties by vertex index.
//! Degenerate inputs (cospherical, coplanar) therefore behave as if every
//! point were displaced by an infinitesimal index-dependent amount, and the
//! perturbed answers are globally consistent.

use crate::geom::Vec3;
use robust::Coord3D;

/// Positions addressed by index, with an optional not-yet-stored query point
/// carrying its future index. Symbolic perturbation needs a stable index for
/// every point involved, including one being located prior to insertion.
#[derive(Clone, Copy)]
pub struct IndexedPoints<'a> {
    points: &'a [Vec3],
    extra: Option<(u32, Vec3)>,
}

impl<'a> IndexedPoints<'a> {
    pub fn new(points: &'a [Vec3]) -> Self {
        IndexedPoints { points, extra: None }
    }

    pub fn with_extra(points: &'a [Vec3], index: u32, position: Vec3) -> Self {
        IndexedPoints { points, extra: Some((index, position)) }
    }

    pub fn get(&self, i: u32) -> Vec3 {
        match self.extra {
            Some((idx, p)) if idx == i => p,
            _ => self.points[i as usize],
        }
    }
}

fn coord(p: Vec3) -> Coord3D<f64> {
    Coord3D { x: p.x, y: p.y, z: p.z }
}

fn na(p: Vec3) -> simplicity::nalgebra::Vector3<f64> {
    simplicity::nalgebra::Vector3::new(p.x, p.y, p.z)
}

fn fetch(list: &IndexedPoints, i: u32) -> simplicity::nalgebra::Vector3<f64> {
    na(list.get(i))
}

/// Perturbed sign of det[b - a, c - a, d - a]: true iff positive.
pub fn orient3d(pts: &IndexedPoints, i: u32, j: u32, k: u32, l: u32) -> bool {
    let (a, b, c, d) = (pts.get(i), pts.get(j), pts.get(k), pts.get(l));
    // robust::orient3d is positive when d is below the ccw plane (a, b, c),
    // the opposite of our determinant.
    let s = robust::orient3d(coord(a), coord(b), coord(c), coord(d));
    if s != 0.0 {
        return s < 0.0;
    }
    // Swapping one pair flips Shewchuk's sign into ours.
    simplicity::orient_3d(pts, fetch, j, i, k, l)
}

/// Perturbed in-sphere test: true iff point `m` lies strictly inside the
/// circumsphere of the positively oriented tetrahedron (i, j, k, l).
pub fn in_sphere(pts: &IndexedPoints, i: u32, j: u32, k: u32, l: u32, m: u32) -> bool {
    let (a, b, c, d, e) = (pts.get(i), pts.get(j), pts.get(k), pts.get(l), pts.get(m));
    // robust::insphere wants its tetrahedron in Shewchuk-positive order; ours
    // is the mirror image, so swap the first pair here as well.
    let s = robust::insphere(coord(b), coord(a), coord(c), coord(d), coord(e));
    if s != 0.0 {
        return s > 0.0;
    }
    simplicity::in_sphere_unoriented(pts, fetch, j, i, k, l, m)
}
