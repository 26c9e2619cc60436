//! Occupancy from triangle soup via the generalized winding number. The
//! solid angle of every triangle is summed exactly (no hierarchical
//! approximation); batches amortize the O(#triangles) cost per query across
//! threads.

use super::{FieldCore, Label, OccupancyField};
use crate::geom::{Aabb, Vec3};
use rayon::prelude::*;
use std::f64::consts::PI;

pub struct MeshWindingField {
    core: FieldCore,
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    threshold: f64,
}

impl MeshWindingField {
    /// `threshold` is the winding value separating outside from inside; 0.5
    /// is correct for closed, consistently oriented meshes.
    pub fn new(
        domain: Aabb,
        vertices: Vec<Vec3>,
        triangles: Vec<[u32; 3]>,
        threshold: f64,
    ) -> Self {
        MeshWindingField {
            core: FieldCore::new(domain),
            vertices,
            triangles,
            threshold,
        }
    }

    /// Domain defaults to the mesh bounding box with 20% padding.
    pub fn with_default_domain(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Self {
        let mut lo = Vec3 { x: f64::INFINITY, y: f64::INFINITY, z: f64::INFINITY };
        let mut hi = -lo;
        for v in &vertices {
            lo = lo.min_component_wise(*v);
            hi = hi.max_component_wise(*v);
        }
        let domain = Aabb::new(lo, hi).scaled(1.2);
        Self::new(domain, vertices, triangles, 0.5)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    /// Generalized winding number of `p`: 1 deep inside a closed mesh, 0 far
    /// outside, fractional near holes or self-intersections.
    pub fn winding_number(&self, p: Vec3) -> f64 {
        let mut total = 0.0;
        for t in &self.triangles {
            let a = self.vertices[t[0] as usize] - p;
            let b = self.vertices[t[1] as usize] - p;
            let c = self.vertices[t[2] as usize] - p;
            let (la, lb, lc) = (a.length(), b.length(), c.length());
            let det = a.dot(b.cross(c));
            let denom = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
            total += 2.0 * det.atan2(denom);
        }
        total / (4.0 * PI)
    }
}

impl OccupancyField for MeshWindingField {
    fn domain(&self) -> Aabb {
        self.core.domain()
    }

    fn classify_batch(&self, points: &[Vec3]) -> Vec<Label> {
        self.core.add(points.len());
        let eval = |p: &Vec3| {
            if self.winding_number(*p) >= self.threshold {
                Label::Inside
            } else {
                Label::Outside
            }
        };
        if points.len() >= 16 {
            points.par_iter().map(eval).collect()
        } else {
            points.iter().map(eval).collect()
        }
    }

    fn eval_count(&self) -> u64 {
        self.core.count()
    }
}
