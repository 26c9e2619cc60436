//! Closed-form occupancy from CSG expressions over signed-distance
//! primitives. The sign is exact everywhere; the distance magnitude is exact
//! for lone (possibly rigidly transformed) primitives and a conservative
//! lower bound once boolean operators are involved.

use super::{FieldCore, FieldError, Label, OccupancyField};
use crate::geom::{Aabb, Vec3};
use rand::Rng;
use rayon::prelude::*;

/// Rigid motion as a 3x4 row-major matrix (rotation columns must be
/// orthonormal; this is checked at construction, not re-verified per query).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub rows: [[f64; 4]; 3],
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rows: [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
            ],
        }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        let r = &self.rows;
        let cols = [
            Vec3 { x: r[0][0], y: r[1][0], z: r[2][0] },
            Vec3 { x: r[0][1], y: r[1][1], z: r[2][1] },
            Vec3 { x: r[0][2], y: r[1][2], z: r[2][2] },
        ];
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                if (cols[i].dot(cols[j]) - want).abs() > 1e-9 {
                    return Err(FieldError::Parse(
                        "transform rotation part is not orthonormal".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        let r = &self.rows;
        Vec3 {
            x: r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z + r[0][3],
            y: r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z + r[1][3],
            z: r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z + r[2][3],
        }
    }

    /// Inverse of a rigid motion: transpose the rotation, negate-rotate the
    /// translation.
    pub fn inverse_apply(&self, p: Vec3) -> Vec3 {
        let r = &self.rows;
        let q = Vec3 { x: p.x - r[0][3], y: p.y - r[1][3], z: p.z - r[2][3] };
        Vec3 {
            x: r[0][0] * q.x + r[1][0] * q.y + r[2][0] * q.z,
            y: r[0][1] * q.x + r[1][1] * q.y + r[2][1] * q.z,
            z: r[0][2] * q.x + r[1][2] * q.y + r[2][2] * q.z,
        }
    }

    fn compose(&self, inner: &RigidTransform) -> RigidTransform {
        let mut rows = [[0.0; 4]; 3];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate().take(3) {
                *cell = (0..3).map(|k| self.rows[i][k] * inner.rows[k][j]).sum();
            }
            row[3] = (0..3).map(|k| self.rows[i][k] * inner.rows[k][3]).sum::<f64>()
                + self.rows[i][3];
        }
        RigidTransform { rows }
    }
}

#[derive(Clone, Debug)]
pub enum Csg {
    Sphere { center: Vec3, radius: f64 },
    /// Axis-aligned box given by center and half extents.
    Cuboid { center: Vec3, half_extents: Vec3 },
    /// Torus around the z axis through `center`.
    Torus { center: Vec3, major_radius: f64, minor_radius: f64 },
    /// Half space `dot(normal, p) <= offset` is inside.
    HalfSpace { normal: Vec3, offset: f64 },
    Union(Vec<Csg>),
    Intersection(Vec<Csg>),
    /// First child minus the second.
    Difference(Box<Csg>, Box<Csg>),
    Transformed { transform: RigidTransform, node: Box<Csg> },
}

impl Csg {
    /// Signed distance, negative inside. Exact for primitives, conservative
    /// in magnitude (never overestimating the true distance) for booleans.
    pub fn signed_distance(&self, p: Vec3) -> f64 {
        match self {
            Csg::Sphere { center, radius } => p.distance(*center) - radius,
            Csg::Cuboid { center, half_extents } => {
                let d = p - *center;
                let q = Vec3 {
                    x: d.x.abs() - half_extents.x,
                    y: d.y.abs() - half_extents.y,
                    z: d.z.abs() - half_extents.z,
                };
                let outside = Vec3 {
                    x: q.x.max(0.0),
                    y: q.y.max(0.0),
                    z: q.z.max(0.0),
                }
                .length();
                outside + q.x.max(q.y).max(q.z).min(0.0)
            }
            Csg::Torus { center, major_radius, minor_radius } => {
                let d = p - *center;
                let ring = (d.x * d.x + d.y * d.y).sqrt() - major_radius;
                (ring * ring + d.z * d.z).sqrt() - minor_radius
            }
            Csg::HalfSpace { normal, offset } => {
                (normal.dot(p) - offset) / normal.length()
            }
            Csg::Union(children) => children
                .iter()
                .map(|c| c.signed_distance(p))
                .fold(f64::INFINITY, f64::min),
            Csg::Intersection(children) => children
                .iter()
                .map(|c| c.signed_distance(p))
                .fold(f64::NEG_INFINITY, f64::max),
            Csg::Difference(a, b) => a.signed_distance(p).max(-b.signed_distance(p)),
            Csg::Transformed { transform, node } => {
                node.signed_distance(transform.inverse_apply(p))
            }
        }
    }

    /// Whether `signed_distance` is the exact Euclidean distance to the
    /// surface (single primitive, possibly rigidly transformed).
    fn distance_is_exact(&self) -> bool {
        match self {
            Csg::Sphere { .. } | Csg::Cuboid { .. } | Csg::Torus { .. } | Csg::HalfSpace { .. } => true,
            Csg::Transformed { node, .. } => node.distance_is_exact(),
            Csg::Union(c) => c.len() == 1 && c[0].distance_is_exact(),
            Csg::Intersection(c) => c.len() == 1 && c[0].distance_is_exact(),
            Csg::Difference(..) => false,
        }
    }

    /// Leaf primitives with their world transforms and surface areas.
    fn collect_leaves(&self, t: &RigidTransform, out: &mut Vec<(Csg, RigidTransform, f64)>) {
        match self {
            Csg::Sphere { radius, .. } => {
                out.push((self.clone(), *t, 4.0 * std::f64::consts::PI * radius * radius))
            }
            Csg::Cuboid { half_extents: h, .. } => {
                out.push((self.clone(), *t, 8.0 * (h.x * h.y + h.y * h.z + h.z * h.x)))
            }
            Csg::Torus { major_radius, minor_radius, .. } => out.push((
                self.clone(),
                *t,
                4.0 * std::f64::consts::PI * std::f64::consts::PI * major_radius * minor_radius,
            )),
            Csg::HalfSpace { .. } => out.push((self.clone(), *t, f64::INFINITY)),
            Csg::Union(c) | Csg::Intersection(c) => {
                for child in c {
                    child.collect_leaves(t, out);
                }
            }
            Csg::Difference(a, b) => {
                a.collect_leaves(t, out);
                b.collect_leaves(t, out);
            }
            Csg::Transformed { transform, node } => {
                node.collect_leaves(&t.compose(transform), out)
            }
        }
    }

    /// Uniform point on the primitive's own surface. Only valid for leaves.
    fn sample_leaf_surface(&self, rng: &mut impl Rng) -> Option<Vec3> {
        match *self {
            Csg::Sphere { center, radius } => {
                Some(center + random_unit(rng) * radius)
            }
            Csg::Cuboid { center, half_extents: h } => {
                let areas = [h.y * h.z, h.z * h.x, h.x * h.y]; // per face pair, /4
                let total = areas[0] + areas[1] + areas[2];
                let mut pick = rng.gen_range(0.0..total);
                let mut axis = 0;
                for (i, a) in areas.iter().enumerate() {
                    if pick < *a {
                        axis = i;
                        break;
                    }
                    pick -= a;
                    axis = i;
                }
                let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let u = rng.gen_range(-1.0..1.0);
                let v = rng.gen_range(-1.0..1.0);
                let p = match axis {
                    0 => Vec3 { x: side * h.x, y: u * h.y, z: v * h.z },
                    1 => Vec3 { x: u * h.x, y: side * h.y, z: v * h.z },
                    _ => Vec3 { x: u * h.x, y: v * h.y, z: side * h.z },
                };
                Some(center + p)
            }
            Csg::Torus { center, major_radius, minor_radius } => {
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                // Tube angle needs area weighting: dA ~ (R + r cos theta).
                let theta = loop {
                    let t = rng.gen_range(0.0..std::f64::consts::TAU);
                    let w = (major_radius + minor_radius * t.cos())
                        / (major_radius + minor_radius);
                    if rng.gen_range(0.0..1.0) < w {
                        break t;
                    }
                };
                let ring = major_radius + minor_radius * theta.cos();
                Some(center + Vec3 {
                    x: ring * phi.cos(),
                    y: ring * phi.sin(),
                    z: minor_radius * theta.sin(),
                })
            }
            _ => None,
        }
    }
}

fn random_unit(rng: &mut impl Rng) -> Vec3 {
    // Marsaglia rejection: uniform on the sphere without trig.
    loop {
        let v = Vec3 {
            x: rng.gen_range(-1.0..1.0),
            y: rng.gen_range(-1.0..1.0),
            z: rng.gen_range(-1.0..1.0),
        };
        let l2 = v.length_squared();
        if l2 > 1e-12 && l2 <= 1.0 {
            return v / l2.sqrt();
        }
    }
}

/// Distance to the zero level set. `exact` is false when the value is only a
/// lower bound (any CSG boolean with more than one effective child).
#[derive(Clone, Copy, Debug)]
pub struct SurfaceDistance {
    pub distance: f64,
    pub exact: bool,
}

pub struct AnalyticField {
    core: FieldCore,
    csg: Csg,
    exact_distance: bool,
}

impl AnalyticField {
    pub fn new(domain: Aabb, csg: Csg) -> Self {
        let exact_distance = csg.distance_is_exact();
        AnalyticField { core: FieldCore::new(domain), csg, exact_distance }
    }

    pub fn sphere(domain: Aabb, center: Vec3, radius: f64) -> Self {
        Self::new(domain, Csg::Sphere { center, radius })
    }

    pub fn torus(domain: Aabb, center: Vec3, major_radius: f64, minor_radius: f64) -> Self {
        Self::new(domain, Csg::Torus { center, major_radius, minor_radius })
    }

    pub fn cuboid(domain: Aabb, center: Vec3, half_extents: Vec3) -> Self {
        Self::new(domain, Csg::Cuboid { center, half_extents })
    }

    pub fn csg(&self) -> &Csg {
        &self.csg
    }

    /// Distance from `p` to the surface. Exact for single primitives; for
    /// boolean combinations the value never exceeds the true distance.
    pub fn surface_distance(&self, p: Vec3) -> SurfaceDistance {
        SurfaceDistance {
            distance: self.csg.signed_distance(p).abs(),
            exact: self.exact_distance,
        }
    }

    /// `count` points uniformly distributed on the surface, by area-weighted
    /// sampling of the leaf primitives with rejection of points swallowed by
    /// the boolean structure. Fails for unbounded primitives (half spaces)
    /// and for expressions whose surface is empty inside the domain.
    pub fn sample_surface(
        &self,
        count: usize,
        rng: &mut impl Rng,
    ) -> Result<Vec<Vec3>, FieldError> {
        let mut leaves = Vec::new();
        self.csg.collect_leaves(&RigidTransform::identity(), &mut leaves);
        if leaves.iter().any(|(_, _, a)| !a.is_finite()) {
            return Err(FieldError::Unsupported(
                "cannot sample the surface of an unbounded primitive".into(),
            ));
        }
        let total_area: f64 = leaves.iter().map(|(_, _, a)| a).sum();
        if total_area <= 0.0 {
            return Err(FieldError::Unsupported("field has no surface area".into()));
        }
        let mut out = Vec::with_capacity(count);
        let max_attempts = count.saturating_mul(1000).max(100_000);
        let mut attempts = 0usize;
        while out.len() < count {
            attempts += 1;
            if attempts > max_attempts {
                return Err(FieldError::Unsupported(
                    "surface sampling rejection rate too high".into(),
                ));
            }
            let mut pick = rng.gen_range(0.0..total_area);
            let mut idx = 0;
            for (i, (_, _, a)) in leaves.iter().enumerate() {
                if pick < *a {
                    idx = i;
                    break;
                }
                pick -= a;
                idx = i;
            }
            let (leaf, t, _) = &leaves[idx];
            let local = leaf.sample_leaf_surface(rng).expect("leaf is bounded");
            let p = t.apply(local);
            // On the boundary of the whole expression, not just the leaf.
            if self.csg.signed_distance(p).abs() <= 1e-9 && self.core.domain().contains(p) {
                out.push(p);
            }
        }
        Ok(out)
    }
}

impl OccupancyField for AnalyticField {
    fn domain(&self) -> Aabb {
        self.core.domain()
    }

    fn classify_batch(&self, points: &[Vec3]) -> Vec<Label> {
        self.core.add(points.len());
        let eval = |p: &Vec3| Label::from_signed_distance(self.csg.signed_distance(*p));
        if points.len() >= 8192 {
            points.par_iter().map(eval).collect()
        } else {
            points.iter().map(eval).collect()
        }
    }

    fn eval_count(&self) -> u64 {
        self.core.count()
    }
}
