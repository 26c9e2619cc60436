//! Occupancy from a dense scalar grid. Nodes span the domain inclusively;
//! values use the crate-wide convention that non-positive means inside.
//! Points outside the grid extent classify as outside.

use super::{FieldCore, FieldError, Label, OccupancyField};
use crate::geom::{Aabb, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridInterpolation {
    /// Label of the nearest node.
    Nearest,
    /// Trilinear interpolation of the scalar, then the sign.
    Trilinear,
}

pub struct GridField {
    core: FieldCore,
    dims: [usize; 3],
    /// x varies fastest: index = (k * ny + j) * nx + i.
    values: Vec<f32>,
    interpolation: GridInterpolation,
}

impl GridField {
    pub fn new(
        domain: Aabb,
        dims: [usize; 3],
        values: Vec<f32>,
        interpolation: GridInterpolation,
    ) -> Result<Self, FieldError> {
        if dims.iter().any(|&d| d < 2) {
            return Err(FieldError::Parse("grid needs at least 2 nodes per axis".into()));
        }
        if values.len() != dims[0] * dims[1] * dims[2] {
            return Err(FieldError::Parse(format!(
                "grid data length {} does not match dims {:?}",
                values.len(),
                dims
            )));
        }
        Ok(GridField {
            core: FieldCore::new(domain),
            dims,
            values,
            interpolation,
        })
    }

    /// Build by sampling another classifier at the grid nodes. Handy for
    /// tests and for baking analytic fields down.
    pub fn from_field(field: &dyn OccupancyField, dims: [usize; 3]) -> Result<Self, FieldError> {
        let domain = field.domain();
        let mut nodes = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    nodes.push(Self::node_pos(domain, dims, [i, j, k]));
                }
            }
        }
        let labels = field.classify_batch(&nodes);
        let values = labels.iter().map(|l| -f32::from(l.sign())).collect();
        Self::new(domain, dims, values, GridInterpolation::Nearest)
    }

    fn node_pos(domain: Aabb, dims: [usize; 3], idx: [usize; 3]) -> Vec3 {
        let e = domain.extents();
        Vec3 {
            x: domain.min.x + e.x * idx[0] as f64 / (dims[0] - 1) as f64,
            y: domain.min.y + e.y * idx[1] as f64 / (dims[1] - 1) as f64,
            z: domain.min.z + e.z * idx[2] as f64 / (dims[2] - 1) as f64,
        }
    }

    fn value_at(&self, i: usize, j: usize, k: usize) -> f32 {
        self.values[(k * self.dims[1] + j) * self.dims[0] + i]
    }

    fn classify_point(&self, p: Vec3) -> Label {
        let domain = self.core.domain();
        if !domain.contains(p) {
            return Label::Outside;
        }
        let e = domain.extents();
        let fx = (p.x - domain.min.x) / e.x * (self.dims[0] - 1) as f64;
        let fy = (p.y - domain.min.y) / e.y * (self.dims[1] - 1) as f64;
        let fz = (p.z - domain.min.z) / e.z * (self.dims[2] - 1) as f64;
        match self.interpolation {
            GridInterpolation::Nearest => {
                let i = (fx.round() as usize).min(self.dims[0] - 1);
                let j = (fy.round() as usize).min(self.dims[1] - 1);
                let k = (fz.round() as usize).min(self.dims[2] - 1);
                Label::from_signed_distance(f64::from(self.value_at(i, j, k)))
            }
            GridInterpolation::Trilinear => {
                let i = (fx.floor() as usize).min(self.dims[0] - 2);
                let j = (fy.floor() as usize).min(self.dims[1] - 2);
                let k = (fz.floor() as usize).min(self.dims[2] - 2);
                let (tx, ty, tz) = (fx - i as f64, fy - j as f64, fz - k as f64);
                let mut acc = 0.0;
                for dk in 0..2 {
                    for dj in 0..2 {
                        for di in 0..2 {
                            let w = (if di == 0 { 1.0 - tx } else { tx })
                                * (if dj == 0 { 1.0 - ty } else { ty })
                                * (if dk == 0 { 1.0 - tz } else { tz });
                            acc += w * f64::from(self.value_at(i + di, j + dj, k + dk));
                        }
                    }
                }
                Label::from_signed_distance(acc)
            }
        }
    }
}

impl OccupancyField for GridField {
    fn domain(&self) -> Aabb {
        self.core.domain()
    }

    fn classify_batch(&self, points: &[Vec3]) -> Vec<Label> {
        self.core.add(points.len());
        points.iter().map(|p| self.classify_point(*p)).collect()
    }

    fn eval_count(&self) -> u64 {
        self.core.count()
    }
}
