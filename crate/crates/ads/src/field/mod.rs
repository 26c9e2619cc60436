//! Occupancy fields: black boxes mapping points to inside/outside labels.
//!
//! Every query goes through [`OccupancyField::classify_batch`] so that
//! implementations can vectorize or parallelize internally and so that the
//! evaluation counter, the budget currency of the whole crate, is maintained
//! in exactly one place per field. Counters are atomic; fields are immutable
//! after construction and safe to share across threads.

mod analytic;
mod grid;
mod winding;

pub use analytic::{AnalyticField, Csg, RigidTransform, SurfaceDistance};
pub use grid::{GridField, GridInterpolation};
pub use winding::MeshWindingField;

use crate::geom::{Aabb, Vec3};
use std::sync::atomic::{AtomicU64, Ordering};

/// Binary occupancy label. There is no third state: boundary points count as
/// inside.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Inside,
    Outside,
}

impl Label {
    pub fn sign(self) -> i8 {
        match self {
            Label::Inside => 1,
            Label::Outside => -1,
        }
    }

    pub fn is_inside(self) -> bool {
        self == Label::Inside
    }

    /// Scalar convention used everywhere: negative-or-zero means inside.
    pub fn from_signed_distance(d: f64) -> Label {
        if d <= 0.0 {
            Label::Inside
        } else {
            Label::Outside
        }
    }
}

pub trait OccupancyField: Sync {
    /// Bounding box the surface is expected to live in. Queries outside are
    /// legal; all provided field types classify far-away points as outside.
    fn domain(&self) -> Aabb;

    /// Classify a batch of points. Output order matches input order. Each
    /// call adds `points.len()` to the evaluation counter.
    fn classify_batch(&self, points: &[Vec3]) -> Vec<Label>;

    /// Total points classified so far, across threads.
    fn eval_count(&self) -> u64;

    fn classify_one(&self, p: Vec3) -> Label {
        self.classify_batch(std::slice::from_ref(&p))[0]
    }
}

/// Domain plus the shared evaluation counter; embedded by every field type.
pub(crate) struct FieldCore {
    domain: Aabb,
    evals: AtomicU64,
}

impl FieldCore {
    pub(crate) fn new(domain: Aabb) -> Self {
        FieldCore { domain, evals: AtomicU64::new(0) }
    }

    pub(crate) fn domain(&self) -> Aabb {
        self.domain
    }

    pub(crate) fn add(&self, n: usize) {
        self.evals.fetch_add(n as u64, Ordering::Relaxed);
    }

    pub(crate) fn count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec3;

    /// Wrapper that independently counts points sent through it. Used to
    /// check that the inner field's own accounting is exact.
    pub struct CountingField<'a> {
        inner: &'a dyn OccupancyField,
        seen: AtomicU64,
    }

    impl<'a> CountingField<'a> {
        pub fn new(inner: &'a dyn OccupancyField) -> Self {
            CountingField { inner, seen: AtomicU64::new(0) }
        }

        pub fn seen(&self) -> u64 {
            self.seen.load(Ordering::Relaxed)
        }
    }

    impl OccupancyField for CountingField<'_> {
        fn domain(&self) -> Aabb {
            self.inner.domain()
        }

        fn classify_batch(&self, points: &[Vec3]) -> Vec<Label> {
            self.seen.fetch_add(points.len() as u64, Ordering::Relaxed);
            self.inner.classify_batch(points)
        }

        fn eval_count(&self) -> u64 {
            self.inner.eval_count()
        }
    }

    #[test]
    fn counter_matches_instrumented_wrapper() {
        let f = AnalyticField::sphere(Aabb::unit(), Vec3::ZERO, 0.5);
        let w = CountingField::new(&f);
        let pts: Vec<Vec3> = (0..137).map(|i| vec3(i as f64 * 0.01, 0.0, 0.0)).collect();
        w.classify_batch(&pts);
        w.classify_batch(&pts[..13]);
        w.classify_one(vec3(2.0, 0.0, 0.0));
        assert_eq!(w.seen(), 137 + 13 + 1);
        assert_eq!(f.eval_count(), w.seen());
    }

    #[test]
    fn batch_output_matches_singles() {
        let f = AnalyticField::sphere(Aabb::unit(), Vec3::ZERO, 0.5);
        let pts = [
            vec3(0.0, 0.0, 0.0),
            vec3(0.5, 0.0, 0.0),
            vec3(2.0, 0.0, 0.0),
            vec3(0.3, 0.3, 0.1),
        ];
        let batch = f.classify_batch(&pts);
        for (p, &l) in pts.iter().zip(&batch) {
            assert_eq!(f.classify_one(*p), l);
        }
        assert_eq!(batch[0], Label::Inside);
        assert_eq!(batch[1], Label::Inside); // boundary resolves inside
        assert_eq!(batch[2], Label::Outside);
    }
}
