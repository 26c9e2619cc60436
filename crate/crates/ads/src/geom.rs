//! Plain 3D vector and box types. Nothing clever; everything is f64.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub const fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3 { x, y, z }
}

impl Vec3 {
    pub const ZERO: Vec3 = vec3(0.0, 0.0, 0.0);

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        vec3(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn length_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn length(self) -> f64 {
        self.length_squared().sqrt()
    }

    pub fn distance_squared(self, o: Vec3) -> f64 {
        (self - o).length_squared()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).length()
    }

    /// Zero vectors normalize to zero rather than NaN.
    pub fn normalized(self) -> Vec3 {
        let len = self.length();
        if len > 0.0 {
            self / len
        } else {
            Vec3::ZERO
        }
    }

    pub fn lerp(self, o: Vec3, t: f64) -> Vec3 {
        self + (o - self) * t
    }

    pub fn min_component_wise(self, o: Vec3) -> Vec3 {
        vec3(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max_component_wise(self, o: Vec3) -> Vec3 {
        vec3(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Vec3 {
        vec3(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        vec3(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        vec3(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        vec3(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        vec3(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        vec3(self.x / s, self.y / s, self.z / s)
    }
}

/// Axis-aligned box, `min` componentwise below `max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Aabb {
        debug_assert!(min.x <= max.x && min.y <= max.y && min.z <= max.z);
        Aabb { min, max }
    }

    /// The symmetric unit box [-1, 1]^3 used by most fixtures.
    pub fn unit() -> Aabb {
        Aabb::new(vec3(-1.0, -1.0, -1.0), vec3(1.0, 1.0, 1.0))
    }

    pub fn center(self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extents(self) -> Vec3 {
        self.max - self.min
    }

    pub fn volume(self) -> f64 {
        let e = self.extents();
        e.x * e.y * e.z
    }

    pub fn contains(self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    /// Box with the same center, extents scaled by `factor`.
    pub fn scaled(self, factor: f64) -> Aabb {
        let c = self.center();
        let h = self.extents() * (0.5 * factor);
        Aabb::new(c - h, c + h)
    }

    pub fn corners(self) -> [Vec3; 8] {
        let (lo, hi) = (self.min, self.max);
        [
            vec3(lo.x, lo.y, lo.z),
            vec3(hi.x, lo.y, lo.z),
            vec3(lo.x, hi.y, lo.z),
            vec3(hi.x, hi.y, lo.z),
            vec3(lo.x, lo.y, hi.z),
            vec3(hi.x, lo.y, hi.z),
            vec3(lo.x, hi.y, hi.z),
            vec3(hi.x, hi.y, hi.z),
        ]
    }

    /// Center and radius of the circumscribed sphere.
    pub fn bounding_sphere(self) -> (Vec3, f64) {
        let c = self.center();
        (c, (self.max - c).length())
    }

    /// Distance from `p` to the box boundary walls, negative outside.
    pub fn wall_distance(self, p: Vec3) -> f64 {
        let a = p - self.min;
        let b = self.max - p;
        a.x.min(a.y).min(a.z).min(b.x).min(b.y).min(b.z)
    }
}

/// Circumcenter of the triangle (a, b, c) in 3D, in the triangle's plane.
/// Degenerate (near-collinear) triangles fall back to the centroid.
pub fn triangle_circumcenter(a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let n = ab.cross(ac);
    let denom = 2.0 * n.length_squared();
    if denom < 1e-300 {
        return (a + b + c) / 3.0;
    }
    let rel = (n.cross(ab) * ac.length_squared() + ac.cross(n) * ab.length_squared()) / denom;
    a + rel
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_scaling_keeps_center() {
        let b = Aabb::unit().scaled(1.5);
        assert_eq!(b.center(), Vec3::ZERO);
        assert_eq!(b.max, vec3(1.5, 1.5, 1.5));
        assert_eq!(b.volume(), 27.0);
    }

    #[test]
    fn circumcenter_is_equidistant() {
        let a = vec3(0.3, -0.2, 1.1);
        let b = vec3(1.0, 0.4, -0.3);
        let c = vec3(-0.6, 0.9, 0.2);
        let cc = triangle_circumcenter(a, b, c);
        let ra = cc.distance(a);
        assert!((cc.distance(b) - ra).abs() < 1e-12);
        assert!((cc.distance(c) - ra).abs() < 1e-12);
        // In-plane: (cc - a) has no normal component.
        let n = (b - a).cross(c - a).normalized();
        assert!((cc - a).dot(n).abs() < 1e-12);
    }

    #[test]
    fn wall_distance_signs() {
        let b = Aabb::unit();
        assert!(b.wall_distance(vec3(0.0, 0.0, 0.0)) == 1.0);
        assert!(b.wall_distance(vec3(0.9, 0.0, 0.0)) > 0.0);
        assert!(b.wall_distance(vec3(1.1, 0.0, 0.0)) < 0.0);
    }
}
