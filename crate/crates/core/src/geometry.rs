//! Small 2-D geometry helpers shared by the ray tracer, the localizer and
//! the shape reconstruction.

use nalgebra::Vector2;

/// Points and directions in the scene plane, in metres.
pub type Vec2 = Vector2<f64>;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// z-component of the 3-D cross product of two plane vectors.
#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Rotate a vector counter-clockwise by 90 degrees.
#[inline]
pub fn perp(v: &Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

#[inline]
pub fn rotate(v: &Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// A closed line segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Vec2,
    pub end: Vec2,
}

impl Segment {
    pub fn new(start: Vec2, end: Vec2) -> Self {
        Self { start, end }
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    pub fn midpoint(&self) -> Vec2 {
        (self.start + self.end) * 0.5
    }

    pub fn direction(&self) -> Vec2 {
        (self.end - self.start).normalize()
    }

    /// Euclidean distance from `p` to the closest point of the segment.
    pub fn distance_to(&self, p: &Vec2) -> f64 {
        let d = self.end - self.start;
        let len2 = d.norm_squared();
        if len2 == 0.0 {
            return (p - self.start).norm();
        }
        let t = ((p - self.start).dot(&d) / len2).clamp(0.0, 1.0);
        (p - (self.start + d * t)).norm()
    }
}

/// An infinite line `a*x + b*y + c = 0` with `(a, b)` a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Line {
    /// Line through `point` with the given (not necessarily unit) normal.
    pub fn from_point_normal(point: &Vec2, normal: &Vec2) -> Self {
        let n = normal.normalize();
        Self {
            a: n.x,
            b: n.y,
            c: -n.dot(point),
        }
    }

    /// Line through `point` running along `direction`.
    pub fn from_point_direction(point: &Vec2, direction: &Vec2) -> Self {
        Self::from_point_normal(point, &perp(direction))
    }

    pub fn normal(&self) -> Vec2 {
        Vec2::new(self.a, self.b)
    }

    pub fn direction(&self) -> Vec2 {
        Vec2::new(-self.b, self.a)
    }

    /// Undirected direction angle in `[0, pi)`.
    pub fn angle(&self) -> f64 {
        let d = self.direction();
        d.y.atan2(d.x).rem_euclid(std::f64::consts::PI)
    }

    pub fn signed_distance(&self, p: &Vec2) -> f64 {
        self.a * p.x + self.b * p.y + self.c
    }

    pub fn distance(&self, p: &Vec2) -> f64 {
        self.signed_distance(p).abs()
    }

    /// Coordinate of the orthogonal projection of `p` along the line direction.
    pub fn project(&self, p: &Vec2) -> f64 {
        self.direction().dot(p)
    }

    /// Same line with the normal flipped.
    pub fn flipped(&self) -> Self {
        Self {
            a: -self.a,
            b: -self.b,
            c: -self.c,
        }
    }

    /// Intersection point, or `None` for (near-)parallel lines.
    pub fn intersect(&self, other: &Line) -> Option<Vec2> {
        let det = self.a * other.b - self.b * other.a;
        if det.abs() < 1e-12 {
            return None;
        }
        let x = (self.b * other.c - other.b * self.c) / det;
        let y = (other.a * self.c - self.a * other.c) / det;
        Some(Vec2::new(x, y))
    }
}

/// Absolute difference of two undirected line angles, folded into `[0, pi/2]`.
pub fn undirected_angle_diff(a: f64, b: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let d = (a - b).rem_euclid(pi);
    d.min(pi - d)
}
