//! Planar geometry used by the forwarding policies.
//!
//! Angles cross the API in degrees. Magnitudes below [`EPS`] are treated as
//! zero; deployments keep nodes at least one meter apart so real inputs never
//! get near it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Collinearity / degeneracy tolerance in meters.
pub const EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    fn sub(self, o: Position) -> (f64, f64) {
        (self.x - o.x, self.y - o.y)
    }

    /// Bearing of `to` seen from `self`, radians in (-pi, pi].
    pub fn bearing(self, to: Position) -> f64 {
        let (dx, dy) = to.sub(self);
        dy.atan2(dx)
    }
}

impl From<(f64, f64)> for Position {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Euclidean distance.
pub fn distance(a: Position, b: Position) -> f64 {
    let (dx, dy) = b.sub(a);
    dx.hypot(dy)
}

fn check_ray(u: Position, p: Position, what: &'static str) -> Result<(f64, f64), GeometryError> {
    let v = p.sub(u);
    if v.0.hypot(v.1) < EPS {
        return Err(GeometryError::Degenerate(what));
    }
    Ok(v)
}

/// Signed angle at `u` from ray u→d to ray u→v, degrees in (-180, 180].
/// Positive means `v` lies counterclockwise of the line toward `d`.
pub fn signed_angle(u: Position, v: Position, d: Position) -> Result<f64, GeometryError> {
    let a = check_ray(u, v, "v coincides with u")?;
    let b = check_ray(u, d, "d coincides with u")?;
    let cross = b.0 * a.1 - b.1 * a.0;
    let dot = b.0 * a.0 + b.1 * a.1;
    let mut deg = cross.atan2(dot).to_degrees();
    if deg <= -180.0 {
        deg = 180.0;
    }
    Ok(deg)
}

/// Unsigned angle ∠vud in [0, 180].
pub fn angle_offset(u: Position, v: Position, d: Position) -> Result<f64, GeometryError> {
    signed_angle(u, v, d).map(f64::abs)
}

/// Scalar projection of u→v onto the unit vector u→d. Negative when `v` is
/// behind `u`.
pub fn projection_advance(u: Position, v: Position, d: Position) -> Result<f64, GeometryError> {
    let b = check_ray(u, d, "d coincides with u")?;
    let a = v.sub(u);
    Ok((a.0 * b.0 + a.1 * b.1) / b.0.hypot(b.1))
}

/// Proper intersection point of segments p1p2 and q1q2, if any.
pub fn segment_intersection(
    p1: Position,
    p2: Position,
    q1: Position,
    q2: Position,
) -> Option<Position> {
    let r = p2.sub(p1);
    let s = q2.sub(q1);
    let denom = r.0 * s.1 - r.1 * s.0;
    if denom.abs() < EPS {
        return None;
    }
    let qp = q1.sub(p1);
    let t = (qp.0 * s.1 - qp.1 * s.0) / denom;
    let w = (qp.0 * r.1 - qp.1 * r.0) / denom;
    let tol = 1e-9;
    if t > tol && t < 1.0 - tol && w > -tol && w < 1.0 + tol {
        Some(Position::new(p1.x + t * r.0, p1.y + t * r.1))
    } else {
        None
    }
}

/// True when the open segments p1p2 and q1q2 cross at an interior point of both.
pub fn segments_cross(p1: Position, p2: Position, q1: Position, q2: Position) -> bool {
    fn orient(a: Position, b: Position, c: Position) -> f64 {
        (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
    }
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    let tol = 1e-9;
    ((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol))
        && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol))
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn pos() -> impl Strategy<Value = Position> {
        (-500.0f64..500.0, -500.0f64..500.0).prop_map(|(x, y)| Position::new(x, y))
    }

    fn rotate(p: Position, theta: f64, t: (f64, f64)) -> Position {
        let (s, c) = theta.sin_cos();
        Position::new(c * p.x - s * p.y + t.0, s * p.x + c * p.y + t.1)
    }

    proptest! {
        #[test]
        fn distance_symmetric_and_triangle(a in pos(), b in pos(), c in pos()) {
            prop_assert_eq!(distance(a, b), distance(b, a));
            prop_assert!(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9);
        }

        #[test]
        fn offset_is_abs_signed(u in pos(), v in pos(), d in pos()) {
            prop_assume!(distance(u, v) > 1e-6 && distance(u, d) > 1e-6);
            let o = angle_offset(u, v, d).unwrap();
            let s = signed_angle(u, v, d).unwrap();
            prop_assert_eq!(o, s.abs());
            prop_assert!((0.0..=180.0).contains(&o));
            prop_assert!(s > -180.0 && s <= 180.0);
        }

        #[test]
        fn offset_rigid_motion_invariant(
            u in pos(), v in pos(), d in pos(),
            theta in 0.0f64..std::f64::consts::TAU,
            tx in -100.0f64..100.0, ty in -100.0f64..100.0,
        ) {
            prop_assume!(distance(u, v) > 1e-3 && distance(u, d) > 1e-3);
            let a = angle_offset(u, v, d).unwrap();
            let b = angle_offset(
                rotate(u, theta, (tx, ty)),
                rotate(v, theta, (tx, ty)),
                rotate(d, theta, (tx, ty)),
            ).unwrap();
            prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
        }

        #[test]
        fn projection_of_destination_is_its_distance(u in pos(), d in pos()) {
            prop_assume!(distance(u, d) > 1e-6);
            let adv = projection_advance(u, d, d).unwrap();
            prop_assert!((adv - distance(u, d)).abs() < 1e-9);
        }
    }
}
