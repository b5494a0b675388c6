//! The mapping-cylinder disk D, its plane embedding, and the
//! near-homeomorphism H_t = Upsilon composed with an unwrapping of f_t.
//!
//! D is the radius-2 disk decomposed into arcs (y, s): y is the angle on
//! the boundary circle S, s in [0, 1] runs inward, and the s = 1 level is
//! the interval I = [-1, 1] with (y, 1) identified with (-y, 1) via
//! G(y) = cos y. The concrete embedding used throughout is
//!
//!   eta(y, s) = ((2 - s) cos y, 2(1 - s) sin y),
//!
//! whose level sets are nested ellipses with semi-axes (2-s, 2-2s). The
//! disk is convex, so the straight-segment interpolation in `unwrap` stays
//! inside, and inverting eta is a monotone one-dimensional root find.
//!
//! The unwrapping f_bar here is the identity on the annulus s <= 3/4; on
//! s in [3/4, 1] it interpolates linearly in the plane toward the injective
//! image of I at the s = 1/2 level given by the angle gamma_t. Angular
//! interpolation would not work: y maps to gamma_t(cos y) with winding
//! degree 0 while the identity has degree 1.

use crate::error::{Error, Result};
use crate::tent_map::TentMap;
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// Point of D in mapping-cylinder coordinates, kept canonical:
/// y in [0, 2pi), and y in [0, pi] when s = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderPoint {
    y: f64,
    s: f64,
}

impl CylinderPoint {
    pub fn new(y: f64, s: f64) -> Result<Self> {
        if !(-1e-12..=1.0 + 1e-12).contains(&s) {
            return Err(Error::Domain { what: "s", value: s });
        }
        let s = s.clamp(0.0, 1.0);
        let mut y = y.rem_euclid(TWO_PI);
        if s == 1.0 && y > PI {
            y = TWO_PI - y;
        }
        Ok(CylinderPoint { y, s })
    }

    /// The point of I with value x, i.e. (arccos x, 1).
    pub fn interval_point(x: f64) -> Self {
        CylinderPoint { y: x.clamp(-1.0, 1.0).acos(), s: 1.0 }
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn on_interval(&self) -> bool {
        self.s == 1.0
    }

    /// The interval value cos y, defined only on the s = 1 level.
    pub fn interval_value(&self) -> Option<f64> {
        self.on_interval().then(|| self.y.cos())
    }

    pub fn plane(&self) -> PlanePoint {
        eta(*self)
    }

    pub fn plane_dist(&self, other: &CylinderPoint) -> f64 {
        self.plane().dist(&other.plane())
    }
}

/// Point of the plane, constrained to the closed radius-2 disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanePoint {
    pub u: f64,
    pub v: f64,
}

impl PlanePoint {
    pub fn dist(&self, other: &PlanePoint) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// The embedding eta(y, s) = ((2-s) cos y, 2(1-s) sin y).
pub fn eta(p: CylinderPoint) -> PlanePoint {
    PlanePoint {
        u: (2.0 - p.s) * p.y.cos(),
        v: 2.0 * (1.0 - p.s) * p.y.sin(),
    }
}

/// Inverse coordinate chart: the unique (y, s) with eta(y, s) = q.
///
/// s is found by a bisection bracketing the nested-ellipse level of q,
/// polished with a few Newton steps so that points crowding the nearly
/// collapsed ellipses near s = 1 still recover y accurately. Points on the
/// open slit v = 0, |u| < 1 return the canonical s = 1 representative with
/// y = arccos u in (0, pi).
pub fn eta_inverse(q: PlanePoint) -> Result<CylinderPoint> {
    let r2 = q.u * q.u + q.v * q.v;
    if r2 > 4.0 * (1.0 + 1e-9) {
        return Err(Error::OutsideDisk { u: q.u, v: q.v });
    }
    if q.v == 0.0 {
        return if q.u.abs() < 1.0 {
            Ok(CylinderPoint { y: q.u.acos(), s: 1.0 })
        } else {
            let s = (2.0 - q.u.abs()).clamp(0.0, 1.0);
            let y = if q.u >= 0.0 { 0.0 } else { PI };
            Ok(CylinderPoint { y, s })
        };
    }

    // g(s) = u^2/(2-s)^2 + v^2/(2-2s)^2 - 1 is strictly increasing on [0, 1)
    // with g(1-) = +infinity; the root is the level of q.
    let g = |s: f64| q.u * q.u / ((2.0 - s) * (2.0 - s)) + q.v * q.v / ((2.0 - 2.0 * s) * (2.0 - 2.0 * s)) - 1.0;
    let dg = |s: f64| 2.0 * q.u * q.u / (2.0 - s).powi(3) + 4.0 * q.v * q.v / (2.0 - 2.0 * s).powi(3);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if g(lo) > 0.0 {
        // Marginally outside the boundary circle within tolerance.
        let y = q.v.atan2(q.u).rem_euclid(TWO_PI);
        return Ok(CylinderPoint { y, s: 0.0 });
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut s = lo;
    for _ in 0..4 {
        let step = g(s) / dg(s);
        let next = s - step;
        if next > 0.0 && next < 1.0 {
            s = next;
        }
        if step.abs() < 1e-16 {
            break;
        }
    }
    let y = (q.v / (2.0 - 2.0 * s)).atan2(q.u / (2.0 - s)).rem_euclid(TWO_PI);
    Ok(CylinderPoint { y, s })
}

/// The quotient near-homeomorphism: doubles s below 1/2 and collapses the
/// annulus s in [1/2, 1] onto I.
pub fn upsilon(p: CylinderPoint) -> CylinderPoint {
    if p.s <= 0.5 {
        CylinderPoint { y: p.y, s: 2.0 * p.s }
    } else {
        CylinderPoint::interval_point(p.y.cos())
    }
}

/// Unwrapped image angle of x under f_t: gamma_t(x) = arccos(f_t(x)) on the
/// ascending branch and -arccos(f_t(x)) on the descending one.
///
/// Strictly decreasing from arccos(3-2t) at x = -1 to -pi at x = 1, so the
/// induced map on I is injective, and cos(gamma_t(x)) = f_t(x) by
/// construction.
pub fn gamma(map: &TentMap, x: f64) -> f64 {
    let f = map.apply(x.clamp(-1.0, 1.0));
    if x <= map.critical_point() {
        f.acos()
    } else {
        -(f.acos())
    }
}

/// The unwrapping f_bar_t: identity on s <= 3/4; on s in [3/4, 1] the point
/// moves along the plane segment from eta(y, 3/4) to eta(gamma_t(cos y), 1/2)
/// at parameter 4(s - 3/4). At s = 1 the image is exactly
/// (gamma_t(cos y), 1/2), which depends only on cos y, so the map is well
/// defined across the slit identification.
pub fn unwrap(map: &TentMap, p: CylinderPoint) -> CylinderPoint {
    if p.s <= 0.75 {
        return p;
    }
    let target_y = gamma(map, p.y.cos()).rem_euclid(TWO_PI);
    if p.s == 1.0 {
        return CylinderPoint { y: target_y, s: 0.5 };
    }
    let start = eta(CylinderPoint { y: p.y, s: 0.75 });
    let target = eta(CylinderPoint { y: target_y, s: 0.5 });
    let lam = (4.0 * (p.s - 0.75)).clamp(0.0, 1.0);
    let q = PlanePoint {
        u: (1.0 - lam) * start.u + lam * target.u,
        v: (1.0 - lam) * start.v + lam * target.v,
    };
    eta_inverse(q).expect("segment between disk points stays inside the disk")
}

/// One step of the near-homeomorphism H_t = Upsilon . f_bar_t.
///
/// Explicitly: (y, 2s) on the doubling region s <= 1/2; the interval point
/// tau(y) = cos y on the collar s in [1/2, 3/4]; on I it is f_t itself.
pub fn h_step(map: &TentMap, p: CylinderPoint) -> CylinderPoint {
    if p.s == 1.0 {
        return CylinderPoint::interval_point(map.apply(p.y.cos()));
    }
    if p.s <= 0.5 {
        return CylinderPoint { y: p.y, s: 2.0 * p.s };
    }
    if p.s <= 0.75 {
        return CylinderPoint::interval_point(p.y.cos());
    }
    upsilon(unwrap(map, p))
}
