//! Exact piecewise-linear dynamics of the rescaled core tent family on
//! I = [-1, 1].
//!
//! The slope-t core tent map is f_t(x) = min(t(x-1)+3, t(1-x)-1) with
//! critical point c = 1 - 2/t, so f_t(c) = 1, f_t(1) = -1 and
//! f_t(-1) = 3 - 2t. Both branches are affine with |slope| = t, which keeps
//! preimages of intervals exactly representable by their endpoints; n-fold
//! preimage sets and the critical orbit feed the transfer-operator and
//! cylinder-set machinery downstream. The two-variable family
//! F(x, t) = (f_t(x), t) is realized slice-wise: one `TentMap` per t.

use crate::error::{Error, Result};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Comparison slack for domain checks and branch boundaries.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Core tent map of slope `t` on [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TentMap {
    t: f64,
    c: f64,
}

impl TentMap {
    /// Slope must lie in (1, 2]; the critical point c = 1 - 2/t is cached.
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 1.0 && t <= 2.0) {
            return Err(Error::ParamRange {
                name: "t",
                value: t,
                min: 1.0,
                max: 2.0,
            });
        }
        Ok(TentMap { t, c: 1.0 - 2.0 / t })
    }

    pub fn slope(&self) -> f64 {
        self.t
    }

    pub fn critical_point(&self) -> f64 {
        self.c
    }

    /// Image of the left endpoint, f(-1) = 3 - 2t: the smallest value with
    /// two preimages.
    pub fn left_endpoint_image(&self) -> f64 {
        3.0 - 2.0 * self.t
    }

    /// Unchecked evaluation; the caller guarantees x in [-1, 1].
    ///
    /// The result is clamped to [-1, 1] so that orbits cannot drift out of
    /// the core by accumulated rounding.
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        debug_assert!((-1.0 - DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&x));
        let up = self.t * (x - 1.0) + 3.0;
        let down = self.t * (1.0 - x) - 1.0;
        up.min(down).clamp(-1.0, 1.0)
    }

    /// f_t(x), checked: x may exceed [-1, 1] by at most `DOMAIN_TOL`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(-1.0 - DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&x) {
            return Err(Error::Domain { what: "x", value: x });
        }
        Ok(self.apply(x.clamp(-1.0, 1.0)))
    }

    /// All solutions of f_t(x) = v, in ascending order.
    ///
    /// The descending branch always contributes x = 1 - (v+1)/t; the
    /// ascending branch contributes x = 1 + (v-3)/t exactly when
    /// v >= f(-1) = 3 - 2t. The two coincide (at c) only for v = 1.
    pub fn preimage_points(&self, v: f64) -> Result<Vec<f64>> {
        if !(-1.0 - DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&v) {
            return Err(Error::Domain { what: "v", value: v });
        }
        let v = v.clamp(-1.0, 1.0);
        let right = (1.0 - (v + 1.0) / self.t).clamp(self.c, 1.0);
        let mut out = Vec::with_capacity(2);
        if v >= self.left_endpoint_image() - DOMAIN_TOL {
            let left = (1.0 + (v - 3.0) / self.t).clamp(-1.0, self.c);
            out.push(left);
        }
        if out.first() != Some(&right) {
            out.push(right);
        }
        Ok(out)
    }

    /// Exact n-fold preimage f_t^{-n}(S), computed as n applications of the
    /// one-step preimage.
    pub fn preimage_set(&self, set: &IntervalSet, n: u32) -> IntervalSet {
        let mut cur = set.clone();
        for _ in 0..n {
            cur = self.preimage_step(&cur);
        }
        cur
    }

    fn preimage_step(&self, set: &IntervalSet) -> IntervalSet {
        let mut parts = Vec::with_capacity(2 * set.component_count());
        let lo_img = self.left_endpoint_image();
        for &(a, b) in set.components() {
            // Ascending branch [-1, c]: x = 1 + (v-3)/t, increasing in v;
            // its image is [3-2t, 1].
            if b >= lo_img {
                let va = a.max(lo_img);
                let lo = (1.0 + (va - 3.0) / self.t).clamp(-1.0, self.c);
                let hi = (1.0 + (b - 3.0) / self.t).clamp(-1.0, self.c);
                parts.push((lo, hi));
            }
            // Descending branch [c, 1]: x = 1 - (v+1)/t, decreasing in v;
            // its image is all of [-1, 1].
            let lo = (1.0 - (b + 1.0) / self.t).clamp(self.c, 1.0);
            let hi = (1.0 - (a + 1.0) / self.t).clamp(self.c, 1.0);
            parts.push((lo, hi));
        }
        IntervalSet::from_intervals(parts)
    }

    /// Statistically typical forward orbit starting at `x0` (drawn
    /// uniformly from `seed` when absent).
    pub fn orbit(&self, x0: Option<f64>, seed: u64) -> Orbit {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if self.t == 2.0 {
            // At slope exactly 2 every naive binary-float orbit loses one
            // significand bit per step and collapses onto the fixed point
            // -1 within ~55 iterations. Drive the orbit through the exact
            // conjugacy with the doubling map on 64-bit integer angles
            // instead, refreshing the vacated low bit from the seeded
            // stream: the orbit of a random real, evolved exactly.
            let omega = match x0 {
                Some(x) => (((x + 1.0) / 2.0) * (1u64 << 63) as f64) as u64,
                None => rng.next_u64(),
            };
            Orbit::Doubling { omega, rng }
        } else {
            // Rounding errors are correlated with the state and can bias
            // long-orbit statistics visibly near renormalizable slopes
            // (at t = sqrt 2 the second iterate is conjugate to the slope-2
            // tent). A seeded dither far below histogram resolution breaks
            // that correlation; the acim of these expanding maps moves by
            // O(dither) under it.
            let x = x0.unwrap_or_else(|| {
                2.0 * (rng.next_u64() as f64 / u64::MAX as f64) - 1.0
            });
            Orbit::Float { map: *self, x, rng }
        }
    }

    /// Orbit c, f(c), ..., f^depth(c) with eventual-periodicity detection.
    ///
    /// The Markov flag is set when some orbit point returns within `tol` of
    /// an earlier one; `revisit` records the first such (later, earlier)
    /// index pair. Only used to select oracle parameters, where the
    /// collision is exact up to rounding.
    pub fn critical_orbit(&self, depth: usize, tol: f64) -> CriticalOrbit {
        assert!(depth >= 1 && tol > 0.0);
        let mut points = Vec::with_capacity(depth + 1);
        points.push(self.c);
        let mut revisit = None;
        for j in 1..=depth {
            let next = self.apply(points[j - 1]);
            points.push(next);
            if revisit.is_none() {
                if let Some(i) = points[..j].iter().position(|p| (p - next).abs() <= tol) {
                    revisit = Some((j, i));
                }
            }
        }
        CriticalOrbit {
            markov: revisit.is_some(),
            revisit,
            points,
        }
    }
}

/// Amplitude of the per-step orbit dither; see [`TentMap::orbit`].
pub const ORBIT_DITHER: f64 = 1e-12;

/// Infinite forward orbit; see [`TentMap::orbit`].
#[derive(Debug, Clone)]
pub enum Orbit {
    Float { map: TentMap, x: f64, rng: ChaCha8Rng },
    Doubling { omega: u64, rng: ChaCha8Rng },
}

impl Iterator for Orbit {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        match self {
            Orbit::Float { map, x, rng } => {
                let v = *x;
                let noise = (2.0 * (rng.next_u64() as f64 / u64::MAX as f64) - 1.0) * ORBIT_DITHER;
                *x = (map.apply(v) + noise).clamp(-1.0, 1.0);
                Some(v)
            }
            Orbit::Doubling { omega, rng } => {
                // x = 2u - 1 where u is the [0,1] tent value of the angle.
                let w = *omega;
                let v = if w < 1u64 << 63 {
                    w as f64 / (1u64 << 62) as f64 - 1.0
                } else {
                    3.0 - w as f64 / (1u64 << 62) as f64
                };
                *omega = w.wrapping_shl(1) | (rng.next_u64() & 1);
                Some(v)
            }
        }
    }
}

/// Critical-orbit report; see [`TentMap::critical_orbit`].
#[derive(Debug, Clone)]
pub struct CriticalOrbit {
    pub points: Vec<f64>,
    pub markov: bool,
    /// (j, i) with f^j(c) within tolerance of f^i(c), i < j.
    pub revisit: Option<(usize, usize)>,
}

/// Finite union of disjoint closed subintervals of [-1, 1], kept sorted.
///
/// Degenerate single-point components are retained: boundary counting for
/// the simple-set bound is a count of points, and a point component has one
/// boundary point.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet {
    components: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { components: Vec::new() }
    }

    /// The whole core interval [-1, 1].
    pub fn full() -> Self {
        IntervalSet { components: vec![(-1.0, 1.0)] }
    }

    pub fn singleton(a: f64, b: f64) -> Self {
        Self::from_intervals(vec![(a, b)])
    }

    /// Sorts, clamps to [-1, 1], merges overlapping or touching intervals.
    pub fn from_intervals(intervals: Vec<(f64, f64)>) -> Self {
        let mut parts: Vec<(f64, f64)> = intervals
            .into_iter()
            .filter(|&(a, b)| b >= a && b >= -1.0 && a <= 1.0)
            .map(|(a, b)| (a.clamp(-1.0, 1.0), b.clamp(-1.0, 1.0)))
            .collect();
        parts.sort_by(|x, y| x.partial_cmp(y).expect("interval endpoints must not be NaN"));
        let mut components: Vec<(f64, f64)> = Vec::with_capacity(parts.len());
        for (a, b) in parts {
            match components.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => components.push((a, b)),
            }
        }
        IntervalSet { components }
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.components
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Number of boundary points: 2 per component, 1 for a degenerate one.
    pub fn boundary_count(&self) -> usize {
        self.components
            .iter()
            .map(|&(a, b)| if a == b { 1 } else { 2 })
            .sum()
    }

    pub fn total_length(&self) -> f64 {
        self.components.iter().map(|&(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.components.iter().any(|&(a, b)| a <= x && x <= b)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.components.len() && j < other.components.len() {
            let (a1, b1) = self.components[i];
            let (a2, b2) = other.components[j];
            let lo = a1.max(a2);
            let hi = b1.min(b2);
            if lo <= hi {
                out.push((lo, hi));
            }
            if b1 <= b2 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { components: out }
    }
}
