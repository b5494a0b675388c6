//! Finite-depth threads over f_t and H_t, the natural extension, the
//! annulus parameterization Psi_t of the attractor complement, the
//! background measure m, and the cylinder-set algebra over tilted
//! rectangles.
//!
//! Threads are truncations: entry j of a depth-N thread is coordinate x_j
//! of an inverse-limit point, with f_t(x_{j+1}) = x_j. Every metric
//! computation reports the rigorous tail bound 2^{2-N} alongside the
//! truncated sum (diam I = 2, weights 1/2^n).

use crate::acim::Density;
use crate::disk::{h_step, CylinderPoint};
use crate::error::{Error, Result};
use crate::tent_map::{IntervalSet, TentMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// Residual allowed when validating thread conditions.
pub const THREAD_TOL: f64 = 1e-9;

/// Depth-N truncation of a backward orbit: f_t(entries[j+1]) = entries[j].
#[derive(Debug, Clone, PartialEq)]
pub struct Thread {
    t: f64,
    entries: Vec<f64>,
}

impl Thread {
    pub fn new(map: &TentMap, entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::ThreadMismatch("thread must have depth >= 1"));
        }
        for pair in entries.windows(2) {
            if (map.apply(pair[1]) - pair[0]).abs() > THREAD_TOL {
                return Err(Error::ThreadMismatch("entries violate f(x_{n+1}) = x_n"));
            }
        }
        Ok(Thread { t: map.slope(), entries })
    }

    /// Skips the residual check; used where the condition holds by
    /// construction.
    pub(crate) fn from_raw(t: f64, entries: Vec<f64>) -> Self {
        Thread { t, entries }
    }

    pub fn slope(&self) -> f64 {
        self.t
    }

    pub fn depth(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn head(&self) -> f64 {
        self.entries[0]
    }

    /// Truncation to the first n entries.
    pub fn truncate(&self, n: usize) -> Thread {
        Thread { t: self.t, entries: self.entries[..n.min(self.entries.len())].to_vec() }
    }

    /// CSV row `t, x0, x1, ..., x{N-1}`.
    pub fn csv_row(&self) -> String {
        let mut row = self.t.to_string();
        for x in &self.entries {
            row.push(',');
            row.push_str(&x.to_string());
        }
        row
    }
}

/// Natural extension step: prepend f_t(x_0) and drop the last entry, so the
/// depth is preserved.
pub fn nat_ext_step(map: &TentMap, th: &Thread) -> Thread {
    let mut entries = Vec::with_capacity(th.entries.len());
    entries.push(map.apply(th.entries[0]));
    entries.extend_from_slice(&th.entries[..th.entries.len() - 1]);
    Thread { t: th.t, entries }
}

/// Truncated thread metric with its rigorous tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    /// sum_{n < N} d(x_n, y_n)/2^n over the stored entries.
    pub value: f64,
    /// 2^{2-N}: the worst case of the discarded tail.
    pub tail_bound: f64,
}

/// d(x, y) = sum d(x_n, y_n)/2^n over the common depth, plus tail bound.
pub fn thread_metric(a: &Thread, b: &Thread) -> Result<MetricValue> {
    if a.t != b.t {
        return Err(Error::ThreadMismatch("slope parameters differ"));
    }
    if a.entries.len() != b.entries.len() {
        return Err(Error::ThreadMismatch("depths differ"));
    }
    let value = a
        .entries
        .iter()
        .zip(&b.entries)
        .enumerate()
        .map(|(n, (x, y))| (x - y).abs() / (1u64 << n) as f64)
        .sum();
    Ok(MetricValue { value, tail_bound: tail_bound(a.entries.len()) })
}

/// Tail bound 2^{2-N} of a depth-N truncation.
pub fn tail_bound(depth: usize) -> f64 {
    4.0 / (1u64 << depth.min(62)) as f64
}

/// Depth-N truncation of a backward H_t-orbit on the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskThread {
    t: f64,
    entries: Vec<CylinderPoint>,
}

impl DiskThread {
    pub fn new(map: &TentMap, entries: Vec<CylinderPoint>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::ThreadMismatch("disk thread must have depth >= 1"));
        }
        for pair in entries.windows(2) {
            if h_step(map, pair[1]).plane_dist(&pair[0]) > THREAD_TOL {
                return Err(Error::ThreadMismatch("entries violate H(z_{n+1}) = z_n"));
            }
        }
        Ok(DiskThread { t: map.slope(), entries })
    }

    pub fn slope(&self) -> f64 {
        self.t
    }

    pub fn depth(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[CylinderPoint] {
        &self.entries
    }

    pub fn head(&self) -> CylinderPoint {
        self.entries[0]
    }
}

/// Natural extension step on disk threads.
pub fn disk_nat_ext_step(map: &TentMap, th: &DiskThread) -> DiskThread {
    let mut entries = Vec::with_capacity(th.entries.len());
    entries.push(h_step(map, th.entries[0]));
    entries.extend_from_slice(&th.entries[..th.entries.len() - 1]);
    DiskThread { t: th.t, entries }
}

/// Thread metric on disk threads, with plane distance on each entry.
pub fn disk_thread_metric(a: &DiskThread, b: &DiskThread) -> Result<MetricValue> {
    if a.t != b.t {
        return Err(Error::ThreadMismatch("slope parameters differ"));
    }
    if a.entries.len() != b.entries.len() {
        return Err(Error::ThreadMismatch("depths differ"));
    }
    let value = a
        .entries
        .iter()
        .zip(&b.entries)
        .enumerate()
        .map(|(n, (x, y))| x.plane_dist(y) / (1u64 << n) as f64)
        .sum();
    // diam D = 4, so the raw disk tail is 2^{3-N}; keep it explicit.
    Ok(MetricValue { value, tail_bound: 2.0 * tail_bound(a.entries.len()) })
}

/// Point of the half-open annulus A = S x [0, infinity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusPoint {
    pub y: f64,
    pub s: f64,
}

impl AnnulusPoint {
    pub fn new(y: f64, s: f64) -> Result<Self> {
        if s < -1e-12 || !s.is_finite() {
            return Err(Error::Domain { what: "s", value: s });
        }
        Ok(AnnulusPoint { y: y.rem_euclid(TWO_PI), s: s.max(0.0) })
    }
}

/// The conjugated annulus map: doubling below the s = 1 circle, unit
/// translation above it.
pub fn annulus_shift(p: AnnulusPoint) -> AnnulusPoint {
    if p.s <= 1.0 {
        AnnulusPoint { y: p.y, s: 2.0 * p.s }
    } else {
        AnnulusPoint { y: p.y, s: p.s + 1.0 }
    }
}

/// The parameterization Psi_t of the attractor complement, truncated to
/// `depth` entries.
///
/// For s < 1 the thread is the halving chain under (y, s). For s >= 1,
/// with k = floor(s), u = s - k and v = (u+1)/2, the thread starts with the
/// k forward images f^{k-1}(H(y,v)), ..., H(y,v) on I, followed by (y, v)
/// and its halving chain.
pub fn psi(map: &TentMap, p: AnnulusPoint, depth: usize) -> DiskThread {
    assert!(depth >= 1);
    let mut entries = Vec::with_capacity(depth);
    if p.s < 1.0 {
        let mut s = p.s;
        for _ in 0..depth {
            entries.push(CylinderPoint::new(p.y, s).expect("s halves within [0, 1)"));
            s *= 0.5;
        }
    } else {
        let k = p.s.floor() as usize;
        let v = (p.s - p.s.floor() + 1.0) * 0.5;
        let base = CylinderPoint::new(p.y, v).expect("v in [1/2, 1)");
        let mut chain = Vec::with_capacity(k);
        chain.push(h_step(map, base));
        for j in 1..k {
            chain.push(h_step(map, chain[j - 1]));
        }
        for z in chain.iter().rev() {
            entries.push(*z);
        }
        let mut s = v;
        while entries.len() < depth {
            entries.push(CylinderPoint::new(p.y, s).expect("s halves within [0, 1)"));
            s *= 0.5;
        }
        entries.truncate(depth);
    }
    DiskThread { t: map.slope(), entries }
}

/// Inverts Psi_t: reads off (y, s) from the first thread entry off I.
///
/// Errors when every stored entry lies on I, since the truncation is then
/// indistinguishable from an attractor point.
pub fn psi_inverse(th: &DiskThread) -> Result<AnnulusPoint> {
    let z0 = th.entries[0];
    if !z0.on_interval() {
        return Ok(AnnulusPoint { y: z0.y(), s: z0.s() });
    }
    for (k, z) in th.entries.iter().enumerate().skip(1) {
        if !z.on_interval() {
            return Ok(AnnulusPoint { y: z.y(), s: k as f64 + 2.0 * z.s() - 1.0 });
        }
    }
    Err(Error::AllOnInterval { depth: th.entries.len() })
}

/// The background probability measure m on A: y uniform on S, s with
/// density (2/pi)/(1+s^2), i.e. dm = dy ds / (K (1+s^2)) with K = pi^2.
#[derive(Debug, Clone, Copy, Default)]
pub struct AnnulusMeasure;

impl AnnulusMeasure {
    pub const K: f64 = PI * PI;

    /// Density of m at (y, s).
    pub fn density(&self, _y: f64, s: f64) -> f64 {
        1.0 / (Self::K * (1.0 + s * s))
    }

    /// One sample: inverse-CDF in s, uniform in y.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> AnnulusPoint {
        AnnulusPoint {
            y: rng.gen::<f64>() * TWO_PI,
            s: (PI * rng.gen::<f64>() / 2.0).tan(),
        }
    }

    /// One sample conditioned on s in [lo, hi], by inverse CDF on the
    /// restricted range.
    pub fn sample_s_restricted(&self, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> AnnulusPoint {
        let (flo, fhi) = ((2.0 / PI) * lo.atan(), (2.0 / PI) * hi.atan());
        let u = flo + (fhi - flo) * rng.gen::<f64>();
        AnnulusPoint {
            y: rng.gen::<f64>() * TWO_PI,
            s: (PI * u / 2.0).tan(),
        }
    }
}

/// i.i.d. m-distributed annulus points.
pub fn sample_m(seed: u64, count: usize) -> Vec<AnnulusPoint> {
    assert!(count >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = AnnulusMeasure;
    (0..count).map(|_| m.sample(&mut rng)).collect()
}

/// Open rectangle in the (x, t) strip rotated by pi/4 about its center.
///
/// Membership is |u| < a, |v| < b where u, v are the rotated offsets from
/// the center; every parameter slice is an open interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedRectangle {
    center: (f64, f64),
    half: (f64, f64),
}

impl TiltedRectangle {
    pub fn new(center: (f64, f64), half: (f64, f64)) -> Result<Self> {
        if !(half.0 > 0.0 && half.1 > 0.0) {
            return Err(Error::Domain { what: "half-length", value: half.0.min(half.1) });
        }
        Ok(TiltedRectangle { center, half })
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    pub fn half(&self) -> (f64, f64) {
        self.half
    }

    pub fn contains(&self, x: f64, t: f64) -> bool {
        let dx = x - self.center.0;
        let dt = t - self.center.1;
        let u = (dx + dt) / std::f64::consts::SQRT_2;
        let v = (-dx + dt) / std::f64::consts::SQRT_2;
        u.abs() < self.half.0 && v.abs() < self.half.1
    }

    /// The open slice R^{(t)} as an interval in x, clipped to I; None when
    /// empty.
    pub fn slice(&self, t: f64) -> Option<(f64, f64)> {
        let dt = t - self.center.1;
        let ra = self.half.0 * std::f64::consts::SQRT_2;
        let rb = self.half.1 * std::f64::consts::SQRT_2;
        let lo = (-dt - ra).max(dt - rb);
        let hi = (-dt + ra).min(dt + rb);
        let (lo, hi) = ((self.center.0 + lo).max(-1.0), (self.center.0 + hi).min(1.0));
        (hi > lo).then_some((lo, hi))
    }

    /// Intersection, computed in the global rotated frame where both are
    /// axis-aligned boxes. None when empty (possibly-empty rectangles close
    /// the set of slices under same-coordinate intersection).
    pub fn intersect(&self, other: &TiltedRectangle) -> Option<TiltedRectangle> {
        let rot = |c: (f64, f64)| {
            (
                (c.0 + c.1) / std::f64::consts::SQRT_2,
                (-c.0 + c.1) / std::f64::consts::SQRT_2,
            )
        };
        let (p1, q1) = rot(self.center);
        let (p2, q2) = rot(other.center);
        let plo = (p1 - self.half.0).max(p2 - other.half.0);
        let phi = (p1 + self.half.0).min(p2 + other.half.0);
        let qlo = (q1 - self.half.1).max(q2 - other.half.1);
        let qhi = (q1 + self.half.1).min(q2 + other.half.1);
        if phi <= plo || qhi <= qlo {
            return None;
        }
        let (pc, qc) = ((plo + phi) * 0.5, (qlo + qhi) * 0.5);
        let center = (
            (pc - qc) / std::f64::consts::SQRT_2,
            (pc + qc) / std::f64::consts::SQRT_2,
        );
        Some(TiltedRectangle { center, half: ((phi - plo) * 0.5, (qhi - qlo) * 0.5) })
    }
}

/// Finite intersection of coordinate cylinders pi_n^{-1}(R) over tilted
/// rectangles, canonicalized to distinct n by intersecting same-n
/// rectangles. An empty canonical intersection is retained as a marker so
/// that measures evaluate to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderSet {
    terms: Vec<(usize, TiltedRectangle)>,
    empty: bool,
}

impl CylinderSet {
    pub fn new(terms: Vec<(usize, TiltedRectangle)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::ThreadMismatch("cylinder set needs at least one term"));
        }
        let mut sorted = terms;
        sorted.sort_by_key(|(n, _)| *n);
        let mut canon: Vec<(usize, TiltedRectangle)> = Vec::with_capacity(sorted.len());
        for (n, r) in sorted {
            match canon.last_mut() {
                Some((m, prev)) if *m == n => match prev.intersect(&r) {
                    Some(merged) => *prev = merged,
                    None => return Ok(CylinderSet { terms: vec![(n, r)], empty: true }),
                },
                _ => canon.push((n, r)),
            }
        }
        Ok(CylinderSet { terms: canon, empty: false })
    }

    pub fn terms(&self) -> &[(usize, TiltedRectangle)] {
        &self.terms
    }

    pub fn is_empty_marker(&self) -> bool {
        self.empty
    }

    /// Highest projection level n_k = max n_i.
    pub fn level(&self) -> usize {
        self.terms.iter().map(|(n, _)| *n).max().unwrap()
    }

    /// Membership of a truncated thread at the slice t = thread slope.
    pub fn contains_thread(&self, th: &Thread) -> bool {
        !self.empty
            && self
                .terms
                .iter()
                .all(|(n, r)| *n < th.depth() && r.contains(th.entries()[*n], th.slope()))
    }
}

/// Reduces a cylinder set to a single level: returns (n_k, B^{(t)}) with
/// B^{(t)} the exact interval-set intersection of the pulled-back slices
/// f_t^{-(n_k - n_i)}(R_i^{(t)}).
pub fn cylinder_reduce(map: &TentMap, set: &CylinderSet) -> (usize, IntervalSet) {
    let level = set.level();
    if set.is_empty_marker() {
        return (level, IntervalSet::empty());
    }
    let t = map.slope();
    let mut acc: Option<IntervalSet> = None;
    for (n, rect) in set.terms() {
        let slice = match rect.slice(t) {
            Some((lo, hi)) => IntervalSet::singleton(lo, hi),
            None => IntervalSet::empty(),
        };
        let pulled = map.preimage_set(&slice, (level - n) as u32);
        acc = Some(match acc {
            Some(cur) => cur.intersect(&pulled),
            None => pulled,
        });
    }
    (level, acc.unwrap())
}

/// Streaming sampler of approximately mu_hat-distributed truncated threads.
///
/// Windows are cut from a typical forward orbit at stride `depth` (adjacent
/// windows share no entries); each window is materialized by iterating f_t
/// from its deepest entry, so the thread condition holds with zero
/// residual. By Birkhoff's theorem along a mu_t-generic orbit the windows
/// are distributed per the induced measure.
pub struct ThreadSampler {
    map: TentMap,
    orbit: crate::tent_map::Orbit,
    depth: usize,
    remaining: usize,
}

/// Samples threads from a forward orbit of length `orbit_len` after
/// discarding `burnin` steps; yields (orbit_len - burnin) / depth threads.
pub fn thread_sampler(
    map: &TentMap,
    orbit_len: usize,
    depth: usize,
    burnin: usize,
    seed: u64,
) -> ThreadSampler {
    assert!(depth >= 1 && orbit_len > burnin + depth);
    let mut orbit = map.orbit(None, seed);
    for _ in 0..burnin {
        orbit.next();
    }
    ThreadSampler {
        map: *map,
        orbit,
        depth,
        remaining: (orbit_len - burnin) / depth,
    }
}

impl Iterator for ThreadSampler {
    type Item = Thread;

    fn next(&mut self) -> Option<Thread> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let deepest = self.orbit.next()?;
        for _ in 0..self.depth - 1 {
            self.orbit.next();
        }
        let mut entries = vec![0.0; self.depth];
        entries[self.depth - 1] = deepest;
        for j in (0..self.depth - 1).rev() {
            entries[j] = self.map.apply(entries[j + 1]);
        }
        Some(Thread::from_raw(self.map.slope(), entries))
    }
}

/// Dual estimate of mu_hat(A): exact acim mass of the reduced slice vs the
/// frequency of raw sampled threads lying in A.
#[derive(Debug, Clone, Copy)]
pub struct CylinderEstimate {
    pub exact: f64,
    pub mc: f64,
    /// Batch-means standard error of `mc` (robust to orbit correlation).
    pub mc_stderr: f64,
    pub samples: usize,
}

/// Estimates the induced measure of a cylinder set two independent ways.
///
/// The exact route reduces A to level n_k and integrates the supplied acim
/// density over the slice; the Monte Carlo route tests raw thread windows
/// against the rectangles directly, never touching the reduction.
pub fn cylinder_measure(
    map: &TentMap,
    set: &CylinderSet,
    acim: &Density,
    samples: usize,
    seed: u64,
) -> CylinderEstimate {
    const BATCHES: usize = 50;
    assert!(samples >= 10 * BATCHES);
    let (_, slice) = cylinder_reduce(map, set);
    let exact = acim.mass_of(&slice);

    let depth = set.level() + 1;
    let batch_size = samples / BATCHES;
    let used = batch_size * BATCHES;
    let burnin = 1_000;
    let sampler = thread_sampler(map, burnin + (used + 1) * depth, depth, burnin, seed);
    let mut batch_means = Vec::with_capacity(BATCHES);
    let mut hits_total = 0usize;
    let mut hits_batch = 0usize;
    for (i, th) in sampler.take(used).enumerate() {
        if set.contains_thread(&th) {
            hits_total += 1;
            hits_batch += 1;
        }
        if (i + 1) % batch_size == 0 {
            batch_means.push(hits_batch as f64 / batch_size as f64);
            hits_batch = 0;
        }
    }
    let mc = hits_total as f64 / used as f64;
    let var = batch_means.iter().map(|b| (b - mc) * (b - mc)).sum::<f64>()
        / (BATCHES as f64 - 1.0);
    CylinderEstimate {
        exact,
        mc,
        mc_stderr: (var / BATCHES as f64).sqrt(),
        samples: used,
    }
}
