//! Experiment harness: statistical-stability sweeps, weak-continuity
//! checks on cylinder sets, physicality/basin verification, pushforward
//! continuity of Psi, and rendering.
//!
//! Every report embeds the seeds and parameters that produced it, and all
//! estimators fold over seeded streams, so re-running with the same inputs
//! reproduces every numeric field bit for bit regardless of scheduling.
//! Results on finite observable banks and cylinder families are reported
//! as consistent with the continuity statements they probe, never as
//! proving them.

use crate::acim::{
    birkhoff_histogram, l1_density_distance, stationary_density, ulam_operator, wasserstein1,
    Density,
};
use crate::disk::{h_step, CylinderPoint};
use crate::error::{Error, Result};
use crate::inverse_limit::{
    annulus_shift, cylinder_measure, psi, thread_sampler, AnnulusMeasure, CylinderSet, DiskThread,
};
use crate::plot::{Canvas, Frame, AXIS, PALETTE};
use crate::tent_map::TentMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

const TWO_PI: f64 = 2.0 * PI;

/// Mixes a master seed with a task index; tasks get independent streams
/// whatever the scheduling.
pub(crate) fn derive_seed(master: u64, idx: u64) -> u64 {
    let mut z = master ^ idx.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x2545_F491_4F6C_DD1D);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Observable on truncated threads, evaluated on windows ordered head
/// first: window[0] = x_0, window[1] = x_1.
#[derive(Debug, Clone)]
pub struct Observable {
    pub name: &'static str,
    /// Lipschitz constant w.r.t. the thread metric sum |x_n - y_n|/2^n.
    pub lipschitz: f64,
    kind: ObsKind,
}

#[derive(Debug, Clone, Copy)]
enum ObsKind {
    Head,
    HeadSquared,
    CosPiHead,
    HeadPair,
    Bump { center: f64, width: f64 },
}

impl Observable {
    pub fn eval(&self, window: &[f64]) -> f64 {
        let x0 = window[0];
        match self.kind {
            ObsKind::Head => x0,
            ObsKind::HeadSquared => x0 * x0,
            ObsKind::CosPiHead => (PI * x0).cos(),
            ObsKind::HeadPair => x0 * window[1],
            ObsKind::Bump { center, width } => (1.0 - (x0 - center).abs() / width).max(0.0),
        }
    }

    /// Value scaled to a 1-Lipschitz observable.
    pub fn eval_normalized(&self, window: &[f64]) -> f64 {
        self.eval(window) / self.lipschitz
    }

    /// Number of thread coordinates the observable reads.
    pub fn coords(&self) -> usize {
        match self.kind {
            ObsKind::HeadPair => 2,
            _ => 1,
        }
    }
}

/// The default bank: x_0, x_0^2, cos(pi x_0), x_0 x_1 and five hat bumps.
///
/// Lipschitz constants w.r.t. the thread metric: |x_1 - y_1| <= 2 d, so
/// the pair observable gets |x_0||x_1-y_1| + |y_1||x_0-y_0| <= 3 d.
#[derive(Debug, Clone)]
pub struct ObservableBank {
    observables: Vec<Observable>,
}

impl ObservableBank {
    pub fn standard() -> Self {
        let mut observables = vec![
            Observable { name: "head", lipschitz: 1.0, kind: ObsKind::Head },
            Observable { name: "head_sq", lipschitz: 2.0, kind: ObsKind::HeadSquared },
            Observable { name: "cos_pi_head", lipschitz: PI, kind: ObsKind::CosPiHead },
            Observable { name: "pair", lipschitz: 3.0, kind: ObsKind::HeadPair },
        ];
        for (i, center) in [-0.8, -0.4, 0.0, 0.4, 0.8].into_iter().enumerate() {
            observables.push(Observable {
                name: ["bump_m08", "bump_m04", "bump_00", "bump_04", "bump_08"][i],
                lipschitz: 5.0,
                kind: ObsKind::Bump { center, width: 0.2 },
            });
        }
        ObservableBank { observables }
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn max_coords(&self) -> usize {
        self.observables.iter().map(|o| o.coords()).max().unwrap_or(1)
    }
}

/// Which basin the physicality test samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basin {
    /// Uniform on I.
    Interval,
    /// Uniform y, s uniform on [1/2, 3/4]: the collar Z_t.
    Collar,
    /// m-distributed points restricted to s in [1/2, 3/4], routed through
    /// Psi_t threads.
    Annulus,
}

impl std::str::FromStr for Basin {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "interval" => Ok(Basin::Interval),
            "collar" => Ok(Basin::Collar),
            "annulus" => Ok(Basin::Annulus),
            other => Err(format!("unknown basin `{other}` (interval|collar|annulus)")),
        }
    }
}

impl std::fmt::Display for Basin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Basin::Interval => "interval",
            Basin::Collar => "collar",
            Basin::Annulus => "annulus",
        })
    }
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let (sx, sy): (f64, f64) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Fitted slope of ln(distance) against -ln|t - t_star|, the direction of
/// the sequence t_i -> t_star, ignoring non-positive distances and the
/// point t = t_star itself. Negative exactly when the distances show a
/// decreasing trend as t approaches t_star.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(dt, d)| *dt > 0.0 && *d > 0.0)
        .map(|(dt, d)| (-dt.ln(), d.ln()))
        .collect();
    least_squares_slope(&logs)
}

#[derive(Debug, Clone)]
pub struct AcimSweepParams {
    pub nbins: usize,
    pub birkhoff_n: usize,
    pub burnin: usize,
    pub tol: f64,
    pub maxiter: usize,
    pub seed: u64,
}

impl Default for AcimSweepParams {
    fn default() -> Self {
        AcimSweepParams {
            nbins: 4096,
            birkhoff_n: 1_000_000,
            burnin: 1_000,
            tol: 1e-10,
            maxiter: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub t: f64,
    /// W1 between Ulam densities at t and at t_star.
    pub w1_ulam: f64,
    /// L1 between the same pair of densities.
    pub l1_ulam: f64,
    /// W1 between Birkhoff histograms at t and at t_star.
    pub w1_birkhoff: f64,
    /// W1 between the two estimators at this same t (oracle agreement).
    pub w1_cross: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub t_star: f64,
    pub params: AcimSweepParams,
    pub points: Vec<SweepPoint>,
    /// Fitted log-log slope of w1_ulam against |t - t_star|.
    pub loglog_slope: f64,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,dt_abs,w1_ulam,l1_ulam,w1_birkhoff,w1_cross\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                p.t,
                (p.t - self.t_star).abs(),
                p.w1_ulam,
                p.l1_ulam,
                p.w1_birkhoff,
                p.w1_cross
            );
        }
        out
    }
}

/// Statistical-stability sweep: distances from the acim at each grid
/// parameter to the acim at t_star, by both estimators.
pub fn acim_sweep(grid: &[f64], t_star: f64, params: &AcimSweepParams) -> Result<SweepReport> {
    let estimate = |t: f64, idx: u64| -> Result<(Density, Density)> {
        let map = TentMap::new(t)?;
        let ulam = stationary_density(&ulam_operator(&map, params.nbins), params.tol, params.maxiter)?;
        let birkhoff = birkhoff_histogram(
            &map,
            None,
            params.birkhoff_n,
            params.nbins,
            params.burnin,
            derive_seed(params.seed, idx),
        );
        Ok((ulam, birkhoff))
    };
    let (star_ulam, star_birkhoff) = estimate(t_star, u64::MAX)?;
    let points: Result<Vec<SweepPoint>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let (ulam, birkhoff) = estimate(t, i as u64)?;
            Ok(SweepPoint {
                t,
                w1_ulam: wasserstein1(&ulam, &star_ulam)?,
                l1_ulam: l1_density_distance(&ulam, &star_ulam)?,
                w1_birkhoff: wasserstein1(&birkhoff, &star_birkhoff)?,
                w1_cross: wasserstein1(&ulam, &birkhoff)?,
            })
        })
        .collect();
    let points = points?;
    let loglog_slope = fit_loglog_slope(
        &points
            .iter()
            .map(|p| ((p.t - t_star).abs(), p.w1_ulam))
            .collect::<Vec<_>>(),
    );
    Ok(SweepReport { t_star, params: params.clone(), points, loglog_slope })
}

#[derive(Debug, Clone)]
pub struct CylinderContinuityParams {
    pub nbins: usize,
    pub samples: usize,
    pub tol: f64,
    pub maxiter: usize,
    pub seed: u64,
}

impl Default for CylinderContinuityParams {
    fn default() -> Self {
        CylinderContinuityParams {
            nbins: 4096,
            samples: 30_000,
            tol: 1e-10,
            maxiter: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CylinderGridPoint {
    pub t: f64,
    pub exact: f64,
    pub mc: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone)]
pub struct CylinderReport {
    pub t_star: f64,
    pub level: usize,
    pub star: CylinderGridPoint,
    pub points: Vec<CylinderGridPoint>,
    /// max over the grid of |exact(t) - exact(t_star)|.
    pub max_exact_dev: f64,
    /// Same for the Monte Carlo estimates.
    pub max_mc_dev: f64,
    /// Worst |exact - mc| / stderr across the grid and the star.
    pub worst_agreement_z: f64,
    pub degenerate_at_star: bool,
}

impl CylinderReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,exact,mc,mc_stderr\n");
        let _ = writeln!(out, "{},{},{},{}", self.star.t, self.star.exact, self.star.mc, self.star.stderr);
        for p in &self.points {
            let _ = writeln!(out, "{},{},{},{}", p.t, p.exact, p.mc, p.stderr);
        }
        out
    }
}

/// Weak-continuity check of the induced measure of one cylinder set along
/// a parameter grid, with the dual exact-slice / thread-frequency
/// estimators at every grid point.
pub fn cylinder_continuity(
    set: &CylinderSet,
    grid: &[f64],
    t_star: f64,
    params: &CylinderContinuityParams,
) -> Result<CylinderReport> {
    let eval = |t: f64, idx: u64| -> Result<CylinderGridPoint> {
        let map = TentMap::new(t)?;
        let acim = stationary_density(&ulam_operator(&map, params.nbins), params.tol, params.maxiter)?;
        let est = cylinder_measure(&map, set, &acim, params.samples, derive_seed(params.seed, idx));
        Ok(CylinderGridPoint { t, exact: est.exact, mc: est.mc, stderr: est.mc_stderr })
    };
    let star = eval(t_star, u64::MAX)?;
    let points: Result<Vec<CylinderGridPoint>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| eval(t, i as u64))
        .collect();
    let points = points?;
    let max_exact_dev = points.iter().map(|p| (p.exact - star.exact).abs()).fold(0.0, f64::max);
    let max_mc_dev = points.iter().map(|p| (p.mc - star.mc).abs()).fold(0.0, f64::max);
    // The stderr floor keeps degenerate estimates (both routes exactly 0
    // or 1, zero variance) from dividing by zero.
    let z = |p: &CylinderGridPoint| (p.exact - p.mc).abs() / p.stderr.max(1e-4);
    let worst_agreement_z = points.iter().chain([&star]).map(z).fold(0.0, f64::max);
    let degenerate_at_star = {
        let map = TentMap::new(t_star)?;
        crate::inverse_limit::cylinder_reduce(&map, set).1.is_empty()
    };
    Ok(CylinderReport {
        t_star,
        level: set.level(),
        star,
        points,
        max_exact_dev,
        max_mc_dev,
        worst_agreement_z,
        degenerate_at_star,
    })
}

#[derive(Debug, Clone)]
pub struct PhysicalityParams {
    pub samples: usize,
    pub orbit_len: usize,
    pub eps: f64,
    /// Thread-sampler windows used for the reference averages.
    pub ref_windows: usize,
    pub seed: u64,
}

impl Default for PhysicalityParams {
    fn default() -> Self {
        PhysicalityParams {
            samples: 500,
            orbit_len: 1_000_000,
            eps: 0.01,
            ref_windows: 2_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhysicalityReport {
    pub t: f64,
    pub basin: Basin,
    pub params: PhysicalityParams,
    pub observable_names: Vec<&'static str>,
    /// Reference averages of the Lipschitz-normalized observables.
    pub reference: Vec<f64>,
    /// Per-sample worst normalized deviation from the reference.
    pub max_devs: Vec<f64>,
    /// Fraction of samples whose every observable lands within eps.
    pub pass_fraction: f64,
}

impl PhysicalityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,max_dev,pass\n");
        for (i, d) in self.max_devs.iter().enumerate() {
            let _ = writeln!(out, "{i},{d},{}", u8::from(*d <= self.params.eps));
        }
        out
    }
}

/// Reference averages of normalized bank observables under the induced
/// measure, from strided thread-sampler windows.
pub fn reference_averages(
    map: &TentMap,
    bank: &ObservableBank,
    windows: usize,
    seed: u64,
) -> Vec<f64> {
    let depth = bank.max_coords().max(2);
    let burnin = 1_000;
    let sampler = thread_sampler(map, burnin + (windows + 1) * depth, depth, burnin, seed);
    let mut sums = vec![0.0f64; bank.len()];
    let mut count = 0usize;
    for th in sampler.take(windows) {
        for (k, obs) in bank.observables().iter().enumerate() {
            sums[k] += obs.eval_normalized(th.entries());
        }
        count += 1;
    }
    sums.iter().map(|s| s / count as f64).collect()
}

/// Verifies that basin points are regular: Birkhoff averages along their
/// orbits land within eps of the reference for every bank observable.
///
/// Initial conditions reach I through the route their basin dictates —
/// directly, through one H_t step off the collar, or through a Psi_t
/// thread — after which the orbit continues under f_t.
pub fn physicality_test(
    map: &TentMap,
    basin: Basin,
    bank: &ObservableBank,
    params: &PhysicalityParams,
) -> PhysicalityReport {
    assert!(params.eps > 0.0 && params.orbit_len >= 2);
    let reference = reference_averages(map, bank, params.ref_windows, derive_seed(params.seed, u64::MAX));
    let measure = AnnulusMeasure;
    let max_devs: Vec<f64> = (0..params.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, 2 * i as u64));
            let x0 = match basin {
                Basin::Interval => rng.gen_range(-1.0..1.0),
                Basin::Collar => {
                    let y = rng.gen::<f64>() * TWO_PI;
                    let s = 0.5 + 0.25 * rng.gen::<f64>();
                    let p = CylinderPoint::new(y, s).expect("collar point");
                    h_step(map, p).interval_value().expect("collar lands on I")
                }
                Basin::Annulus => {
                    let p = measure.sample_s_restricted(&mut rng, 0.5, 0.75);
                    let th = psi(map, annulus_shift(p), 2);
                    th.head().interval_value().expect("shifted annulus point heads on I")
                }
            };
            let orbit_seed = derive_seed(params.seed, 2 * i as u64 + 1);
            let mut orbit = map.orbit(Some(x0), orbit_seed);
            let mut prev = orbit.next().expect("orbit is infinite");
            let mut sums = vec![0.0f64; bank.len()];
            let mut window = [0.0f64; 2];
            let steps = params.orbit_len - 1;
            for _ in 0..steps {
                let cur = orbit.next().expect("orbit is infinite");
                window[0] = cur;
                window[1] = prev;
                for (k, obs) in bank.observables().iter().enumerate() {
                    sums[k] += obs.eval_normalized(&window);
                }
                prev = cur;
            }
            sums.iter()
                .zip(&reference)
                .map(|(s, r)| (s / steps as f64 - r).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let passes = max_devs.iter().filter(|d| **d <= params.eps).count();
    PhysicalityReport {
        t: map.slope(),
        basin,
        params: params.clone(),
        observable_names: bank.observables().iter().map(|o| o.name).collect(),
        reference,
        pass_fraction: passes as f64 / params.samples as f64,
        max_devs,
    }
}

#[derive(Debug, Clone)]
pub struct PsiPushParams {
    pub depth: usize,
    pub samples: usize,
    /// Points used for the max pointwise thread-metric deviation.
    pub pointwise_subsample: usize,
    /// s-range sampled from m (restricted); upper end must stay below
    /// depth - 1 so every thread has an off-I entry.
    pub s_range: (f64, f64),
    pub seed: u64,
}

impl Default for PsiPushParams {
    fn default() -> Self {
        PsiPushParams {
            depth: 12,
            samples: 20_000,
            pointwise_subsample: 500,
            s_range: (0.0, 6.0),
            seed: 0,
        }
    }
}

pub const PSI_PUSH_OBSERVABLES: [&str; 3] = ["first_off_interval_s", "head_u", "head_v"];

/// Entrywise thread distance between disk threads from different slices
/// (the fat-space metric minus its constant |t - t'| term).
fn cross_slice_dev(a: &DiskThread, b: &DiskThread) -> f64 {
    a.entries()
        .iter()
        .zip(b.entries())
        .enumerate()
        .map(|(n, (x, y))| x.plane_dist(y) / (1u64 << n) as f64)
        .sum()
}

fn psi_push_eval(th: &DiskThread) -> [f64; 3] {
    let off = th
        .entries()
        .iter()
        .find(|z| !z.on_interval())
        .map(|z| z.s())
        .unwrap_or(f64::NAN);
    let head = th.head().plane();
    [off, head.u, head.v]
}

#[derive(Debug, Clone)]
pub struct PsiPushRow {
    pub t: f64,
    /// Means of the disk-thread observables over the common sample set.
    pub estimates: [f64; 3],
    /// Max thread-metric distance of Psi_t from Psi_{t_star} on the
    /// pointwise subsample.
    pub max_pointwise_dev: f64,
}

#[derive(Debug, Clone)]
pub struct PsiPushReport {
    pub t_star: f64,
    pub params: PsiPushParams,
    pub star_estimates: [f64; 3],
    pub rows: Vec<PsiPushRow>,
}

impl PsiPushReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mean_first_off_s,mean_head_u,mean_head_v,max_thread_dev\n");
        let _ = writeln!(
            out,
            "{},{},{},{},0",
            self.t_star, self.star_estimates[0], self.star_estimates[1], self.star_estimates[2]
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.t, r.estimates[0], r.estimates[1], r.estimates[2], r.max_pointwise_dev
            );
        }
        out
    }
}

/// Integral and pointwise continuity of t -> Psi_t against the background
/// measure, with common random numbers across the whole grid.
pub fn psi_pushforward_continuity(
    grid: &[f64],
    t_star: f64,
    params: &PsiPushParams,
) -> Result<PsiPushReport> {
    assert!(params.s_range.1 < params.depth as f64 - 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let measure = AnnulusMeasure;
    let points: Vec<_> = (0..params.samples)
        .map(|_| measure.sample_s_restricted(&mut rng, params.s_range.0, params.s_range.1))
        .collect();

    let means_at = |t: f64| -> Result<[f64; 3]> {
        let map = TentMap::new(t)?;
        let mut sums = [0.0f64; 3];
        for p in &points {
            let vals = psi_push_eval(&psi(&map, *p, params.depth));
            for (s, v) in sums.iter_mut().zip(vals) {
                *s += v;
            }
        }
        Ok(sums.map(|s| s / params.samples as f64))
    };

    let star_estimates = means_at(t_star)?;
    let star_map = TentMap::new(t_star)?;
    let sub = &points[..params.pointwise_subsample.min(points.len())];
    let rows: Result<Vec<PsiPushRow>> = grid
        .par_iter()
        .map(|&t| {
            let map = TentMap::new(t)?;
            let estimates = means_at(t)?;
            let mut dev = 0.0f64;
            for p in sub {
                let a = psi(&map, *p, params.depth);
                let b = psi(&star_map, *p, params.depth);
                dev = dev.max(cross_slice_dev(&a, &b));
            }
            Ok(PsiPushRow { t, estimates, max_pointwise_dev: dev })
        })
        .collect();
    Ok(PsiPushReport { t_star, params: params.clone(), star_estimates, rows: rows? })
}

/// What `render` draws.
#[derive(Debug, Clone)]
pub enum RenderWhat {
    /// Bar plot of the Ulam acim density.
    Acim { t: f64, bins: usize },
    /// Scatter of (x_0, x_1) over thread samples.
    Delay { t: f64, samples: usize },
    /// Plane trajectory of H_t iterates from (y0, s0).
    DiskOrbit { t: f64, y0: f64, s0: f64, steps: usize },
    /// Distance-vs-parameter curves of an acim sweep around t_star.
    SweepCurves { t_star: f64, k_min: u32, k_max: u32 },
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Renders one figure and its backing CSV; `header` lines are prepended to
/// the CSV verbatim. Deterministic for fixed seed and parameters.
pub fn render(
    what: &RenderWhat,
    png_path: &Path,
    csv_path: &Path,
    seed: u64,
    header: &str,
) -> Result<()> {
    match what {
        RenderWhat::Acim { t, bins } => {
            let map = TentMap::new(*t)?;
            let density = stationary_density(&ulam_operator(&map, *bins), 1e-10, 100_000)?;
            let mut csv = Vec::new();
            density.write_csv(&mut csv).map_err(|e| Error::io(csv_path, e))?;
            write_file(csv_path, &format!("{header}{}", String::from_utf8_lossy(&csv)))?;

            let mut canvas = Canvas::new(900, 420);
            let top = density.weights().iter().cloned().fold(0.0, f64::max).max(1e-9) * 1.1;
            let frame = Frame::new(-1.0, 1.0, 0.0, top, 900, 420);
            frame.draw_box(&mut canvas);
            for i in 0..density.nbins() {
                let (lo, hi) = density.bin_edges(i);
                let (x, y) = frame.px(0.5 * (lo + hi), density.weights()[i]);
                let (_, y0) = frame.px(0.0, 0.0);
                canvas.vbar(x, y, y0, PALETTE[0]);
            }
            canvas.save_png(png_path)
        }
        RenderWhat::Delay { t, samples } => {
            let map = TentMap::new(*t)?;
            let burnin = 1_000;
            let sampler = thread_sampler(&map, burnin + (samples + 1) * 2, 2, burnin, seed);
            let mut csv = String::from("x0,x1\n");
            let mut canvas = Canvas::new(600, 600);
            let frame = Frame::new(-1.05, 1.05, -1.05, 1.05, 600, 600);
            frame.draw_box(&mut canvas);
            for th in sampler.take(*samples) {
                let (x0, x1) = (th.entries()[0], th.entries()[1]);
                let _ = writeln!(csv, "{x0},{x1}");
                let (px, py) = frame.px(x0, x1);
                canvas.set(px, py, PALETTE[1]);
            }
            write_file(csv_path, &format!("{header}{csv}"))?;
            canvas.save_png(png_path)
        }
        RenderWhat::DiskOrbit { t, y0, s0, steps } => {
            let map = TentMap::new(*t)?;
            let mut csv = String::from("step,u,v,y,s\n");
            let mut canvas = Canvas::new(600, 600);
            let frame = Frame::new(-2.1, 2.1, -2.1, 2.1, 600, 600);
            for k in 0..=360 {
                let a = TWO_PI * k as f64 / 360.0;
                let (px, py) = frame.px(2.0 * a.cos(), 2.0 * a.sin());
                canvas.set(px, py, AXIS);
            }
            let mut p = CylinderPoint::new(*y0, *s0)?;
            let mut on_interval_orbit: Option<crate::tent_map::Orbit> = None;
            for step in 0..*steps {
                let q = p.plane();
                let _ = writeln!(csv, "{step},{},{},{},{}", q.u, q.v, p.y(), p.s());
                let (px, py) = frame.px(q.u, q.v);
                canvas.dot(px, py, PALETTE[step.min(2)]);
                p = match &mut on_interval_orbit {
                    Some(orbit) => CylinderPoint::interval_point(orbit.next().expect("infinite")),
                    None => {
                        let next = h_step(&map, p);
                        if let Some(x) = next.interval_value() {
                            // Continue along a typical f_t orbit once on I.
                            let mut orbit = map.orbit(Some(x), derive_seed(seed, 1));
                            orbit.next();
                            on_interval_orbit = Some(orbit);
                        }
                        next
                    }
                };
            }
            write_file(csv_path, &format!("{header}{csv}"))?;
            canvas.save_png(png_path)
        }
        RenderWhat::SweepCurves { t_star, k_min, k_max } => {
            let mut grid = Vec::new();
            for k in *k_min..=*k_max {
                let dt = 0.5f64.powi(k as i32);
                grid.push(t_star - dt);
                grid.push(t_star + dt);
            }
            grid.retain(|t| *t > 1.0 && *t <= 2.0);
            let params = AcimSweepParams { seed, ..AcimSweepParams::default() };
            let report = acim_sweep(&grid, *t_star, &params)?;
            write_file(csv_path, &format!("{header}{}", report.to_csv()))?;

            let pts: Vec<(f64, f64)> = report
                .points
                .iter()
                .filter(|p| p.w1_ulam > 0.0)
                .map(|p| ((p.t - t_star).abs().ln(), p.w1_ulam.ln()))
                .collect();
            let mut canvas = Canvas::new(700, 480);
            let (x0, x1) = pts.iter().fold((f64::MAX, f64::MIN), |a, p| (a.0.min(p.0), a.1.max(p.0)));
            let (y0, y1) = pts.iter().fold((f64::MAX, f64::MIN), |a, p| (a.0.min(p.1), a.1.max(p.1)));
            let frame = Frame::new(x0 - 0.5, x1 + 0.5, y0 - 0.5, y1 + 0.5, 700, 480);
            frame.draw_box(&mut canvas);
            for p in &pts {
                let (px, py) = frame.px(p.0, p.1);
                canvas.dot(px, py, PALETTE[2]);
            }
            canvas.save_png(png_path)
        }
    }
}
