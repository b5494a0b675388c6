//! Estimation of the absolutely continuous invariant measures of the tent
//! family by independent routes, plus distances between densities on I.
//!
//! Three estimators that share no code path:
//! - Ulam discretization of the transfer operator (stationary vector by
//!   damped power iteration),
//! - occupation histograms of long forward orbits (Birkhoff),
//! - an exact linear solve on the Markov partition, available when the
//!   critical orbit is eventually periodic (t = 2, t = sqrt 2, ...).

use crate::error::{Error, Result};
use crate::tent_map::{IntervalSet, TentMap};

/// Piecewise-constant probability density on uniform bins over [-1, 1].
///
/// `weights[i]` is the density value on bin i, so the bin masses are
/// weight * binwidth and sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    weights: Vec<f64>,
}

impl Density {
    /// Builds from raw nonnegative weights, normalizing the integral to 1.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::ShapeMismatch { left: weights.len(), right: 2 });
        }
        if let Some(w) = weights.iter().find(|w| **w < 0.0 || !w.is_finite()) {
            return Err(Error::Domain { what: "weight", value: *w });
        }
        let binwidth = 2.0 / weights.len() as f64;
        let integral: f64 = weights.iter().sum::<f64>() * binwidth;
        if integral <= 0.0 {
            return Err(Error::Domain { what: "integral", value: integral });
        }
        let weights = weights.iter().map(|w| w / integral).collect();
        Ok(Density { weights })
    }

    pub fn uniform(nbins: usize) -> Self {
        Density { weights: vec![0.5; nbins] }
    }

    /// Unit mass in the bin containing x.
    pub fn point_mass(nbins: usize, x: f64) -> Self {
        let mut weights = vec![0.0; nbins];
        let binwidth = 2.0 / nbins as f64;
        weights[bin_of(x, nbins)] = 1.0 / binwidth;
        Density { weights }
    }

    pub fn nbins(&self) -> usize {
        self.weights.len()
    }

    pub fn binwidth(&self) -> f64 {
        2.0 / self.weights.len() as f64
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let n = self.weights.len() as f64;
        (-1.0 + 2.0 * i as f64 / n, -1.0 + 2.0 * (i + 1) as f64 / n)
    }

    pub fn integral(&self) -> f64 {
        self.weights.iter().sum::<f64>() * self.binwidth()
    }

    /// Mass assigned to an interval set, integrating the piecewise-constant
    /// density exactly over each component.
    pub fn mass_of(&self, set: &IntervalSet) -> f64 {
        let n = self.weights.len();
        let mut mass = 0.0;
        for &(a, b) in set.components() {
            if b <= a {
                continue;
            }
            let (ia, ib) = (bin_of(a, n), bin_of(b, n));
            for i in ia..=ib {
                let (lo, hi) = self.bin_edges(i);
                let overlap = (b.min(hi) - a.max(lo)).max(0.0);
                mass += overlap * self.weights[i];
            }
        }
        mass
    }

    /// Midpoint-rule integral of an observable against this density.
    pub fn integral_of(&self, f: impl Fn(f64) -> f64) -> f64 {
        let h = self.binwidth();
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let mid = -1.0 + (i as f64 + 0.5) * h;
                w * f(mid) * h
            })
            .sum()
    }

    /// CSV rows `bin_left,bin_right,weight`, one per bin.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "bin_left,bin_right,weight")?;
        for i in 0..self.nbins() {
            let (lo, hi) = self.bin_edges(i);
            writeln!(w, "{lo},{hi},{}", self.weights[i])?;
        }
        Ok(())
    }
}

/// Bin index of x in a uniform n-bin partition of [-1, 1].
pub(crate) fn bin_of(x: f64, nbins: usize) -> usize {
    (((x + 1.0) / 2.0 * nbins as f64) as usize).min(nbins - 1)
}

/// Row-stochastic Ulam discretization of the transfer operator:
/// entry (i, j) = |B_i intersect f^{-1}(B_j)| / |B_i|.
#[derive(Debug, Clone)]
pub struct UlamOperator {
    nbins: usize,
    rows: Vec<Vec<(u32, f64)>>,
}

impl UlamOperator {
    pub fn nbins(&self) -> usize {
        self.nbins
    }

    pub fn rows(&self) -> &[Vec<(u32, f64)>] {
        &self.rows
    }

    /// Adjoint action on bin masses: out[j] = sum_i m[i] * P[i][j].
    pub fn push_masses(&self, masses: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let m = masses[i];
            for &(j, w) in row {
                out[j as usize] += m * w;
            }
        }
    }

    /// Pushes a density through the operator once.
    pub fn push_density(&self, d: &Density) -> Result<Density> {
        if d.nbins() != self.nbins {
            return Err(Error::ShapeMismatch { left: d.nbins(), right: self.nbins });
        }
        let h = d.binwidth();
        let masses: Vec<f64> = d.weights().iter().map(|w| w * h).collect();
        let mut out = vec![0.0; self.nbins];
        self.push_masses(&masses, &mut out);
        Density::from_weights(out.iter().map(|m| m / h).collect())
    }
}

/// Builds the Ulam operator by pushing each bin forward branch by branch.
///
/// Each bin is split at the critical point if it straddles it; the affine
/// image of each piece is spread over the target bins in proportion to
/// overlap length. Rows are renormalized to kill rounding drift, so they
/// sum to 1 exactly up to one ulp.
pub fn ulam_operator(map: &TentMap, nbins: usize) -> UlamOperator {
    assert!(nbins >= 2);
    let edge = |i: usize| -> f64 { -1.0 + 2.0 * i as f64 / nbins as f64 };
    let t = map.slope();
    let c = map.critical_point();
    let mut rows = Vec::with_capacity(nbins);
    for i in 0..nbins {
        let (lo, hi) = (edge(i), edge(i + 1));
        let mut pieces: Vec<(f64, f64)> = Vec::with_capacity(2);
        if lo < c && c < hi {
            pieces.push((lo, c));
            pieces.push((c, hi));
        } else {
            pieces.push((lo, hi));
        }
        let mut acc: Vec<(u32, f64)> = Vec::with_capacity(4);
        for (p, q) in pieces {
            let (fp, fq) = (map.apply(p), map.apply(q));
            let (vlo, vhi) = (fp.min(fq), fp.max(fq));
            let (jlo, jhi) = (bin_of(vlo, nbins), bin_of(vhi, nbins));
            for j in jlo..=jhi {
                let (blo, bhi) = (edge(j), edge(j + 1));
                let overlap = (vhi.min(bhi) - vlo.max(blo)).max(0.0);
                if overlap > 0.0 {
                    let w = overlap / t;
                    match acc.iter_mut().find(|(jj, _)| *jj == j as u32) {
                        Some(entry) => entry.1 += w,
                        None => acc.push((j as u32, w)),
                    }
                }
            }
        }
        let total: f64 = acc.iter().map(|(_, w)| w).sum();
        for entry in &mut acc {
            entry.1 /= total;
        }
        acc.sort_by_key(|(j, _)| *j);
        rows.push(acc);
    }
    UlamOperator { nbins, rows }
}

/// Stationary density of the Ulam operator by damped power iteration.
///
/// Iterates m <- (m + P^T m)/2: the damping removes the roots-of-unity
/// spectrum that plain iteration hits at renormalizable slopes t <= sqrt 2,
/// without moving the fixed point. The returned density satisfies
/// ||P^T d - d||_1 <= tol.
pub fn stationary_density(op: &UlamOperator, tol: f64, maxiter: usize) -> Result<Density> {
    assert!(tol > 0.0);
    let n = op.nbins();
    let mut masses = vec![1.0 / n as f64; n];
    let mut pushed = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..maxiter {
        op.push_masses(&masses, &mut pushed);
        residual = masses.iter().zip(&pushed).map(|(a, b)| (a - b).abs()).sum();
        if residual <= tol {
            let h = 2.0 / n as f64;
            return Density::from_weights(masses.iter().map(|m| (m / h).max(0.0)).collect());
        }
        for (m, p) in masses.iter_mut().zip(&pushed) {
            *m = 0.5 * (*m + p);
        }
        let total: f64 = masses.iter().sum();
        for m in &mut masses {
            *m /= total;
        }
    }
    Err(Error::NonConvergence { residual, maxiter })
}

/// Normalized occupation histogram of the orbit segment burnin..n-1.
///
/// When `x0` is absent the initial condition is drawn uniformly from I
/// using `seed`; the critical orbit itself may be atypical. Orbits come
/// from [`TentMap::orbit`], so slope 2 is safe to histogram.
pub fn birkhoff_histogram(
    map: &TentMap,
    x0: Option<f64>,
    n: usize,
    nbins: usize,
    burnin: usize,
    seed: u64,
) -> Density {
    assert!(n > burnin && nbins >= 2);
    let mut counts = vec![0u64; nbins];
    for (step, x) in map.orbit(x0, seed).take(n).enumerate() {
        if step >= burnin {
            counts[bin_of(x, nbins)] += 1;
        }
    }
    let total = (n - burnin) as f64;
    let h = 2.0 / nbins as f64;
    Density::from_weights(counts.iter().map(|c| *c as f64 / (total * h)).collect())
        .expect("histogram weights are nonnegative")
}

/// Piecewise-constant acim density on the Markov partition, from a direct
/// linear solve of the transfer-operator fixed point; resampled to `nbins`
/// uniform bins.
///
/// Requires the critical orbit to be eventually periodic (Markov flag), so
/// that partition cell images align with partition points.
pub fn markov_exact_density(map: &TentMap, nbins: usize) -> Result<Density> {
    let (cuts, values) = markov_cell_density(map)?;
    let h = 2.0 / nbins as f64;
    let mut weights = vec![0.0; nbins];
    for i in 0..nbins {
        let (lo, hi) = (-1.0 + i as f64 * h, -1.0 + (i + 1) as f64 * h);
        let mut mass = 0.0;
        for k in 0..values.len() {
            let overlap = (hi.min(cuts[k + 1]) - lo.max(cuts[k])).max(0.0);
            mass += overlap * values[k];
        }
        weights[i] = mass / h;
    }
    Density::from_weights(weights)
}

/// The Markov partition points and the exact density value on each cell.
pub fn markov_cell_density(map: &TentMap) -> Result<(Vec<f64>, Vec<f64>)> {
    const ORBIT_DEPTH: usize = 64;
    const TOL: f64 = 1e-9;
    let orbit = map.critical_orbit(ORBIT_DEPTH, TOL);
    let (revisit_at, _) = orbit.revisit.ok_or(Error::NotMarkov {
        t: map.slope(),
        depth: ORBIT_DEPTH,
    })?;

    let mut cuts: Vec<f64> = vec![-1.0, 1.0];
    cuts.extend_from_slice(&orbit.points[..revisit_at]);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= TOL);
    let m = cuts.len() - 1;

    // Transfer matrix on piecewise-constant densities: cell j receives
    // 1/t from every cell i whose image covers it. Cell images must align
    // with partition points, or the orbit was not long enough to close up.
    let t = map.slope();
    let mut transfer = vec![vec![0.0f64; m]; m];
    for i in 0..m {
        let (fa, fb) = (map.apply(cuts[i]), map.apply(cuts[i + 1]));
        let (lo, hi) = (fa.min(fb), fa.max(fb));
        let aligned = |v: f64| cuts.iter().any(|p| (p - v).abs() <= 10.0 * TOL);
        if !aligned(lo) || !aligned(hi) {
            return Err(Error::NotMarkov { t, depth: ORBIT_DEPTH });
        }
        for j in 0..m {
            let mid = 0.5 * (cuts[j] + cuts[j + 1]);
            if lo < mid && mid < hi {
                transfer[j][i] += 1.0 / t;
            }
        }
    }

    // Solve (L - I) rho = 0 with the normalization sum rho_i |J_i| = 1,
    // as least squares of the stacked (m+1) x m system.
    let mut stacked = transfer;
    for (j, row) in stacked.iter_mut().enumerate() {
        row[j] -= 1.0;
    }
    let lengths: Vec<f64> = (0..m).map(|k| cuts[k + 1] - cuts[k]).collect();
    stacked.push(lengths);
    let mut rhs = vec![0.0; m + 1];
    rhs[m] = 1.0;
    let values = solve_least_squares(&stacked, &rhs)?;
    if values.iter().any(|v| *v < -1e-9) {
        return Err(Error::NotMarkov { t, depth: ORBIT_DEPTH });
    }
    Ok((cuts, values.into_iter().map(|v| v.max(0.0)).collect()))
}

/// Least squares for a tall system via normal equations and Gaussian
/// elimination with partial pivoting. The systems here are tiny (a handful
/// of Markov cells), so conditioning is not a concern.
fn solve_least_squares(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let m = a[0].len();
    let mut ata = vec![vec![0.0f64; m + 1]; m];
    for (row, bi) in a.iter().zip(b) {
        for i in 0..m {
            for j in 0..m {
                ata[i][j] += row[i] * row[j];
            }
            ata[i][m] += row[i] * bi;
        }
    }
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&r1, &r2| ata[r1][col].abs().partial_cmp(&ata[r2][col].abs()).unwrap())
            .unwrap();
        ata.swap(col, pivot);
        let p = ata[col][col];
        if p.abs() < 1e-14 {
            return Err(Error::NonConvergence { residual: p.abs(), maxiter: 0 });
        }
        for r in 0..m {
            if r != col {
                let factor = ata[r][col] / p;
                for k in col..=m {
                    ata[r][k] -= factor * ata[col][k];
                }
            }
        }
    }
    Ok((0..m).map(|i| ata[i][m] / ata[i][i]).collect())
}

/// Wasserstein-1 distance: L1 distance between the cumulative distribution
/// functions, evaluated at bin right edges on the shared grid.
pub fn wasserstein1(d1: &Density, d2: &Density) -> Result<f64> {
    if d1.nbins() != d2.nbins() {
        return Err(Error::ShapeMismatch { left: d1.nbins(), right: d2.nbins() });
    }
    let h = d1.binwidth();
    let (mut c1, mut c2, mut dist) = (0.0, 0.0, 0.0);
    for (w1, w2) in d1.weights().iter().zip(d2.weights()) {
        c1 += w1 * h;
        c2 += w2 * h;
        dist += (c1 - c2).abs() * h;
    }
    Ok(dist)
}

/// L1 distance between densities: sum |w1 - w2| * binwidth.
pub fn l1_density_distance(d1: &Density, d2: &Density) -> Result<f64> {
    if d1.nbins() != d2.nbins() {
        return Err(Error::ShapeMismatch { left: d1.nbins(), right: d2.nbins() });
    }
    let h = d1.binwidth();
    Ok(d1
        .weights()
        .iter()
        .zip(d2.weights())
        .map(|(a, b)| (a - b).abs() * h)
        .sum())
}
