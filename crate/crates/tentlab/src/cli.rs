//! Command-line orchestration: subcommand grammar, configuration, worker
//! pool, and output management.
//!
//! Exit codes: 0 on success, 1 on a failed numeric check or operational
//! error, 2 on usage or configuration errors. Every output file starts
//! with a comment header carrying the version, the seed, and the full
//! parameter set, and re-running a command with identical seeds yields
//! byte-identical CSV output.

use crate::acim::{birkhoff_histogram, markov_exact_density, stationary_density, ulam_operator};
use crate::error::{Error, Result};
use crate::inverse_limit::{
    annulus_shift, disk_nat_ext_step, psi, psi_inverse, tail_bound, AnnulusMeasure, CylinderSet,
    TiltedRectangle,
};
use crate::stability::{
    acim_sweep, cylinder_continuity, physicality_test, AcimSweepParams, Basin,
    CylinderContinuityParams, ObservableBank, PhysicalityParams, RenderWhat,
};
use crate::tent_map::TentMap;
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Runtime configuration with built-in defaults; file values override the
/// defaults and command-line flags override the file.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub bins: usize,
    pub depth: usize,
    pub seed: u64,
    pub tol: f64,
    pub maxiter: usize,
    pub burnin: usize,
    /// 0 means one worker per logical core.
    pub workers: usize,
    pub out_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            bins: 4096,
            depth: 12,
            seed: 0,
            tol: 1e-10,
            maxiter: 100_000,
            burnin: 1_000,
            workers: 0,
            out_dir: PathBuf::from("."),
        }
    }
}

impl Config {
    fn set(&mut self, key: &str, value: &str, path: &Path, line: usize) -> Result<()> {
        let parse_err = |msg: String| Error::ConfigParse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let int = |value: &str| -> Result<i64> {
            value
                .parse::<i64>()
                .map_err(|e| parse_err(format!("expected integer for `{key}`: {e}")))
        };
        let range_err = |msg: &str| Error::ConfigRange { key: key.to_string(), msg: msg.to_string() };
        match key {
            "bins" => {
                let v = int(value)?;
                if v < 2 {
                    return Err(range_err("must be at least 2"));
                }
                self.bins = v as usize;
            }
            "depth" => {
                let v = int(value)?;
                if !(1..=60).contains(&v) {
                    return Err(range_err("must lie in 1..=60"));
                }
                self.depth = v as usize;
            }
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|e| parse_err(format!("expected unsigned integer for `seed`: {e}")))?;
            }
            "tol" => {
                let v: f64 = value
                    .parse()
                    .map_err(|e| parse_err(format!("expected real for `tol`: {e}")))?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(range_err("must be positive"));
                }
                self.tol = v;
            }
            "maxiter" => {
                let v = int(value)?;
                if v < 1 {
                    return Err(range_err("must be at least 1"));
                }
                self.maxiter = v as usize;
            }
            "burnin" => {
                let v = int(value)?;
                if v < 0 {
                    return Err(range_err("must be nonnegative"));
                }
                self.burnin = v as usize;
            }
            "workers" => {
                let v = int(value)?;
                if !(0..=4096).contains(&v) {
                    return Err(range_err("must lie in 0..=4096"));
                }
                self.workers = v as usize;
            }
            "out_dir" => {
                self.out_dir = PathBuf::from(value);
            }
            other => {
                return Err(parse_err(format!("unknown key `{other}`")));
            }
        }
        Ok(())
    }
}

/// Parses a `key = value` config file over the built-in defaults.
/// `#` starts a comment; blank lines are ignored; unknown keys are
/// rejected with their line number.
pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut config = Config::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg: "expected `key = value`".to_string(),
        })?;
        config.set(key.trim(), value.trim(), path, idx + 1)?;
    }
    Ok(config)
}

#[derive(Parser, Debug)]
#[command(name = "tentlab", version, about = "Tent-map inverse-limit measure laboratory")]
struct Cli {
    /// Key = value configuration file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the acim density at one slope and write it as CSV.
    Acim {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        bins: Option<usize>,
        /// ulam | birkhoff | markov
        #[arg(long, default_value = "ulam")]
        method: String,
        #[arg(long)]
        out: PathBuf,
        /// Orbit length for the birkhoff method.
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
        #[arg(long)]
        burnin: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Statistical-stability sweep of acim distances around t-star.
    Sweep {
        #[arg(long)]
        t_star: f64,
        #[arg(long, default_value_t = 3)]
        k_min: u32,
        #[arg(long, default_value_t = 10)]
        k_max: u32,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long, default_value_t = 1_000_000)]
        birkhoff_n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// W1 threshold applied to grid points with |t - t*| <= 2^-7.
        #[arg(long, default_value_t = 0.02)]
        threshold: f64,
    },
    /// Weak-continuity check of a cylinder set read from a spec file.
    Cylinder {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        t_star: f64,
        #[arg(long, default_value_t = 7)]
        k_min: u32,
        #[arg(long, default_value_t = 10)]
        k_max: u32,
        #[arg(long, default_value_t = 30_000)]
        samples: usize,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.02)]
        threshold: f64,
    },
    /// Basin regularity test against reference thread averages.
    Physicality {
        #[arg(long)]
        t: f64,
        /// interval | collar | annulus
        #[arg(long, default_value = "collar")]
        basin: String,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 1_000_000)]
        orbit: usize,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Minimum passing fraction.
        #[arg(long, default_value_t = 0.99)]
        threshold: f64,
    },
    /// Psi bijection roundtrip and conjugacy residual suite.
    PsiCheck {
        #[arg(long, default_value_t = 1.8)]
        t: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Figures with backing CSV: acim | delay | disk-orbit | sweep-curves.
    Render {
        #[arg(long)]
        what: String,
        #[arg(long, default_value_t = 1.8)]
        t: f64,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 1.0)]
        y0: f64,
        #[arg(long, default_value_t = 0.1)]
        s0: f64,
        #[arg(long, default_value_t = 60)]
        steps: usize,
        #[arg(long, default_value_t = 1.8)]
        t_star: f64,
        #[arg(long, default_value_t = 3)]
        k_min: u32,
        #[arg(long, default_value_t = 8)]
        k_max: u32,
        #[arg(long)]
        out: PathBuf,
        /// CSV path; defaults to the image path with a .csv extension.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Entry point behind the binary: parses argv, runs, maps errors to exit
/// codes.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    let config = match cli.config.as_deref().map(load_config).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let workers = std::env::var("TENTLAB_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(config.workers);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match pool.install(|| execute(cli.command, &config)) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::ParamRange { .. }
                | Error::Domain { .. }
                | Error::ConfigParse { .. }
                | Error::ConfigRange { .. }
                | Error::NotMarkov { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn resolve_out(config: &Config, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        config.out_dir.join(path)
    }
}

fn header(command: &str, seed: u64, params: &[(&str, String)]) -> String {
    let mut out = format!("# tentlab {VERSION}\n# command = {command}\n# seed = {seed}\n");
    for (k, v) in params {
        let _ = writeln!(out, "# {k} = {v}");
    }
    out
}

fn write_output(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Grid t_star +- 2^-k for k in k_min..=k_max, clipped to (1, 2].
fn dyadic_grid(t_star: f64, k_min: u32, k_max: u32) -> Vec<f64> {
    let mut grid = Vec::new();
    for k in k_min..=k_max {
        let dt = 0.5f64.powi(k as i32);
        for t in [t_star - dt, t_star + dt] {
            if t > 1.0 && t <= 2.0 {
                grid.push(t);
            }
        }
    }
    grid
}

/// Reads the structured cylinder-set file: `[term]` blocks with `n`,
/// `center = [x0, t0]` and `half = [a, b]` entries.
pub fn load_cylinder_spec(path: &Path) -> Result<CylinderSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, msg: String| Error::ConfigParse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let parse_pair = |line: usize, value: &str| -> Result<(f64, f64)> {
        let inner = value
            .trim()
            .strip_prefix('[')
            .and_then(|v| v.strip_suffix(']'))
            .ok_or_else(|| parse_err(line, format!("expected `[a, b]`, got `{value}`")))?;
        let mut parts = inner.split(',').map(str::trim);
        let a = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| parse_err(line, "bad first coordinate".into()))?;
        let b = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| parse_err(line, "bad second coordinate".into()))?;
        if parts.next().is_some() {
            return Err(parse_err(line, "expected exactly two coordinates".into()));
        }
        Ok((a, b))
    };

    struct Partial {
        n: Option<usize>,
        center: Option<(f64, f64)>,
        half: Option<(f64, f64)>,
        line: usize,
    }
    let finish = |p: Partial| -> Result<(usize, TiltedRectangle)> {
        let n = p.n.ok_or_else(|| parse_err(p.line, "term missing `n`".into()))?;
        let center = p.center.ok_or_else(|| parse_err(p.line, "term missing `center`".into()))?;
        let half = p.half.ok_or_else(|| parse_err(p.line, "term missing `half`".into()))?;
        Ok((n, TiltedRectangle::new(center, half)?))
    };
    let mut terms = Vec::new();
    let mut current: Option<Partial> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line == "[term]" {
            if let Some(p) = current.take() {
                terms.push(finish(p)?);
            }
            current = Some(Partial { n: None, center: None, half: None, line: idx + 1 });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(idx + 1, "expected `key = value`".into()))?;
        let p = current
            .as_mut()
            .ok_or_else(|| parse_err(idx + 1, "entry outside a [term] block".into()))?;
        match key.trim() {
            "n" => {
                p.n = Some(
                    value
                        .trim()
                        .parse()
                        .map_err(|e| parse_err(idx + 1, format!("bad `n`: {e}")))?,
                )
            }
            "center" => p.center = Some(parse_pair(idx + 1, value)?),
            "half" => p.half = Some(parse_pair(idx + 1, value)?),
            other => return Err(parse_err(idx + 1, format!("unknown key `{other}`"))),
        }
    }
    if let Some(p) = current.take() {
        terms.push(finish(p)?);
    }
    if terms.is_empty() {
        return Err(parse_err(0, "no [term] blocks found".into()));
    }
    CylinderSet::new(terms)
}

fn execute(command: Command, config: &Config) -> Result<bool> {
    match command {
        Command::Acim { t, bins, method, out, n, burnin, seed } => {
            let map = TentMap::new(t)?;
            let bins = bins.unwrap_or(config.bins);
            let burnin = burnin.unwrap_or(config.burnin);
            let seed = seed.unwrap_or(config.seed);
            let density = match method.as_str() {
                "ulam" => stationary_density(&ulam_operator(&map, bins), config.tol, config.maxiter)?,
                "birkhoff" => birkhoff_histogram(&map, None, n, bins, burnin, seed),
                "markov" => markov_exact_density(&map, bins)?,
                other => {
                    return Err(Error::ConfigRange {
                        key: "method".into(),
                        msg: format!("unknown method `{other}` (ulam|birkhoff|markov)"),
                    })
                }
            };
            let out = resolve_out(config, &out);
            let mut body = Vec::new();
            density.write_csv(&mut body).map_err(|e| Error::io(&out, e))?;
            let head = header(
                "acim",
                seed,
                &[
                    ("t", t.to_string()),
                    ("bins", bins.to_string()),
                    ("method", method.clone()),
                    ("n", n.to_string()),
                    ("burnin", burnin.to_string()),
                ],
            );
            write_output(&out, &format!("{head}{}", String::from_utf8_lossy(&body)))?;
            println!("acim: t = {t}, method = {method}, {bins} bins -> {}", out.display());
            Ok(true)
        }
        Command::Sweep { t_star, k_min, k_max, bins, birkhoff_n, seed, out, threshold } => {
            TentMap::new(t_star)?;
            let seed = seed.unwrap_or(config.seed);
            let params = AcimSweepParams {
                nbins: bins.unwrap_or(config.bins),
                birkhoff_n,
                burnin: config.burnin,
                tol: config.tol,
                maxiter: config.maxiter,
                seed,
            };
            let grid = dyadic_grid(t_star, k_min, k_max);
            let report = acim_sweep(&grid, t_star, &params)?;
            let head = header(
                "sweep",
                seed,
                &[
                    ("t_star", t_star.to_string()),
                    ("k_min", k_min.to_string()),
                    ("k_max", k_max.to_string()),
                    ("bins", params.nbins.to_string()),
                    ("birkhoff_n", birkhoff_n.to_string()),
                    ("threshold", threshold.to_string()),
                ],
            );
            let out = resolve_out(config, &out);
            write_output(&out, &format!("{head}{}", report.to_csv()))?;
            let worst_near = report
                .points
                .iter()
                .filter(|p| (p.t - t_star).abs() <= 0.5f64.powi(7) + 1e-12)
                .map(|p| p.w1_ulam)
                .fold(0.0, f64::max);
            let ok = report.loglog_slope < 0.0 && worst_near <= threshold;
            println!(
                "sweep: t* = {t_star}, slope = {:.3}, worst W1 within 2^-7 = {:.4} (threshold {threshold}) -> {}",
                report.loglog_slope,
                worst_near,
                if ok { "PASS" } else { "FAIL" }
            );
            Ok(ok)
        }
        Command::Cylinder { spec, t_star, k_min, k_max, samples, bins, seed, out, threshold } => {
            TentMap::new(t_star)?;
            let set = load_cylinder_spec(&spec)?;
            let seed = seed.unwrap_or(config.seed);
            let params = CylinderContinuityParams {
                nbins: bins.unwrap_or(config.bins),
                samples,
                tol: config.tol,
                maxiter: config.maxiter,
                seed,
            };
            let grid = dyadic_grid(t_star, k_min, k_max);
            let report = cylinder_continuity(&set, &grid, t_star, &params)?;
            let head = header(
                "cylinder",
                seed,
                &[
                    ("spec", spec.display().to_string()),
                    ("t_star", t_star.to_string()),
                    ("k_min", k_min.to_string()),
                    ("k_max", k_max.to_string()),
                    ("samples", samples.to_string()),
                    ("bins", params.nbins.to_string()),
                    ("threshold", threshold.to_string()),
                ],
            );
            let out = resolve_out(config, &out);
            write_output(&out, &format!("{head}{}", report.to_csv()))?;
            if report.degenerate_at_star {
                println!("cylinder: slice empty at t* = {t_star} (degenerate; reported, not failed)");
                return Ok(true);
            }
            let ok = report.max_exact_dev <= threshold && report.worst_agreement_z <= 3.0;
            println!(
                "cylinder: level {} set, max |mu(A) - mu*(A)| = {:.4} (threshold {threshold}), worst z = {:.2} -> {}",
                report.level,
                report.max_exact_dev,
                report.worst_agreement_z,
                if ok { "PASS" } else { "FAIL" }
            );
            Ok(ok)
        }
        Command::Physicality { t, basin, samples, orbit, eps, seed, out, threshold } => {
            let map = TentMap::new(t)?;
            let basin: Basin = basin
                .parse()
                .map_err(|msg| Error::ConfigRange { key: "basin".into(), msg })?;
            let seed = seed.unwrap_or(config.seed);
            let params = PhysicalityParams {
                samples,
                orbit_len: orbit,
                eps,
                ref_windows: 2_000_000,
                seed,
            };
            let bank = ObservableBank::standard();
            let report = physicality_test(&map, basin, &bank, &params);
            let head = header(
                "physicality",
                seed,
                &[
                    ("t", t.to_string()),
                    ("basin", basin.to_string()),
                    ("samples", samples.to_string()),
                    ("orbit", orbit.to_string()),
                    ("eps", eps.to_string()),
                    ("threshold", threshold.to_string()),
                ],
            );
            let out = resolve_out(config, &out);
            write_output(&out, &format!("{head}{}", report.to_csv()))?;
            let ok = report.pass_fraction >= threshold;
            println!(
                "physicality: basin = {basin}, pass fraction = {:.4} (threshold {threshold}) -> {}",
                report.pass_fraction,
                if ok { "PASS" } else { "FAIL" }
            );
            Ok(ok)
        }
        Command::PsiCheck { t, samples, depth, seed } => {
            let map = TentMap::new(t)?;
            let depth = depth.unwrap_or(config.depth);
            let seed = seed.unwrap_or(config.seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let measure = AnnulusMeasure;
            let per_stratum = samples / 3;
            let (mut worst_round, mut worst_conj) = (0.0f64, 0.0f64);
            for (lo, hi) in [(0.0, 0.5), (0.5, 1.0), (1.0, 6.0)] {
                for _ in 0..per_stratum {
                    let p = measure.sample_s_restricted(&mut rng, lo, hi);
                    let th = psi(&map, p, depth);
                    let back = psi_inverse(&th)?;
                    let dy = (p.y - back.y).abs();
                    let dy = dy.min(2.0 * std::f64::consts::PI - dy);
                    worst_round = worst_round.max(dy.max((p.s - back.s).abs()));
                    let lhs = disk_nat_ext_step(&map, &th);
                    let rhs = psi(&map, annulus_shift(p), depth);
                    let mut dev = 0.0;
                    for (n, (a, b)) in lhs.entries().iter().zip(rhs.entries()).enumerate() {
                        dev += a.plane_dist(b) / (1u64 << n) as f64;
                    }
                    worst_conj = worst_conj.max(dev);
                }
            }
            let conj_bound = 1e-9 + tail_bound(depth);
            let ok = worst_round <= 1e-9 && worst_conj <= conj_bound;
            println!(
                "psi-check: t = {t}, {samples} samples at depth {depth}: roundtrip = {worst_round:.3e} (<= 1e-9), conjugacy = {worst_conj:.3e} (<= {conj_bound:.3e}) -> {}",
                if ok { "PASS" } else { "FAIL" }
            );
            Ok(ok)
        }
        Command::Render {
            what,
            t,
            bins,
            samples,
            y0,
            s0,
            steps,
            t_star,
            k_min,
            k_max,
            out,
            csv,
            seed,
        } => {
            let seed = seed.unwrap_or(config.seed);
            let bins = bins.unwrap_or(config.bins);
            let target = match what.as_str() {
                "acim" => RenderWhat::Acim { t, bins },
                "delay" => RenderWhat::Delay { t, samples },
                "disk-orbit" => RenderWhat::DiskOrbit { t, y0, s0, steps },
                "sweep-curves" => RenderWhat::SweepCurves { t_star, k_min, k_max },
                other => {
                    return Err(Error::ConfigRange {
                        key: "what".into(),
                        msg: format!("unknown figure `{other}` (acim|delay|disk-orbit|sweep-curves)"),
                    })
                }
            };
            if matches!(
                target,
                RenderWhat::Acim { .. } | RenderWhat::Delay { .. } | RenderWhat::DiskOrbit { .. }
            ) {
                TentMap::new(t)?;
            }
            let out = resolve_out(config, &out);
            let csv = match csv {
                Some(p) => resolve_out(config, &p),
                None => out.with_extension("csv"),
            };
            let head = header(
                "render",
                seed,
                &[
                    ("what", what.clone()),
                    ("t", t.to_string()),
                    ("bins", bins.to_string()),
                    ("samples", samples.to_string()),
                    ("y0", y0.to_string()),
                    ("s0", s0.to_string()),
                    ("steps", steps.to_string()),
                    ("t_star", t_star.to_string()),
                ],
            );
            if let Some(dir) = out.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                }
            }
            crate::stability::render(&target, &out, &csv, seed, &head)?;
            println!("render: {what} -> {} + {}", out.display(), csv.display());
            Ok(true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn write_tmp(dir: &Path, name: &str, contents: &str) -> PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn empty_config_gives_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_tmp(dir.path(), "empty.conf", "# nothing here\n\n");
        assert_eq!(load_config(&path).unwrap(), Config::default());
    }

    #[test]
    fn config_overrides_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_tmp(dir.path(), "a.conf", "bins = 8192\nseed = 9\n");
        let c = load_config(&path).unwrap();
        assert_eq!(c.bins, 8192);
        assert_eq!(c.seed, 9);

        let path = write_tmp(dir.path(), "b.conf", "bins = -1\n");
        match load_config(&path) {
            Err(Error::ConfigRange { key, .. }) => assert_eq!(key, "bins"),
            other => panic!("expected range error, got {other:?}"),
        }

        let path = write_tmp(dir.path(), "c.conf", "bogus = 3\n");
        match load_config(&path) {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }

        let path = write_tmp(dir.path(), "d.conf", "tol 1e-9\n");
        assert!(matches!(load_config(&path), Err(Error::ConfigParse { .. })));
    }

    #[test]
    fn flag_file_default_precedence() {
        // Randomized check of the three-level precedence on `bins`.
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        for trial in 0..40 {
            let file_bins: Option<usize> = rng.gen_bool(0.5).then(|| rng.gen_range(2..5000));
            let flag_bins: Option<usize> = rng.gen_bool(0.5).then(|| rng.gen_range(2..5000));
            let config = match file_bins {
                Some(b) => {
                    let path =
                        write_tmp(dir.path(), &format!("p{trial}.conf"), &format!("bins = {b}\n"));
                    load_config(&path).unwrap()
                }
                None => Config::default(),
            };
            let effective = flag_bins.unwrap_or(config.bins);
            let expect = flag_bins.or(file_bins).unwrap_or(4096);
            assert_eq!(effective, expect);
        }
    }

    #[test]
    fn cylinder_spec_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_tmp(
            dir.path(),
            "set.cyl",
            "# two-term cylinder set\n[term]\nn = 0\ncenter = [0.1, 1.8]\nhalf = [0.4, 0.2]\n\n[term]\nn = 2\ncenter = [-0.2, 1.8]\nhalf = [0.5, 0.25]\n",
        );
        let set = load_cylinder_spec(&path).unwrap();
        assert_eq!(set.terms().len(), 2);
        assert_eq!(set.level(), 2);

        let bad = write_tmp(dir.path(), "bad.cyl", "[term]\nn = 0\ncenter = [0.0, 1.8]\n");
        assert!(matches!(load_cylinder_spec(&bad), Err(Error::ConfigParse { .. })));

        let bad = write_tmp(dir.path(), "bad2.cyl", "[term]\nn = 0\ncentre = [0,1]\nhalf = [1,1]\n");
        assert!(matches!(load_cylinder_spec(&bad), Err(Error::ConfigParse { .. })));
    }

    #[test]
    fn run_command_exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("d.csv");

        // Slope outside (1, 2] is a usage error.
        let code = run_command(["tentlab", "acim", "--t", "2.5", "--out", out.to_str().unwrap()]);
        assert_eq!(code, 2);

        // Unknown subcommand.
        assert_eq!(run_command(["tentlab", "frobnicate"]), 2);

        // Valid small run succeeds and writes the header + data.
        let code = run_command([
            "tentlab", "acim", "--t", "2.0", "--bins", "64", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.starts_with(&format!("# tentlab {VERSION}\n")));
        assert!(text.contains("# seed = 0"));
        assert!(text.contains("bin_left,bin_right,weight"));
        for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
            let w: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
            assert!((w - 0.5).abs() <= 1e-8);
        }
    }

    #[test]
    fn run_command_bad_config_is_exit_2() {
        let dir = tempfile::tempdir().unwrap();
        let conf = write_tmp(dir.path(), "bad.conf", "bins = -5\n");
        let out = dir.path().join("d.csv");
        let code = run_command([
            "tentlab",
            "--config",
            conf.to_str().unwrap(),
            "acim",
            "--t",
            "2.0",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn psi_check_passes_at_default_tolerances() {
        let code =
            run_command(["tentlab", "psi-check", "--samples", "600", "--depth", "12", "--seed", "7"]);
        assert_eq!(code, 0);
    }
}
