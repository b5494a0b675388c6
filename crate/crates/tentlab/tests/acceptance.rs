//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its runtime against the stated budget. Run with
//! `cargo test --test acceptance -- --nocapture` to see the lines.

use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tentlab::acim::{
    birkhoff_histogram, l1_density_distance, markov_exact_density, stationary_density,
    ulam_operator, wasserstein1, Density,
};
use tentlab::cli::run_command;
use tentlab::inverse_limit::{
    annulus_shift, disk_nat_ext_step, nat_ext_step, psi, psi_inverse, tail_bound, thread_metric,
    thread_sampler, AnnulusMeasure, CylinderSet, Thread, TiltedRectangle,
};
use tentlab::stability::{
    acim_sweep, cylinder_continuity, physicality_test, AcimSweepParams, Basin,
    CylinderContinuityParams, ObservableBank, PhysicalityParams,
};
use tentlab::tent_map::{IntervalSet, TentMap};

const SQRT2: f64 = std::f64::consts::SQRT_2;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn report(criterion: u32, name: &str, started: Instant, limit_secs: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    println!("[acceptance] criterion {criterion} ({name}): PASS in {elapsed:.1}s (limit {limit_secs}s)");
    assert!(
        elapsed < limit_secs,
        "criterion {criterion} exceeded its runtime budget: {elapsed:.1}s >= {limit_secs}s"
    );
}

#[test]
fn criterion_1_exact_piecewise_linear_suite() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);

    // Branch identities across a 50-point slope grid.
    for i in 0..50 {
        let t = 1.02 + 0.98 * i as f64 / 49.0;
        let map = TentMap::new(t).unwrap();
        assert!((map.apply(map.critical_point()) - 1.0).abs() <= 1e-12);
        assert!((map.apply(1.0) + 1.0).abs() <= 1e-12);
        assert!((map.apply(-1.0) - (3.0 - 2.0 * t)).abs() <= 1e-12);
    }

    // Preimage correctness on 10^4 random cases.
    for _ in 0..10_000 {
        let t = 2.0 - rng.gen::<f64>();
        let v = rng.gen_range(-1.0..=1.0);
        let map = TentMap::new(t).unwrap();
        for x in map.preimage_points(v).unwrap() {
            assert!((map.apply(x) - v).abs() <= 1e-12, "t={t} v={v}");
        }
    }

    // Boundary-count bound 2^{n+1}, exact counting, n <= 12, 50 slopes.
    for i in 0..50 {
        let t = 1.02 + 0.98 * i as f64 / 49.0;
        let map = TentMap::new(t).unwrap();
        let seed_set = IntervalSet::singleton(-0.3, 0.45);
        for n in 0..=12u32 {
            let pre = map.preimage_set(&seed_set, n);
            assert!(pre.boundary_count() <= 1 << (n + 1), "t={t} n={n}");
        }
    }

    report(1, "exact piecewise-linear suite", started, 10.0);
}

#[test]
fn criterion_2_acim_oracles() {
    let started = Instant::now();

    // Full slope: Ulam at 4096 bins is the constant density 1/2.
    let full = TentMap::new(2.0).unwrap();
    let d = stationary_density(&ulam_operator(&full, 4096), 1e-10, 100_000).unwrap();
    let linf = d.weights().iter().map(|w| (w - 0.5).abs()).fold(0.0, f64::max);
    assert!(linf <= 1e-8, "t=2 Ulam L-infinity error {linf:.3e}");

    // sqrt 2: Ulam against the exact Markov linear solve.
    let map = TentMap::new(SQRT2).unwrap();
    let ulam = stationary_density(&ulam_operator(&map, 4096), 1e-10, 100_000).unwrap();
    let exact = markov_exact_density(&map, 4096).unwrap();
    let w1 = wasserstein1(&ulam, &exact).unwrap();
    assert!(w1 <= 1e-3, "sqrt2 Ulam vs Markov W1 = {w1:.3e}");

    // Ulam vs Birkhoff at a million steps across the slope panel.
    for (i, t) in [1.2, 1.5, 1.8, 1.95, 2.0].into_iter().enumerate() {
        let map = TentMap::new(t).unwrap();
        let ulam = stationary_density(&ulam_operator(&map, 4096), 1e-10, 100_000).unwrap();
        let birkhoff = birkhoff_histogram(&map, None, 1_000_000, 4096, 1_000, 200 + i as u64);
        let w1 = wasserstein1(&ulam, &birkhoff).unwrap();
        assert!(w1 <= 5e-3, "t={t}: Ulam vs Birkhoff W1 = {w1:.3e}");
    }

    report(2, "acim oracles", started, 120.0);
}

#[test]
fn criterion_3_statistical_stability_sweep() {
    let started = Instant::now();
    let t_star = 1.8;
    let mut grid = Vec::new();
    for k in 3..=10u32 {
        let dt = 0.5f64.powi(k as i32);
        grid.push(t_star - dt);
        grid.push(t_star + dt);
    }
    let params = AcimSweepParams { seed: 301, ..AcimSweepParams::default() };
    let sweep = acim_sweep(&grid, t_star, &params).unwrap();

    for p in &sweep.points {
        let dt = (p.t - t_star).abs();
        if dt <= 0.5f64.powi(7) + 1e-12 {
            assert!(p.w1_ulam <= 0.02, "t={}: W1 = {:.4} above 0.02", p.t, p.w1_ulam);
        }
    }
    assert!(sweep.loglog_slope < 0.0, "fitted slope {:.3} not negative", sweep.loglog_slope);

    report(3, "statistical stability sweep", started, 300.0);
}

#[test]
fn criterion_4_cylinder_weak_continuity() {
    let started = Instant::now();
    let t_star = 1.8;
    let grid: Vec<f64> = (7..=10u32)
        .flat_map(|k| {
            let dt = 0.5f64.powi(k as i32);
            [t_star - dt, t_star + dt]
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    let params = CylinderContinuityParams { samples: 30_000, seed: 402, ..Default::default() };

    for set_idx in 0..20 {
        let terms = (0..=(rng.next_u64() % 2) as usize)
            .map(|_| {
                let n = (rng.next_u64() % 5) as usize;
                let rect = TiltedRectangle::new(
                    (rng.gen_range(-0.7..0.7), t_star + rng.gen_range(-0.015..0.015)),
                    (rng.gen_range(0.2..0.6), rng.gen_range(0.15..0.4)),
                )
                .unwrap();
                (n, rect)
            })
            .collect();
        let set = CylinderSet::new(terms).unwrap();
        let report = cylinder_continuity(&set, &grid, t_star, &params).unwrap();
        assert!(
            report.max_exact_dev <= 0.02,
            "set {set_idx}: max |mu(A) - mu*(A)| = {:.4}",
            report.max_exact_dev
        );
        assert!(
            report.worst_agreement_z <= 3.0,
            "set {set_idx}: estimators disagree at z = {:.2}",
            report.worst_agreement_z
        );
    }

    report(4, "cylinder-set weak continuity", started, 600.0);
}

#[test]
fn criterion_5_psi_suite() {
    let started = Instant::now();
    let depth = 12;
    let map = TentMap::new(1.8).unwrap();
    let measure = AnnulusMeasure;
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let bound = 1e-9 + tail_bound(depth);
    let (mut worst_round, mut worst_conj) = (0.0f64, 0.0f64);

    for (lo, hi) in [(0.0, 0.5), (0.5, 1.0), (1.0, 6.0)] {
        for _ in 0..3_334 {
            let p = measure.sample_s_restricted(&mut rng, lo, hi);
            let th = psi(&map, p, depth);
            let back = psi_inverse(&th).unwrap();
            let dy = (p.y - back.y).abs();
            let dy = dy.min(TWO_PI - dy);
            worst_round = worst_round.max(dy.max((p.s - back.s).abs()));

            let lhs = disk_nat_ext_step(&map, &psi(&map, p, depth));
            let rhs = psi(&map, annulus_shift(p), depth);
            let mut dev = 0.0;
            for (n, (a, b)) in lhs.entries().iter().zip(rhs.entries()).enumerate() {
                dev += a.plane_dist(b) / (1u64 << n) as f64;
            }
            worst_conj = worst_conj.max(dev);
        }
    }
    assert!(worst_round <= 1e-9, "roundtrip error {worst_round:.3e}");
    assert!(worst_conj <= bound, "conjugacy residual {worst_conj:.3e} above {bound:.3e}");

    report(5, "psi bijection and conjugacy", started, 60.0);
}

#[test]
fn criterion_6_physicality_of_basins() {
    let started = Instant::now();
    let map = TentMap::new(1.8).unwrap();
    let bank = ObservableBank::standard();
    let params = PhysicalityParams {
        samples: 500,
        orbit_len: 1_000_000,
        eps: 0.01,
        ref_windows: 2_000_000,
        seed: 601,
    };

    let collar = physicality_test(&map, Basin::Collar, &bank, &params);
    assert!(
        collar.pass_fraction >= 0.99,
        "collar basin pass fraction {:.4}",
        collar.pass_fraction
    );

    let annulus = physicality_test(&map, Basin::Annulus, &bank, &params);
    assert!(
        annulus.pass_fraction >= 0.99,
        "annulus basin pass fraction {:.4}",
        annulus.pass_fraction
    );

    report(6, "physicality of collar and annulus basins", started, 600.0);
}

#[test]
fn criterion_7_thread_mechanics() {
    let started = Instant::now();
    let map = TentMap::new(1.8).unwrap();

    // Contraction: threads sharing x_0 halve in distance per step, exactly
    // up to the truncation loss bounded by the reported tail.
    let depth = 14;
    let backward = |pick: usize| {
        let mut entries = vec![0.37];
        for j in 1..depth {
            let pre = map.preimage_points(entries[j - 1]).unwrap();
            entries.push(pre[pick.min(pre.len() - 1)]);
        }
        Thread::new(&map, entries).unwrap()
    };
    let (a, b) = (backward(0), backward(1));
    let (mut fa, mut fb) = (a.clone(), b.clone());
    for i in 1..=5usize {
        fa = nat_ext_step(&map, &fa);
        fb = nat_ext_step(&map, &fb);
        let got = thread_metric(&fa, &fb).unwrap();
        let want = thread_metric(&a.truncate(depth - i), &b.truncate(depth - i)).unwrap();
        assert_eq!(got.value, want.value / (1u64 << i) as f64, "step {i}");
        let full = thread_metric(&a, &b).unwrap();
        assert!((full.value - want.value).abs() <= want.tail_bound);
    }

    // Induced-measure marginals: (pi_n)* mu_hat matches the acim for n <= 8.
    for t in [1.8, 2.0] {
        let map = TentMap::new(t).unwrap();
        let nbins = 1024;
        let acim = stationary_density(&ulam_operator(&map, nbins), 1e-10, 100_000).unwrap();
        let depth = 9;
        let windows = 250_000;
        let mut hists = vec![vec![0u64; nbins]; depth];
        let mut count = 0usize;
        for th in thread_sampler(&map, 1_000 + (windows + 1) * depth, depth, 1_000, 701) {
            for (n, x) in th.entries().iter().enumerate() {
                hists[n][((x + 1.0) / 2.0 * nbins as f64) as usize % nbins] += 1;
            }
            count += 1;
        }
        let h = 2.0 / nbins as f64;
        for (n, hist) in hists.iter().enumerate() {
            let marginal = Density::from_weights(
                hist.iter().map(|c| *c as f64 / (count as f64 * h)).collect(),
            )
            .unwrap();
            let w1 = wasserstein1(&marginal, &acim).unwrap();
            assert!(w1 <= 5e-3, "t={t} marginal {n}: W1 = {w1:.4}");
        }
    }

    // Sanity: W1 <= L1 on the estimators used above.
    let u = stationary_density(&ulam_operator(&map, 1024), 1e-10, 100_000).unwrap();
    let b9 = birkhoff_histogram(&map, None, 200_000, 1024, 1_000, 702);
    assert!(wasserstein1(&u, &b9).unwrap() <= l1_density_distance(&u, &b9).unwrap() + 1e-12);

    report(7, "thread mechanics", started, 120.0);
}

#[test]
fn criterion_8_cli_determinism() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();

    let spec_path = dir.path().join("set.cyl");
    std::fs::write(
        &spec_path,
        "[term]\nn = 0\ncenter = [0.1, 1.8]\nhalf = [0.4, 0.2]\n[term]\nn = 2\ncenter = [-0.2, 1.8]\nhalf = [0.5, 0.3]\n",
    )
    .unwrap();

    let commands: Vec<Vec<String>> = vec![
        vec![
            "acim".into(), "--t".into(), "1.9".into(), "--bins".into(), "256".into(),
            "--method".into(), "ulam".into(), "--seed".into(), "7".into(),
        ],
        vec![
            "acim".into(), "--t".into(), "1.7".into(), "--bins".into(), "256".into(),
            "--method".into(), "birkhoff".into(), "--n".into(), "50000".into(),
            "--seed".into(), "7".into(),
        ],
        vec![
            "sweep".into(), "--t-star".into(), "1.8".into(), "--k-min".into(), "6".into(),
            "--k-max".into(), "8".into(), "--bins".into(), "512".into(),
            "--birkhoff-n".into(), "50000".into(), "--seed".into(), "7".into(),
        ],
        vec![
            "cylinder".into(), "--spec".into(), spec_path.to_str().unwrap().into(),
            "--t-star".into(), "1.8".into(), "--k-min".into(), "7".into(),
            "--k-max".into(), "8".into(), "--samples".into(), "5000".into(),
            "--bins".into(), "512".into(), "--seed".into(), "7".into(),
        ],
        vec![
            "physicality".into(), "--t".into(), "1.8".into(), "--basin".into(), "collar".into(),
            "--samples".into(), "20".into(), "--orbit".into(), "50000".into(),
            "--eps".into(), "0.05".into(), "--seed".into(), "7".into(),
        ],
        vec![
            "render".into(), "--what".into(), "delay".into(), "--t".into(), "1.9".into(),
            "--samples".into(), "2000".into(), "--seed".into(), "7".into(),
        ],
        vec![
            "render".into(), "--what".into(), "disk-orbit".into(), "--t".into(), "1.8".into(),
            "--steps".into(), "30".into(), "--seed".into(), "7".into(),
        ],
    ];

    for (idx, tail) in commands.iter().enumerate() {
        let run = |suffix: &str| -> Vec<u8> {
            let out = path(&format!("out_{idx}_{suffix}.csv"));
            let mut argv: Vec<String> = vec!["tentlab".into()];
            argv.extend(tail.iter().cloned());
            argv.push("--out".into());
            if tail[0] == "render" {
                let png = path(&format!("img_{idx}_{suffix}.png"));
                argv.push(png);
                argv.push("--csv".into());
                argv.push(out.clone());
            } else {
                argv.push(out.clone());
            }
            let code = run_command(argv);
            assert_eq!(code, 0, "command {idx} exited {code}");
            std::fs::read(&out).unwrap()
        };
        let first = run("a");
        let second = run("b");
        assert_eq!(first, second, "command {idx} output differs across reruns");
    }

    // psi-check emits no CSV; identical seeds must at least reproduce the
    // exit status.
    let psi_args = ["tentlab", "psi-check", "--samples", "300", "--depth", "12", "--seed", "7"];
    assert_eq!(run_command(psi_args), run_command(psi_args));

    report(8, "CLI determinism", started, 300.0);
}
