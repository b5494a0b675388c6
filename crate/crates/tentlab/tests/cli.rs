//! End-to-end runs of the command-line surface: grammar, exit codes,
//! config handling, and output files.

use tentlab::cli::{run_command, VERSION};

fn strs(args: &[&str]) -> Vec<String> {
    args.iter().map(|s| s.to_string()).collect()
}

#[test]
fn sweep_small_run_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let code = run_command(strs(&[
        "tentlab", "sweep", "--t-star", "1.8", "--k-min", "5", "--k-max", "8",
        "--bins", "1024", "--birkhoff-n", "100000", "--seed", "3",
        "--out", out.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with(&format!("# tentlab {VERSION}\n# command = sweep\n")));
    assert!(text.contains("# t_star = 1.8"));
    let data_rows = text.lines().filter(|l| !l.starts_with('#')).count();
    // Header row plus two grid points per k.
    assert_eq!(data_rows, 1 + 2 * 4);
}

#[test]
fn cylinder_degenerate_star_is_reported_not_failed() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("far.cyl");
    std::fs::write(&spec, "[term]\nn = 0\ncenter = [0.0, 1.2]\nhalf = [0.02, 0.02]\n").unwrap();
    let out = dir.path().join("cyl.csv");
    let code = run_command(strs(&[
        "tentlab", "cylinder", "--spec", spec.to_str().unwrap(), "--t-star", "1.8",
        "--k-min", "7", "--k-max", "8", "--samples", "1000", "--bins", "256",
        "--out", out.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
}

#[test]
fn physicality_impossible_threshold_fails_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("phys.csv");
    let code = run_command(strs(&[
        "tentlab", "physicality", "--t", "1.8", "--basin", "interval",
        "--samples", "10", "--orbit", "20000", "--eps", "0.000001",
        "--threshold", "1.0", "--out", out.to_str().unwrap(),
    ]));
    assert_eq!(code, 1);
    assert!(out.exists());
}

#[test]
fn physicality_unknown_basin_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("phys.csv");
    let code = run_command(strs(&[
        "tentlab", "physicality", "--t", "1.8", "--basin", "nowhere",
        "--samples", "5", "--orbit", "10000", "--out", out.to_str().unwrap(),
    ]));
    assert_eq!(code, 2);
}

#[test]
fn psi_check_with_insufficient_depth_reports_error() {
    // Depth 2 cannot hold the forward chain of deep annulus samples, so
    // the inversion hits the all-on-interval error and the command fails.
    let code = run_command(strs(&[
        "tentlab", "psi-check", "--samples", "300", "--depth", "2", "--seed", "5",
    ]));
    assert_eq!(code, 1);
}

#[test]
fn render_all_figures_write_files() {
    let dir = tempfile::tempdir().unwrap();
    for what in ["acim", "delay", "disk-orbit", "sweep-curves"] {
        let png = dir.path().join(format!("{what}.png"));
        let code = run_command(strs(&[
            "tentlab", "render", "--what", what, "--t", "1.8", "--bins", "256",
            "--samples", "2000", "--steps", "30", "--k-min", "4", "--k-max", "5",
            "--out", png.to_str().unwrap(),
        ]));
        assert_eq!(code, 0, "render {what}");
        assert!(png.exists());
        assert!(png.with_extension("csv").exists());
        // PNG magic.
        let bytes = std::fs::read(&png).unwrap();
        assert_eq!(&bytes[..8], &[0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n']);
    }
    let code = run_command(strs(&["tentlab", "render", "--what", "hologram", "--out", "x.png"]));
    assert_eq!(code, 2);
}

#[test]
fn config_file_drives_defaults_and_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("results");
    let conf = dir.path().join("lab.conf");
    std::fs::write(
        &conf,
        format!("bins = 128\nseed = 5 # inline comment\nout_dir = {}\n", sub.display()),
    )
    .unwrap();
    let code = run_command(strs(&[
        "tentlab", "--config", conf.to_str().unwrap(),
        "acim", "--t", "2.0", "--out", "density.csv",
    ]));
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(sub.join("density.csv")).unwrap();
    assert!(text.contains("# bins = 128"));
    assert!(text.contains("# seed = 5"));
    assert!(text.contains("# t = 2"));
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 128);

    // A flag overrides the file value.
    let code = run_command(strs(&[
        "tentlab", "--config", conf.to_str().unwrap(),
        "acim", "--t", "2.0", "--bins", "32", "--out", "density32.csv",
    ]));
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(sub.join("density32.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 32);
}

#[test]
fn missing_required_flag_is_usage_error() {
    assert_eq!(run_command(strs(&["tentlab", "acim", "--out", "x.csv"])), 2);
    assert_eq!(run_command(strs(&["tentlab", "sweep", "--out", "x.csv"])), 2);
}
