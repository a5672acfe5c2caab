use std::collections::HashSet;
use std::path::Path;
use std::process::Command;

use lqgv_cli::artifact::decode_color;

fn lqgv() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lqgv"))
}

fn write_cfg(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("run.cfg");
    std::fs::write(&p, body).unwrap();
    p
}

fn tmpdir(tag: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("lqgv-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn render_raster_roundtrips_owners() {
    let d = tmpdir("render");
    let n = 65usize;
    let cfg = write_cfg(
        &d,
        "n = 65\ntopology = plane\nfield = flat\nexpected_points = 50\nseed = 11\n",
    );
    let out = d.join("out");
    let status = lqgv()
        .args(["render", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let img = image::open(out.join("tessellation.png")).unwrap().to_rgb8();
    assert_eq!((img.width() as usize) * (img.height() as usize), n * n);

    // Exactly one color per cell; a full-window tessellation has no
    // out-of-domain (black) pixels.
    let mut colors = HashSet::new();
    for p in img.pixels() {
        assert!(decode_color(p.0).is_some(), "black pixel in full window");
        colors.insert(p.0);
    }
    let points = std::fs::read_to_string(out.join("points.csv")).unwrap();
    let rows: Vec<&str> = points.lines().skip(1).collect();
    assert_eq!(colors.len(), rows.len());

    // The pixel over each Poisson point decodes back to its cell id.
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        let id: u32 = f[0].parse().unwrap();
        let i: u32 = f[1].parse().unwrap();
        let j: u32 = f[2].parse().unwrap();
        let p = img.get_pixel(i, (n as u32 - 1) - j);
        assert_eq!(decode_color(p.0), Some(id));
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let d = tmpdir("determinism");
    let cfg = write_cfg(
        &d,
        "n = 49\ntopology = plane\nfield = wn\nexpected_points = 30\nseed = 5\nwalks = 1\n",
    );
    let mut manifests = Vec::new();
    for k in 0..2 {
        let out = d.join(format!("out{k}"));
        let status = lqgv()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        manifests.push(std::fs::read(out.join("manifest.json")).unwrap());
    }
    assert_eq!(manifests[0], manifests[1]);
}

#[test]
fn unknown_config_key_is_rejected() {
    let d = tmpdir("badkey");
    let cfg = write_cfg(&d, "n = 49\ntopology = plane\nfield = flat\nbogus = 1\n");
    let status = lqgv()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(d.join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn unknown_mode_is_rejected() {
    let d = tmpdir("badmode");
    let cfg = write_cfg(&d, "n = 49\ntopology = plane\nfield = flat\n");
    let status = lqgv()
        .args(["frobnicate", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn verify_euclidean_passes() {
    let d = tmpdir("euclid");
    let cfg = write_cfg(
        &d,
        "n = 65\ntopology = plane\nfield = flat\nexperiment = euclidean\n\
         expected_points = 700\nwalks = 4000\nseed = 2\n",
    );
    let out = d.join("out");
    let status = lqgv()
        .args(["verify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report = std::fs::read_to_string(out.join("euclidean.json")).unwrap();
    assert!(report.contains("\"pass\": true"));
}

#[test]
fn field_cache_reuse_is_identical() {
    let d = tmpdir("cache");
    let cfg = write_cfg(
        &d,
        "n = 49\ntopology = plane\nfield = wn\nexpected_points = 20\nseed = 9\n",
    );
    let cache = d.join("field.lqgf");
    let mut manifests = Vec::new();
    for k in 0..2 {
        let out = d.join(format!("out{k}"));
        let status = lqgv()
            .args(["simulate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .arg("--field-cache")
            .arg(&cache)
            .status()
            .unwrap();
        assert!(status.success());
        manifests.push(std::fs::read(out.join("manifest.json")).unwrap());
    }
    assert!(cache.exists());
    assert_eq!(manifests[0], manifests[1]);
}
