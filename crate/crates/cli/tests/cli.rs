use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ocn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ocn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}

#[test]
fn generate_writes_one_tree_per_seed_deterministically() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let o = ocn(&[
            "generate",
            "--side",
            "6",
            "--seeds",
            "2",
            "--seed",
            "7",
            "--out",
            &out_arg(dir),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["random-7.json", "random-8.json"] {
        let x = fs::read(a.join("trees").join(name)).unwrap();
        let y = fs::read(b.join("trees").join(name)).unwrap();
        assert_eq!(x, y);
    }
    assert_eq!(fs::read_dir(a.join("trees")).unwrap().count(), 2);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "generate");
    assert_eq!(manifest["entries"].as_array().unwrap().len(), 2);
}

#[test]
fn cubic_grid_has_side_cubed_nodes() {
    let tmp = TempDir::new().unwrap();
    let o = ocn(&[
        "generate",
        "--side",
        "10",
        "--dim",
        "3",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert!(o.status.success());
    let rec: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("trees/random-0.json")).unwrap())
            .unwrap();
    assert_eq!(rec["parent"].as_array().unwrap().len(), 1000);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(ocn(&["generate", "--bogus"]).status.code(), Some(1));
    assert_eq!(ocn(&[]).status.code(), Some(1));
    assert_eq!(
        ocn(&["generate", "--side", "1", "--out", &out_arg(tmp.path())])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        ocn(&["generate", "--gamma", "1.5", "--out", &out_arg(tmp.path())])
            .status
            .code(),
        Some(1)
    );
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{\"dimension\": 2}").unwrap();
    assert_eq!(
        ocn(&[
            "optimize",
            bad.to_str().unwrap(),
            "--out",
            &out_arg(tmp.path())
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(ocn(&["--help"]).status.code(), Some(0));
}

#[test]
fn bounds_table_has_one_h05_row_per_side() {
    let tmp = TempDir::new().unwrap();
    let o = ocn(&["bounds", "--out", &out_arg(tmp.path())]);
    assert!(o.status.success());
    let rows = data_rows(&tmp.path().join("bounds.csv"));
    assert_eq!(
        rows.iter().filter(|r| r.contains(",h05_lower,")).count(),
        79
    );
    assert!(rows.contains(&"3,1,h1_exact,13".to_string()));
    let text = fs::read_to_string(tmp.path().join("bounds.csv")).unwrap();
    assert!(text.starts_with("# ocn "));
    assert!(text.contains("# config_hash: "));
}

#[test]
fn missing_steiner_geometry_names_the_path() {
    let tmp = TempDir::new().unwrap();
    let o = ocn(&[
        "steiner",
        "--sizes",
        "2",
        "--data-dir",
        tmp.path().join("nowhere").to_str().unwrap(),
        "--out",
        &out_arg(&tmp.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2x2.json"));
}

#[test]
fn steiner_reproduces_the_unit_square() {
    let tmp = TempDir::new().unwrap();
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/steiner");
    let o = ocn(&[
        "steiner",
        "--sizes",
        "2",
        "--data-dir",
        data.to_str().unwrap(),
        "--batch",
        "8",
        "--verify",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&tmp.path().join("crossover.csv"));
    let gamma: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
    assert!((gamma - 0.554_331_531_888_258).abs() < 1e-12);
    let curve = fs::read_to_string(tmp.path().join("curves/steiner-2x2.dat")).unwrap();
    assert_eq!(curve.lines().filter(|l| !l.starts_with('#')).count(), 1001);
}

#[test]
fn optimize_then_analyze_with_replay() {
    let tmp = TempDir::new().unwrap();
    let opt = tmp.path().join("opt");
    let o = ocn(&[
        "optimize",
        "--side",
        "8",
        "--seeds",
        "3",
        "--verify",
        "--trajectories",
        "--out",
        &out_arg(&opt),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(opt.join("trajectories/trajectory-2.csv").exists());

    let replay = tmp.path().join("replay");
    let o = ocn(&[
        "--from-manifest",
        opt.join("manifest.json").to_str().unwrap(),
        "--out",
        &out_arg(&replay),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for s in 0..3 {
        let name = format!("trees/ocn-{s}.json");
        assert_eq!(
            fs::read(opt.join(&name)).unwrap(),
            fs::read(replay.join(&name)).unwrap()
        );
    }

    let trees: Vec<String> = (0..3)
        .map(|s| {
            opt.join(format!("trees/ocn-{s}.json"))
                .to_str()
                .unwrap()
                .to_string()
        })
        .collect();
    let an = tmp.path().join("an");
    let mut args = vec!["analyze", "--preset", "volume-table", "--out"];
    let an_arg = out_arg(&an);
    args.push(&an_arg);
    args.extend(trees.iter().map(String::as_str));
    let o = ocn(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fits = data_rows(&an.join("fits.csv"));
    assert_eq!(fits.iter().filter(|r| r.contains(",volume,")).count(), 8);
    assert!(an.join("samples.csv").exists());
}
