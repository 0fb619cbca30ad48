use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bertrand_core::sketch::SketchShape;
use bertrand_core::{Network, Rational, StrategyProfile, Tolerance};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bertrand"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const PAIR: &str = r#"{"formatVersion": 1, "sellers": [{"id": "s1", "alpha": 1}, {"id": "s2", "alpha": 0}],
  "markets": [{"a": "s1", "b": "s2", "beta": 1}]}"#;

const LINE3: &str = r#"{"formatVersion": 1,
  "sellers": [{"id": "s1", "alpha": 1}, {"id": "s2", "alpha": 0}, {"id": "s3", "alpha": 0}],
  "markets": [{"a": "s1", "b": "s2", "beta": 1}, {"a": "s2", "b": "s3", "beta": 1}]}"#;

const STAR: &str = r#"{"formatVersion": 1,
  "sellers": [{"id": "c", "alpha": 10}, {"id": "p1", "alpha": 2}, {"id": "p2", "alpha": 1}],
  "markets": [{"a": "c", "b": "p1", "beta": 1}, {"a": "c", "b": "p2", "beta": 1}]}"#;

const TRIANGLE: &str = r#"{"formatVersion": 1,
  "sellers": [{"id": "s1", "alpha": 4}, {"id": "s2", "alpha": 3}, {"id": "s3", "alpha": 2}],
  "markets": [{"a": "s1", "b": "s2", "beta": 1}, {"a": "s1", "b": "s3", "beta": 1}, {"a": "s2", "b": "s3", "beta": 1}]}"#;

const LINE4: &str = r#"{"formatVersion": 1,
  "sellers": [{"id": "s1", "alpha": 6}, {"id": "s2", "alpha": 3}, {"id": "s3", "alpha": 7}, {"id": "s4", "alpha": 2}],
  "markets": [{"a": "s1", "b": "s2", "beta": 1}, {"a": "s2", "b": "s3", "beta": 1}, {"a": "s3", "b": "s4", "beta": 1}]}"#;

#[test]
fn solve_two_intro_pair() {
    let d = TempDir::new().unwrap();
    write(d.path(), "net.json", PAIR);
    let o = run(d.path(), &["solve", "two", "net.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("u = (1, 1/2)"));
    // nothing is written without --out
    assert_eq!(fs::read_dir(d.path()).unwrap().count(), 1);
}

#[test]
fn solve_tree_writes_profile_files() {
    let d = TempDir::new().unwrap();
    write(d.path(), "net.json", LINE3);
    let o = run(d.path(), &["solve", "tree", "net.json", "--out", "res"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("u = (1, 2/3, 1/3)"));
    for f in ["profile.json", "profile.csv", "sketch-solution.json", "report.json"] {
        assert!(d.path().join("res").join(f).exists(), "{f}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("res/report.json")).unwrap()).unwrap();
    assert_eq!(report["formatVersion"], 1);
    assert_eq!(report["verdict"], "equilibrium");

    // the written profile re-imports losslessly and verifies again
    let text = fs::read_to_string(d.path().join("res/profile.json")).unwrap();
    let net = Network::<Rational>::from_json_str(LINE3).unwrap();
    let p = StrategyProfile::<Rational>::from_json(&serde_json::from_str(&text).unwrap(), &net, Tolerance::exact()).unwrap();
    assert_eq!(serde_json::to_string_pretty(&p.to_json(&net)).unwrap() + "\n", text);
    let o = run(d.path(), &["verify", "net.json", "res/profile.json"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn solve_line_matches_tree() {
    let d = TempDir::new().unwrap();
    write(d.path(), "net.json", LINE3);
    let a = run(d.path(), &["solve", "line", "net.json"]);
    let b = run(d.path(), &["solve", "tree", "net.json"]);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn solve_star_case_one() {
    let d = TempDir::new().unwrap();
    write(d.path(), "net.json", STAR);
    let o = run(d.path(), &["solve", "star", "net.json", "--center", "c"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("u = (10, 85/33, 5/3)"), "{s}");
    assert!(s.contains("center c, case CenterAtom"));
}

#[test]
fn solve_clique_reports_deviation() {
    let d = TempDir::new().unwrap();
    write(d.path(), "net.json", TRIANGLE);
    let o = run(d.path(), &["solve", "clique", "net.json"]);
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    assert!(s.contains("t = (1, 20/21, 16/21)"), "{s}");
    assert!(s.contains("s1 gains 4/7 by pricing at 16/21"), "{s}");
}

#[test]
fn sketch_solve_four_line() {
    let d = TempDir::new().unwrap();
    write(d.path(), "net.json", LINE4);
    write(
        d.path(),
        "sketch.json",
        r#"{"formatVersion": 1, "supports": {"s1": [["6/7", 1]], "s2": [["6/7", 1]], "s3": [["7/9", 1]], "s4": [["7/9", 1]]},
            "atoms": ["s1", "s3"]}"#,
    );
    let o = run(d.path(), &["sketch-solve", "net.json", "sketch.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("u = (6, 85/21, 7, 7/3)"));

    // the same supports with the other sketch's middle point admit no solution
    write(
        d.path(),
        "bad.json",
        r#"{"formatVersion": 1, "supports": {"s1": [["7/8", 1]], "s2": [["7/8", 1]], "s3": [["7/9", 1]], "s4": [["7/9", 1]]},
            "atoms": ["s1", "s3"]}"#,
    );
    let o = run(d.path(), &["sketch-solve", "net.json", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("infeasible"));
}

fn shape_file(dir: &Path, net: &str, shape: &SketchShape) -> PathBuf {
    let n = Network::<Rational>::from_json_str(net).unwrap();
    write(dir, "shape.json", &shape.to_json(&n).to_string())
}

#[test]
fn search_boundaries_exact_and_rejected() {
    let d = TempDir::new().unwrap();
    write(d.path(), "net.json", LINE4);
    let eq2 = SketchShape::from_index_ranges(3, &[vec![(1, 2)], vec![(1, 2)], vec![(1, 3)], vec![(1, 3)]], vec![true, false, true, false])
        .unwrap();
    shape_file(d.path(), LINE4, &eq2);
    let o = run(d.path(), &["search-boundaries", "net.json", "shape.json", "--out", "res"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("exact points = (1, 6/7, 7/9)"));
    assert!(d.path().join("res/sketch-solution.json").exists());

    let eq1 = SketchShape::from_index_ranges(3, &[vec![], vec![(1, 2)], vec![(1, 3)], vec![(2, 3)]], vec![true, false, true, false])
        .unwrap();
    shape_file(d.path(), LINE4, &eq1);
    let o = run(d.path(), &["search-boundaries", "net.json", "shape.json", "--out", "res"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("not an equilibrium"));
    assert!(d.path().join("res/candidate.json").exists());
}

#[test]
fn verify_perturbed_profile() {
    let d = TempDir::new().unwrap();
    write(d.path(), "net.json", PAIR);
    // the captive seller's tail starts at 3/5 instead of 1/2
    write(
        d.path(),
        "profile.json",
        r#"{"formatVersion": 1, "sellers": [
            {"id": "s1", "segments": [{"lo": "3/5", "hi": "1", "a": "0", "b": "3/5"}], "atomAtOne": "3/5"},
            {"id": "s2", "segments": [{"lo": "1/2", "hi": "1", "a": "-1", "b": "1"}], "atomAtOne": "0"}]}"#,
    );
    let o = run(d.path(), &["verify", "net.json", "profile.json", "--out", "res"]);
    assert_eq!(o.status.code(), Some(1), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains(" gains ") && s.contains(" by pricing at "), "{s}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("res/report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "not-equilibrium");
}

#[test]
fn fp_is_byte_identical() {
    let d = TempDir::new().unwrap();
    write(d.path(), "net.json", PAIR);
    let args = ["fp", "net.json", "--grid", "1000", "--iters", "100000", "--seed", "7"];
    let a = run(d.path(), &args);
    let b = run(d.path(), &args);
    assert_eq!(a.status.code(), Some(0));
    assert!(stdout(&a).starts_with("seller,gridPrice,mass\n"));
    assert_eq!(a.stdout, b.stdout);
    let c = run(d.path(), &[&args[..], &["--out", "res"]].concat());
    assert_eq!(fs::read(d.path().join("res/histogram.csv")).unwrap(), a.stdout);
    assert_eq!(c.status.code(), Some(0));
}

#[test]
fn bounds_on_unit_line() {
    let d = TempDir::new().unwrap();
    write(d.path(), "net.json", LINE3);
    let o = run(d.path(), &["bounds", "net.json", "--utilities", "1,2/3,1/3", "--cut", "s2,s3", "--out", "res"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("cut bound for {s2,s3}: 2"));
    assert!(d.path().join("res/bounds.json").exists());
    let o = run(d.path(), &["bounds", "net.json", "--utilities", "1,2/5,1/10"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn export_cdf_samples_profile() {
    let d = TempDir::new().unwrap();
    write(d.path(), "net.json", PAIR);
    run(d.path(), &["solve", "two", "net.json", "--out", "res"]);
    let o = run(d.path(), &["export-cdf", "net.json", "res/profile.json", "--points", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 11, "{s}");
    let a = run(d.path(), &["export-cdf", "net.json", "res/profile.json", "--points", "11"]);
    assert_eq!(a.stdout, o.stdout);
}

#[test]
fn errors_exit_with_two() {
    let d = TempDir::new().unwrap();
    assert_eq!(run(d.path(), &["verify", "missing.json", "p.json"]).status.code(), Some(2));
    assert_eq!(run(d.path(), &["solve", "pentagon", "x.json"]).status.code(), Some(2));
    assert_eq!(run(d.path(), &["--exact", "--float", "solve", "two", "x.json"]).status.code(), Some(2));
    write(d.path(), "net.json", LINE3);
    assert_eq!(run(d.path(), &["solve", "star", "net.json", "--center", "s1"]).status.code(), Some(2));
    assert_eq!(run(d.path(), &["--help"]).status.code(), Some(0));
}
