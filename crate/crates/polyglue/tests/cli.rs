use std::path::Path;
use std::process::{Command, Output};

use polyglue::cli::OPERATIONS;
use polyglue::grid_csv::write_grid;
use polyglue_core::cylinder::{CylinderMap, Grid, PairLayout, Space};
use polyglue_core::cylinder::Asymptote;
use polyglue_core::sample::random_pair;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn polyglue(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyglue"))
        .args(args)
        .env_remove("POLYGLUE_GRID")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SELF_NODE: &str = r#"{"ordered": true,
  "components": [{"id": "S", "genus": 0}],
  "nodes": [[{"component": "S", "point": "x"}, {"component": "S", "point": "y"}]]}"#;

const TORUS_SELF_NODE: &str = r#"{"ordered": true,
  "components": [{"id": "T", "genus": 1}],
  "nodes": [[{"component": "T", "point": "x"}, {"component": "T", "point": "y"}]]}"#;

/// Torus A with a marked point joined to a bare sphere B.
const TAIL: &str = r#"{"ordered": true,
  "components": [{"id": "A", "genus": 1}, {"id": "B", "genus": 0}],
  "marked": [{"component": "A", "point": "m1"}],
  "nodes": [[{"component": "A", "point": "x"}, {"component": "B", "point": "y"}]]}"#;

const TWO_MARKS: &str = r#"{"ordered": true,
  "components": [{"id": "T", "genus": 1}],
  "marked": [{"component": "T", "point": "m1"}, {"component": "T", "point": "m2"}]}"#;

struct Fixtures {
    dir: tempfile::TempDir,
}

impl Fixtures {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        std::fs::write(p.join("surface.json"), TAIL).unwrap();
        let grid = Grid::new(0.0, 2.0, 17, 8).unwrap();
        let u = CylinderMap::from_fn(grid, 2, Asymptote::None, |s, t, o| {
            o[0] = (-s).exp() * (std::f64::consts::TAU * t).cos();
            o[1] = s * t;
        })
        .unwrap();
        std::fs::write(p.join("grid.csv"), write_grid(&u)).unwrap();
        let layout = PairLayout::with_density(4.0, 8, 16, 2).unwrap();
        let h = random_pair(&mut ChaCha8Rng::seed_from_u64(4), &layout, Space::E);
        std::fs::write(p.join("plus.csv"), write_grid(&h.plus)).unwrap();
        std::fs::write(p.join("minus.csv"), write_grid(&h.minus)).unwrap();
        std::fs::write(p.join("stable.json"), TWO_MARKS).unwrap();
        for (sub, hat) in [("necks", false), ("hat_necks", true)] {
            let out = p.join(sub);
            let mut args = vec!["glue", "--length", "16", "--out-dir", out.to_str().unwrap()];
            if hat {
                args.push("--hat");
            }
            let o = polyglue(&args);
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        }
        Self { dir }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }

    fn expand(&self, cmd: &str) -> Vec<String> {
        cmd.replace("{surface}", &self.path("surface.json"))
            .replace("{grid}", &self.path("grid.csv"))
            .replace("{plus}", &self.path("plus.csv"))
            .replace("{minus}", &self.path("minus.csv"))
            .replace("{z}", &self.path("necks/neck_z.csv"))
            .replace("{c}", &self.path("necks/neck_c.csv"))
            .replace("{hz}", &self.path("hat_necks/neck_z.csv"))
            .replace("{hc}", &self.path("hat_necks/neck_c.csv"))
            .replace("{stable}", &self.path("stable.json"))
            .replace("{dir}", &self.path("out"))
            .split_whitespace()
            .map(String::from)
            .collect()
    }
}

fn write_temp(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn surface_genus_examples() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(dir.path(), "s.json", SELF_NODE);
    let o = polyglue(&["surface", "genus", &f]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "1\n");
    let f = write_temp(dir.path(), "t.json", TORUS_SELF_NODE);
    assert_eq!(stdout(&polyglue(&["surface", "genus", &f])), "2\n");
}

#[test]
fn stabilize_removes_the_bare_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(dir.path(), "s.json", TAIL);
    let o = polyglue(&["surface", "stabilize", &f]);
    assert_eq!(o.status.code(), Some(0));
    let s = polyglue::surface_json::parse_surface(&stdout(&o)).unwrap();
    assert_eq!(s.components().len(), 1);
    assert!(s.nodes().is_empty() && s.marked().len() == 1);
}

#[test]
fn forget_keeps_the_torus_stable() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_temp(dir.path(), "s.json", TWO_MARKS);
    let o = polyglue(&["surface", "forget", &f, "--index", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let s = polyglue::surface_json::parse_surface(&stdout(&o)).unwrap();
    assert_eq!(s.marked().len(), 1);
    assert_eq!(s.marked()[0].point, "m1");
    assert!(s.is_stable());
    assert_eq!(polyglue(&["surface", "forget", &f, "--index", "0"]).status.code(), Some(2));
}

#[test]
fn index_example() {
    let o = polyglue(&["cr", "index", "--dim", "6", "--g", "0", "--k", "3", "--c1", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "6\n");
}

#[test]
fn profile_outputs_fifteen_digits() {
    let o = polyglue(&["profile", "length", "--kind", "exp", "--r", "0.5"]);
    assert_eq!(stdout(&o), "4.67077427047160\n");
    let o = polyglue(&["profile", "length", "--kind", "log", "--r", "0.5"]);
    // -ln(1/2) / 2 pi
    assert_eq!(stdout(&o), "0.110317800076326\n");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(polyglue(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(polyglue(&["cr", "index", "--dim", "6"]).status.code(), Some(2));
    assert_eq!(polyglue(&["surface", "genus", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(polyglue(&["profile", "length", "--kind", "exp", "--r", "2"]).status.code(), Some(2));
    assert_eq!(polyglue(&["--help"]).status.code(), Some(0));
}

#[test]
fn failed_checks_exit_one() {
    let o = polyglue(&["sweep-estimates", "--a-grid", "R=5,R=10", "--count", "2", "--s-max", "6", "--max-spread", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_output_is_deterministic() {
    let args = ["sweep-estimates", "--a-grid", "R=5,R=10,2^-2", "--m", "0,1", "--count", "3", "--s-max", "6", "--seed", "9"];
    let a = polyglue(&args);
    assert_eq!(a.status.code(), Some(0));
    let b = polyglue(&args);
    assert_eq!(a.stdout, b.stdout);
    let mut threaded = args.to_vec();
    threaded.extend(["--jobs", "3"]);
    assert_eq!(polyglue(&threaded).stdout, a.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("# command: sweep-estimates"));
    assert!(text.contains("estimate,delta,m,abs_a,R,ratio_lower,ratio_upper\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with("hat-gluing,")).count(), 6);
}

#[test]
fn sweep_writes_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let plot = dir.path().join("plot.py");
    let out = dir.path().join("sweep.csv");
    let o = polyglue(&[
        "sweep-estimates",
        "--a-grid",
        "R=5,R=10",
        "--delta",
        "1,2",
        "--count",
        "2",
        "--s-max",
        "6",
        "--out",
        out.to_str().unwrap(),
        "--plot",
        plot.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let script = std::fs::read_to_string(&plot).unwrap();
    assert!(script.contains("matplotlib.use(\"Agg\")"));
    assert!(script.contains("delta=1.000000") && script.contains("delta=2.000000"));
    assert!(std::fs::read_to_string(&out).unwrap().contains("hat-gluing,1,0,"));
}

#[test]
fn glue_and_unglue_through_files() {
    let f = Fixtures::new();
    let out = f.path("back");
    for (sub, hat) in [("necks", false), ("hat_necks", true)] {
        let mut args = vec![
            "unglue".to_string(),
            "--z".into(),
            f.path(&format!("{sub}/neck_z.csv")),
            "--c".into(),
            f.path(&format!("{sub}/neck_c.csv")),
            "--length".into(),
            "16".into(),
            "--out-dir".into(),
            out.clone(),
        ];
        if hat {
            args.push("--hat".into());
        }
        let o = Command::new(env!("CARGO_BIN_EXE_polyglue")).args(&args).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("reglue_on_resolved_nodes"));
    }
    let mixed = polyglue(&[
        "unglue",
        "--z",
        &f.path("necks/neck_z.csv"),
        "--c",
        &f.path("necks/neck_c.csv"),
        "--length",
        "16",
        "--hat",
        "--out-dir",
        &out,
    ]);
    assert_eq!(mixed.status.code(), Some(2));
    let z = std::fs::read_to_string(f.path("necks/neck_z.csv")).unwrap();
    assert!(z.starts_with("# neck z 16 0 16 2 "));
}

#[test]
fn glued_pair_files_round_trip() {
    let f = Fixtures::new();
    let dir = f.path("glued");
    let o = polyglue(&["glue", "--plus", &f.path("plus.csv"), "--minus", &f.path("minus.csv"), "--modulus", "0.125", "--twist", "0.25", "--out-dir", &dir]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout(&o);
    assert!(report.contains("# digest: "));
    assert!(report.lines().any(|l| l.starts_with("round_trip,") && l.ends_with(",true")));
}

#[test]
fn every_operation_runs() {
    let f = Fixtures::new();
    for (op, cmd) in OPERATIONS {
        let args = f.expand(cmd);
        let o = Command::new(env!("CARGO_BIN_EXE_polyglue"))
            .args(&args)
            .env_remove("POLYGLUE_GRID")
            .output()
            .unwrap();
        assert_eq!(
            o.status.code(),
            Some(0),
            "{op}: {cmd}\n{}\n{}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn grid_override_from_the_environment() {
    let base = ["core-test", "--modulus", "0.25", "--projected"];
    let o = Command::new(env!("CARGO_BIN_EXE_polyglue"))
        .args(base)
        .env("POLYGLUE_GRID", "4x8")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "true\n");
    let bad = Command::new(env!("CARGO_BIN_EXE_polyglue"))
        .args(base)
        .env("POLYGLUE_GRID", "lots")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn quick_verify_passes() {
    let o = polyglue(&["verify", "--quick"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 11);
}
