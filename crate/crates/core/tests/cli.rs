use std::fs;
use std::path::Path;

use serde_json::Value;
use taskframe::cli::dispatch;
use tempfile::TempDir;

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["taskframe"];
    argv.extend_from_slice(args);
    dispatch(argv)
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn read_json(path: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_then_infer() {
    let dir = TempDir::new().unwrap();
    let ep = p(&dir, "ep.json");
    assert_eq!(run(&["simulate", "--dim", "3", "--noise", "0.1", "--steps", "100", "--seed", "7", "--out", &ep, "--quiet"]), 0);
    let v = read_json(&ep);
    assert_eq!(v["positions"].as_array().unwrap().len(), 100);
    assert_eq!(v["truth"].as_array().unwrap().len(), 3);
    assert_eq!(v["noise"], 0.1);
    assert_eq!(v["seed"], 7);
    assert!(v["applied_accelerations"].is_array());

    let res = p(&dir, "res.json");
    assert_eq!(run(&["infer", "--method", "dcs", "--input", &ep, "--out", &res]), 0);
    let r = read_json(&res);
    assert_eq!(r["point"].as_array().unwrap().len(), 3);
    assert!(r["mede"].as_f64().unwrap() < 0.5);
    for key in ["score", "iterations", "init_point", "converged", "seed"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }

    let csv = p(&dir, "ep.csv");
    assert_eq!(run(&["simulate", "--dim", "2", "--format", "csv", "--out", &csv, "--quiet"]), 0);
    assert!(fs::read_to_string(&csv).unwrap().starts_with("t,x,y,ax,ay\n"));
    assert_eq!(run(&["infer", "--input", &csv, "--method", "triangulate", "--out", &res]), 0);
}

#[test]
fn sequential_and_partial_infer() {
    let dir = TempDir::new().unwrap();
    let ep = p(&dir, "ep.json");
    assert_eq!(
        run(&["simulate", "--second-point", "random", "--switch-step", "50", "--out", &ep, "--quiet"]),
        0
    );
    let res = p(&dir, "seq.json");
    assert_eq!(run(&["infer", "--input", &ep, "--switch-step", "50", "--out", &res]), 0);
    let r = read_json(&res);
    assert!(r["mede_p1"].as_f64().unwrap() < 0.1);
    assert!(r["mede_p2"].as_f64().unwrap().is_finite());
    assert_eq!(run(&["infer", "--input", &ep, "--prefix", "30", "--out", &res]), 0);
    assert_eq!(run(&["infer", "--input", &ep, "--prefix", "1", "--out", &res]), 1);
}

#[test]
fn bad_method_is_usage_error_without_output() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "never.json");
    assert_eq!(run(&["infer", "--method", "nosuch", "--input", "x.json", "--out", &out]), 1);
    assert!(!Path::new(&out).exists());
    assert_eq!(run(&["frobnicate"]), 1);
    assert_eq!(run(&["--help"]), 0);
    assert_eq!(run(&["bench", "--help"]), 0);
}

#[test]
fn runtime_failure_exits_two() {
    let dir = TempDir::new().unwrap();
    let traj = p(&dir, "line.json");
    // All accelerations point the same way: the rays never cross.
    fs::write(
        &traj,
        r#"{"dim":3,"dt":0.1,"positions":[[0,0,0],[1,0,0],[2,0,0],[3,0,0]],"accelerations":[[1,0,0],[1,0,0],[1,0,0],[1,0,0]]}"#,
    )
    .unwrap();
    let out = p(&dir, "out.json");
    assert_eq!(run(&["infer", "--method", "triangulate", "--input", &traj, "--out", &out]), 2);
    assert!(!Path::new(&out).exists());
    assert_eq!(run(&["infer", "--input", &p(&dir, "missing.json")]), 2);
}

#[test]
fn bench_minimal_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = p(&dir, "a.json");
    let b = p(&dir, "b.json");
    assert_eq!(run(&["bench", "--methods", "dcs", "--noise", "0", "--seeds", "1", "--out", &a, "--quiet"]), 0);
    let r = read_json(&a);
    assert_eq!(r["cells"].as_array().unwrap().len(), 1);
    assert_eq!(run(&["bench", "--methods", "dcs", "--noise", "0", "--seeds", "1", "--out", &b, "--quiet", "--jobs", "1"]), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let c = p(&dir, "c.csv");
    assert_eq!(run(&["bench", "--methods", "dcs,triangulate", "--noise", "0,0.3", "--seeds", "2", "--format", "csv", "--out", &c, "--quiet"]), 0);
    let text = fs::read_to_string(&c).unwrap();
    assert!(text.starts_with("method,noise,key,seed,mede,status\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn reproduce_presets_have_expected_shape() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "t3.json");
    assert_eq!(run(&["bench", "--reproduce", "table3d", "--seeds", "2", "--iters", "20", "--out", &out, "--quiet"]), 0);
    let r = read_json(&out);
    assert_eq!(r["cells"].as_array().unwrap().len(), 25);
    assert_eq!(r["methods"].as_array().unwrap().len(), 5);
    assert_eq!(r["settings"]["seeds"], 2);

    assert_eq!(run(&["bench", "--reproduce", "sequential", "--seeds", "1", "--noise", "0", "--iters", "20", "--out", &out, "--quiet"]), 0);
    assert_eq!(read_json(&out)["cells"].as_array().unwrap().len(), 9);
    assert_eq!(run(&["bench", "--reproduce", "partial", "--seeds", "1", "--noise", "0.1", "--prefixes", "5,30", "--iters", "20", "--out", &out, "--quiet"]), 0);
    assert_eq!(read_json(&out)["cells"].as_array().unwrap().len(), 2);
    assert_eq!(run(&["bench", "--reproduce", "table2d", "--seeds", "1", "--noise", "0", "--iters", "20", "--out", &out, "--quiet"]), 0);
    assert_eq!(read_json(&out)["settings"]["sim"]["dim"], 2);
}

#[test]
fn config_file_fills_missing_flags_only() {
    let dir = TempDir::new().unwrap();
    let cfg = p(&dir, "bench.toml");
    fs::write(&cfg, "seeds = 2\nnoise = [0.0, 0.1]\nmethods = [\"triangulate\"]\nquiet = true\n").unwrap();
    let out = p(&dir, "r.json");
    assert_eq!(run(&["bench", "--config", &cfg, "--seeds", "3", "--out", &out]), 0);
    let r = read_json(&out);
    assert_eq!(r["settings"]["seeds"], 3);
    assert_eq!(r["noise_levels"].as_array().unwrap().len(), 2);
    assert_eq!(r["methods"][0], "triangulate");

    fs::write(&cfg, "no_such_flag = 1\n").unwrap();
    assert_eq!(run(&["bench", "--config", &cfg, "--out", &out]), 1);
}

#[test]
fn landscape_csv() {
    let dir = TempDir::new().unwrap();
    let ep = p(&dir, "ep.json");
    assert_eq!(run(&["simulate", "--dim", "2", "--out", &ep, "--quiet"]), 0);
    let out = p(&dir, "l.csv");
    assert_eq!(run(&["landscape", "--input", &ep, "--min=-5", "--max", "5", "--resolution", "11,21", "--out", &out]), 0);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("px,py,score\n"));
    assert_eq!(text.lines().count(), 1 + 11 * 21);
    assert_eq!(run(&["landscape", "--input", &ep, "--min", "1", "--max", "0", "--out", &out]), 1);
    assert_eq!(run(&["landscape", "--input", &ep, "--format", "json"]), 1);
}

#[test]
fn frame_commands() {
    let dir = TempDir::new().unwrap();
    let cloud = p(&dir, "cloud.json");
    let mut pts = Vec::new();
    for i in 0..8 {
        for j in 0..8 {
            pts.push(format!("[{},{},0]", i as f64 * 0.1, j as f64 * 0.1));
        }
    }
    fs::write(&cloud, format!(r#"{{"points":[{}],"viewpoint":[0,0,1]}}"#, pts.join(","))).unwrap();
    let normal = p(&dir, "n.json");
    assert_eq!(run(&["frame", "estimate-normal", "--cloud", &cloud, "--at", "0.3,0.3,0", "--out", &normal]), 0);
    let n = read_json(&normal);
    assert!((n["normal"][2].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let frame = p(&dir, "f.json");
    assert_eq!(run(&["frame", "build", "--refined", "0,0,0", "--normal", "0,0,1", "--interaction", "0,1,0", "--out", &frame]), 0);
    let f = read_json(&frame);
    assert_eq!(f["rotation"][0], serde_json::json!([1.0, 0.0, 0.0]));
    assert_eq!(run(&["frame", "build", "--refined", "0.3,0.3,0", "--cloud", &cloud, "--interaction=-1,0,0", "--out", &frame]), 0);
    assert_eq!(run(&["frame", "build", "--refined", "0,0,0", "--normal", "0,0,1", "--interaction", "0,0,2"]), 2);
}

#[test]
fn dmp_fit_and_rollout() {
    let dir = TempDir::new().unwrap();
    let n = 60;
    let mut pos = Vec::new();
    let mut ori = Vec::new();
    for t in 0..n {
        let u = t as f64 / (n - 1) as f64;
        let s = 10.0 * u.powi(3) - 15.0 * u.powi(4) + 6.0 * u.powi(5);
        pos.push(format!("[{},{},{}]", 0.5 - 0.3 * s, 0.1 + 0.2 * s, 0.4 - 0.2 * s));
        let half = 0.25 * s;
        ori.push(format!("[{},0,0,{}]", half.cos(), half.sin()));
    }
    let demo = p(&dir, "demo.json");
    fs::write(&demo, format!(r#"{{"dt":0.02,"positions":[{}],"orientations":[{}]}}"#, pos.join(","), ori.join(","))).unwrap();
    let frame = p(&dir, "f.json");
    assert_eq!(run(&["frame", "build", "--refined", "0,0,0", "--normal", "0,0,1", "--interaction", "1,1,0", "--out", &frame]), 0);
    let model = p(&dir, "m.json");
    assert_eq!(run(&["dmp", "fit", "--demo", &demo, "--frame", &frame, "--out", &model, "--quiet"]), 0);
    let m = read_json(&model);
    assert_eq!(m["position"]["n_basis"], 20);
    assert_eq!(m["orientation"]["channel"], "orientation");

    let out = p(&dir, "roll.json");
    assert_eq!(run(&["dmp", "rollout", "--model", &model, "--frame", &frame, "--out", &out]), 0);
    let r = read_json(&out);
    assert_eq!(r["positions"].as_array().unwrap().len(), n);
    let first = r["positions"][0].as_array().unwrap();
    assert!((first[0].as_f64().unwrap() - 0.5).abs() < 1e-9);

    assert_eq!(
        run(&["dmp", "rollout", "--model", &model, "--start-position", "1,0,0.2", "--start-orientation", "1,0,0,0", "--steps", "80", "--out", &out]),
        0
    );
    assert_eq!(read_json(&out)["positions"].as_array().unwrap().len(), 80);
    assert_eq!(run(&["dmp", "rollout", "--model", &model, "--start-position", "1,0,0.2", "--start-orientation", "2,0,0,0"]), 1);
}
