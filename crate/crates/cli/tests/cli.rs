use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jtv_fbank::experiments::{GrayImage, PgmFormat};
use jtv_fbank::generators::random_connected_graph;
use jtv_fbank::graph::{grid_graph, ring_graph, Connectivity, Graph};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jtv-fbank"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = run(dir, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn write_graph(dir: &Path, name: &str, g: &Graph) -> PathBuf {
    let p = dir.join(name);
    g.write_edge_list(&p).unwrap();
    p
}

fn json_lines(text: &str) -> Vec<Value> {
    text.lines().filter(|l| l.starts_with('{')).map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn snr(v: &Value) -> f64 {
    match &v["snr_db"] {
        Value::String(s) if s == "+inf" => f64::INFINITY,
        x => x.as_f64().unwrap(),
    }
}

fn sha256_hex(path: &Path) -> String {
    use sha2::{Digest, Sha256};
    format!("{:x}", Sha256::digest(std::fs::read(path).unwrap()))
}

fn check_manifest(dir: &Path, manifest: &Path) -> Value {
    let m: Value = serde_json::from_str(&std::fs::read_to_string(manifest).unwrap()).unwrap();
    for key in ["inputs", "outputs"] {
        for f in m[key].as_array().unwrap() {
            let p = dir.join(f["path"].as_str().unwrap());
            assert_eq!(f["sha256"].as_str().unwrap(), sha256_hex(&p), "{}", p.display());
        }
    }
    assert!(m["version"].as_str().unwrap().starts_with("jtv-fbank "));
    m
}

#[test]
fn extend_ring_and_triangle() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write_graph(d, "r487.txt", &ring_graph(487).unwrap());
    let out = ok(d, &["extend", "r487.txt", "--mode", "ring", "--out", "r487"]);
    assert!(out.contains("rho=1.0041068 (489/487)"), "{out}");
    assert!(out.contains("low=244 high=245"));
    let ext = Graph::read_edge_list(d.join("r487.edges")).unwrap();
    assert_eq!(ext.n(), 489);
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(d.join("r487.json")).unwrap()).unwrap();
    assert_eq!(meta["n1"], 489);
    let m = check_manifest(d, &d.join("r487.manifest.json"));
    assert_eq!(m["command"], "extend");
    assert_eq!(m["params"]["mode"], "ring");

    write_graph(d, "r8.txt", &ring_graph(8).unwrap());
    assert!(ok(d, &["extend", "r8.txt", "--mode", "ring", "--out", "r8"]).contains("rho=1.0000000"));

    std::fs::write(d.join("tri.txt"), "# nodes 3\n0 1\n1 2\n0 2\n").unwrap();
    assert!(ok(d, &["extend", "tri.txt", "--split", "2", "--out", "tri"]).contains("(5/3)"));
    assert!(ok(d, &["extend", "tri.txt", "--mode", "double-cover", "--out", "dc"]).contains("(6/3)"));

    let o = run(d, &["extend", "tri.txt", "--split", "3", "--out", "bad"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(d, &["extend", "r8.txt", "--mode", "ring", "--vertical-weight", "2", "--out", "w"]);
    assert!(o.status.success());
    let o = run(d, &["extend", "tri.txt", "--mode", "ring", "--out", "x"]);
    assert!(o.status.success());
    write_graph(d, "grid.txt", &grid_graph(3, 3, Connectivity::Four).unwrap());
    let o = run(d, &["extend", "grid.txt", "--mode", "ring", "--out", "x"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn roundtrip_modes() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write_graph(d, "g40.txt", &random_connected_graph(40, 0.15, 3).unwrap());
    let v = json_lines(&ok(d, &["roundtrip", "g40.txt", "--time-length", "9", "--seed", "4", "--out", "a.json"]));
    assert!(v[0]["mse"].as_f64().unwrap() <= 1e-20);
    assert!(v[0]["rho_vertex"].as_f64().unwrap() > 1.0);
    check_manifest(d, &d.join("a.json.manifest.json"));

    let v = json_lines(&ok(d, &["roundtrip", "g40.txt", "--time-length", "9", "--fill", "copy", "--out", "b.json"]));
    assert!(v[0]["mse"].as_f64().unwrap() <= 1e-20);

    write_graph(d, "grid.txt", &grid_graph(5, 6, Connectivity::Four).unwrap());
    let v = json_lines(&ok(d, &["roundtrip", "grid.txt", "--time-length", "8", "--mode", "critical", "--out", "c.json"]));
    assert!(v[0]["mse"].as_f64().unwrap() <= 1e-20);
    assert_eq!(v[0]["rho_vertex"], 1.0);

    let v = json_lines(&ok(d, &["roundtrip", "g40.txt", "--time-length", "5", "--literal", "--out", "l.json"]));
    assert!(v[0]["two_term_residual"].as_f64().is_some());
    assert_eq!(v[0]["reconstruction"], "two-term");

    std::fs::write(d.join("x.csv"), "1,2,3\n4,5,6\n7,8,10\n").unwrap();
    std::fs::write(d.join("tri.txt"), "# nodes 3\n0 1\n1 2\n0 2\n").unwrap();
    let v = json_lines(&ok(
        d,
        &["roundtrip", "tri.txt", "--time-length", "3", "--signal", "file", "--signal-file", "x.csv",
          "--dump-subbands", "bands", "--out", "f.json"],
    ));
    assert!(v[0]["mse"].as_f64().unwrap() <= 1e-20);
    assert!(d.join("bands/band_v0_t1.csv").exists());
    assert!(d.join("bands/subbands.json").exists());
    let o = run(d, &["roundtrip", "tri.txt", "--time-length", "4", "--signal", "file", "--signal-file", "x.csv", "--out", "g.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_graph_is_io_error() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["roundtrip", "nowhere.txt", "--time-length", "5", "--out", "m.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.txt"));
}

#[test]
fn usage_and_thread_errors() {
    let tmp = TempDir::new().unwrap();
    let o = run(tmp.path(), &["roundtrip"]);
    assert_eq!(o.status.code(), Some(1));
    let o = bin().current_dir(tmp.path()).env("JTV_FBANK_THREADS", "zero").args(["simulate", "g.txt", "--out", "s.csv"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    write_graph(tmp.path(), "g.txt", &ring_graph(5).unwrap());
    let o = bin().current_dir(tmp.path()).env("JTV_FBANK_THREADS", "2").args(["simulate", "g.txt", "--steps", "20", "--out", "s.csv"]).output().unwrap();
    assert!(o.status.success());
}

#[test]
fn clean_denoise_is_lossless() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write_graph(d, "g.txt", &random_connected_graph(12, 0.3, 8).unwrap());
    let rows: Vec<String> = (0..12).map(|i| (0..7).map(|t| ((i * 7 + t) as f64 * 0.37).sin().to_string()).collect::<Vec<_>>().join(",")).collect();
    std::fs::write(d.join("x.csv"), rows.join("\n") + "\n").unwrap();
    let v = json_lines(&ok(d, &["denoise", "--signal", "x.csv", "--graph", "g.txt", "--sigma", "0", "--tau", "0", "--out-dir", "out"]));
    let den = &v[1];
    assert_eq!(den["mode"], "oversampled");
    assert!(den["mse"].as_f64().unwrap() <= 1e-18);
    assert!(snr(den) >= 250.0);
    assert_eq!(snr(&v[0]), f64::INFINITY);
    for key in ["mode", "sigma", "tau", "mse", "snr_db", "rho_vertex", "rho_time", "seed"] {
        assert!(den.get(key).is_some(), "{key}");
    }
    assert!(d.join("out/denoised_oversampled.csv").exists());
    check_manifest(d, &d.join("out/manifest.json"));

    let v = json_lines(&ok(d, &["denoise", "--signal", "x.csv", "--graph", "g.txt", "--sigma", "0.2", "--seed", "3", "--compare", "--out-dir", "cmp"]));
    assert_eq!(v.len(), 3);
    assert_eq!(v[2]["mode"], "critical");
    assert_eq!(v[1]["tau"], v[2]["tau"]);
}

fn digit(strokes: &[(usize, usize, usize, usize)]) -> GrayImage {
    GrayImage::from_fn(28, 28, |r, c| {
        let on = strokes.iter().any(|&(r0, c0, r1, c1)| (r0..=r1).contains(&r) && (c0..=c1).contains(&c));
        if on { 230.0 } else { 10.0 }
    })
}

#[test]
fn digit_pair_demo_oversampled_not_worse() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    digit(&[(4, 12, 23, 15)]).write_pgm(d.join("one.pgm"), PgmFormat::Binary).unwrap();
    digit(&[(4, 6, 7, 21), (8, 17, 23, 20)]).write_pgm(d.join("seven.pgm"), PgmFormat::Ascii).unwrap();
    let out = ok(
        d,
        &["denoise", "--images", "one.pgm", "seven.pgm", "--frames", "7", "--side", "20", "--sigma", "20",
          "--seed", "1", "--compare", "--out-dir", "digits"],
    );
    let v = json_lines(&out);
    let (noisy, over, crit) = (snr(&v[0]), snr(&v[1]), snr(&v[2]));
    assert!(over >= crit, "{over} < {crit}");
    assert!(over > noisy, "{over} <= {noisy}");
    let f = GrayImage::read_pgm(d.join("digits/oversampled/frame_0006.pgm")).unwrap();
    assert_eq!((f.width(), f.height()), (20, 20));
    assert!(d.join("digits/noisy/frame_0000.pgm").exists());
}

#[test]
fn video_directory_denoise() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    std::fs::create_dir(d.join("clip")).unwrap();
    for k in 0..5 {
        let f = GrayImage::from_fn(12, 12, |r, c| 100.0 + 50.0 * ((r + c + k) as f64 / 6.0).sin());
        f.write_pgm(d.join(format!("clip/f{k:02}.pgm")), PgmFormat::Binary).unwrap();
    }
    let v = json_lines(&ok(d, &["denoise", "--video", "clip", "--side", "8", "--sigma", "10", "--connectivity", "8", "--out-dir", "vid"]));
    assert_eq!(v.len(), 2);
    assert!(v[1]["rho_vertex"].as_f64().unwrap() > 1.0);
    assert!(d.join("vid/oversampled/frame_0004.pgm").exists());

    std::fs::create_dir(d.join("short")).unwrap();
    std::fs::copy(d.join("clip/f00.pgm"), d.join("short/a.pgm")).unwrap();
    let o = run(d, &["denoise", "--video", "short", "--out-dir", "s"]);
    assert_eq!(o.status.code(), Some(1));
    std::fs::write(d.join("short/b.pgm"), "P5 garbage").unwrap();
    let o = run(d, &["denoise", "--video", "short", "--out-dir", "s"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_outputs() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    write_graph(d, "g.txt", &random_connected_graph(25, 0.2, 5).unwrap());
    ok(d, &["simulate", "g.txt", "--preset", "high-temp", "--seed", "9", "--out", "a.csv"]);
    ok(d, &["simulate", "g.txt", "--preset", "high-temp", "--seed", "9", "--out", "b.csv"]);
    let a = std::fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 25);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 487);
    let m = check_manifest(d, &d.join("a.csv.manifest.json"));
    assert_eq!(m["seed"], 9);

    ok(d, &["simulate", "g.txt", "--beta", "0", "--patient-zero", "3,7", "--steps", "60", "--out", "z.csv"]);
    for (i, line) in std::fs::read_to_string(d.join("z.csv")).unwrap().lines().enumerate() {
        let nonzero = line.split(',').any(|v| v.parse::<f64>().unwrap() != 0.0);
        assert_eq!(nonzero, i == 3 || i == 7, "row {i}");
    }

    std::fs::write(d.join("s.toml"), "beta = 0.4\ntr = inf\nt_steps = 30\npatient_zero = [0]\n").unwrap();
    ok(d, &["simulate", "g.txt", "--config", "s.toml", "--out", "t.csv"]);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(d.join("t.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["params"]["resolved"]["tr"], "inf");
    assert_eq!(m["params"]["resolved"]["beta"], 0.4);

    std::fs::write(d.join("bad.toml"), "gamma = 1\n").unwrap();
    assert_eq!(run(d, &["simulate", "g.txt", "--config", "bad.toml", "--out", "u.csv"]).status.code(), Some(1));
    assert_eq!(run(d, &["simulate", "g.txt", "--patient-zero", "99", "--out", "u.csv"]).status.code(), Some(1));
}
