mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::process::Stdio;
use std::time::Duration;

use cartometry::session::{load_session, FitOutcome, MeasurementReport};
use common::*;

#[test]
fn usage_errors_exit_1() {
    for args in [
        vec!["bogus"],
        vec!["measure"],
        vec!["calibrate", "s.json", "--pair", "1,2"],
        vec!["measure", "s.json", "f", "--unit", "furlong"],
        vec!["fit", "s.json", "f", "--error-curve", "3", "--json"],
    ] {
        let run = cartometry(&args);
        assert_eq!(run.code, 1, "{args:?}: {}", run.stderr);
    }
    assert_eq!(cartometry(["--help"]).code, 0);
    assert_eq!(cartometry(["--version"]).code, 0);
}

#[test]
fn trace_a_segment_from_scratch() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.json");
    let s = s.to_str().unwrap();
    let init = ["init", s, "--image", "map.png", "--width", "400", "--height", "300", "--projection", "planar_unknown"];
    assert_eq!(cartometry(init).code, 0);
    assert_eq!(cartometry(init).code, 2, "init refuses to overwrite");

    let run = cartometry(["calibrate", s, "--pair", "0,300=0,0", "--pair", "400,300=20,0"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let residual = text_fields(&run.stdout).into_iter().find(|(k, _)| k == "rms_residual").unwrap().1;
    assert!(residual.starts_with("0.000"), "{residual}");

    assert_eq!(cartometry(["add-feature", s, "seg", "--kind", "route"]).code, 0);
    let run = cartometry(["add-point", s, "seg", "100,150", "200,150", "--json"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stdout.contains("\"points\":[[100.0,150.0],[200.0,150.0]]"), "{}", run.stdout);

    let km = cartometry(["measure", s, "seg", "--json"]);
    let r: MeasurementReport = serde_json::from_str(&km.stdout).unwrap();
    assert!((r.planar_value - 5.0).abs() < 1e-12);
    let before = std::fs::read(s).unwrap();
    let m = cartometry(["measure", s, "seg", "--unit", "m"]);
    assert!(m.stdout.contains("display_value  5000.00 m\n"), "{}", m.stdout);
    assert_eq!(std::fs::read(s).unwrap(), before, "measuring never writes");

    assert_eq!(cartometry(["set-unit", s, "mi"]).code, 0);
    let mi = cartometry(["measure", s, "seg", "--json"]);
    let r2: MeasurementReport = serde_json::from_str(&mi.stdout).unwrap();
    assert_eq!(r2.planar_value.to_bits(), r.planar_value.to_bits());
    assert!((r2.display_value - 3.106855).abs() < 1e-6);
}

#[test]
fn calibrate_golden_pairs_reproduce_golden_session() {
    let dir = golden_copies();
    let s = dir.path().join("rectangle-uncalibrated.json");
    let run = cartometry([
        "calibrate".as_ref(),
        s.as_os_str(),
        "--pairs-file".as_ref(),
        golden("rectangle-pairs.csv").as_os_str(),
    ]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(std::fs::read(&s).unwrap(), std::fs::read(golden("rectangle.json")).unwrap());
}

#[test]
fn one_pair_is_a_domain_error_and_writes_nothing() {
    let dir = golden_copies();
    let before = snapshot(dir.path());
    let s = dir.path().join("rectangle-uncalibrated.json");
    let run = cartometry(["calibrate", s.to_str().unwrap(), "--pair", "1,2=3,4"]);
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("insufficient control points"), "{}", run.stderr);
    assert_eq!(snapshot(dir.path()), before);
}

#[test]
fn measure_rectangle_and_errors() {
    let dir = golden_copies();
    let rect = dir.path().join("rectangle.json");
    let rect = rect.to_str().unwrap();
    let run = cartometry(["measure", rect, "isacov-box"]);
    assert_eq!(run.code, 0);
    assert!(run.stdout.contains("bbox_area      13.0200 km²"), "{}", run.stdout);

    let run = cartometry(["measure", rect, "nope"]);
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("feature not found"));

    let raw = dir.path().join("rectangle-uncalibrated.json");
    let run = cartometry(["measure", raw.to_str().unwrap(), "isacov-box"]);
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("uncalibrated-session"));

    let danube = dir.path().join("danube.json");
    let run = cartometry(["measure", danube.to_str().unwrap(), "wip"]);
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("incomplete-feature"));
}

#[test]
fn json_and_text_agree() {
    let dir = golden_copies();
    for name in GOLDENS {
        let path = dir.path().join(name);
        for (id, _) in features(&path) {
            let p = path.to_str().unwrap();
            let text = cartometry(["measure", p, &id]);
            let json = cartometry(["measure", p, &id, "--json"]);
            assert_eq!(text.code, json.code);
            if json.code != 0 {
                continue;
            }
            let r: MeasurementReport = serde_json::from_str(&json.stdout).unwrap();
            let fields = text_fields(&text.stdout);
            let get = |k: &str| fields.iter().find(|(key, _)| key == k).unwrap().1.clone();
            assert_eq!(get("feature_id"), r.feature_id);
            assert_eq!(get("planar"), cli_sig6(r.planar_value));
            assert_eq!(get("bbox_w"), cli_sig6(r.bbox_w));
            assert_eq!(get("bbox_h"), cli_sig6(r.bbox_h));
            assert_eq!(get("bbox_area"), cli_sig6(r.bbox_area));
            assert_eq!(get("simple"), r.simple.to_string());
            assert_eq!(get("geodesic"), r.geodesic_value.map_or("n/a".into(), cli_sig6));
            assert_eq!(get("anomaly_ratio"), r.anomaly_ratio.map_or("n/a".into(), cli_sig6));
            // Text rounds to six significant digits of the JSON value.
            let planar: f64 = get("planar").parse().unwrap();
            assert!((planar - r.planar_value).abs() <= 5e-6 * r.planar_value.abs());
        }
    }
}

/// Independent six-significant-digit formatter for comparing text output.
fn cli_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".into();
    }
    let digits = 6 - 1 - x.abs().log10().floor() as i32;
    let rounded = format!("{:.*}", digits.max(0) as usize, x);
    // Re-derive if rounding carried into a new digit.
    let carried = rounded.trim_start_matches('-').replace('.', "").trim_start_matches('0').len() > 6;
    if carried {
        format!("{:.*}", (digits - 1).max(0) as usize, x)
    } else {
        rounded
    }
}

#[test]
fn fit_circle_and_error_curve() {
    let dir = golden_copies();
    let circle = dir.path().join("circle.json");
    let run = cartometry(["fit", circle.to_str().unwrap(), "pond", "--n", "1"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let rms = text_fields(&run.stdout).into_iter().find(|(k, _)| k == "rms_error").unwrap().1;
    assert!(rms.parse::<f64>().unwrap() < 1e-6, "{rms}");

    let square = dir.path().join("square.json");
    let run = cartometry(["fit", square.to_str().unwrap(), "polder", "--error-curve", "8"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let mut lines = run.stdout.lines();
    assert_eq!(lines.next(), Some("n,rms,area"));
    let rows: Vec<(usize, f64)> = lines
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (cols[0].parse().unwrap(), cols[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), (1..=8).collect::<Vec<_>>());
    assert!(rows.windows(2).all(|w| w[1].1 < w[0].1), "{rows:?}");

    let run = cartometry(["fit", square.to_str().unwrap(), "dyke"]);
    assert_eq!(run.code, 3);
    assert!(run.stderr.contains("fit requires a region"));
}

#[test]
fn emit_samples_adds_a_region() {
    let dir = golden_copies();
    let circle = dir.path().join("circle.json");
    let p = circle.to_str().unwrap();
    let run = cartometry(["fit", p, "pond", "--n", "2", "--emit-samples", "32", "--json"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let outcome: FitOutcome = serde_json::from_str(&run.stdout).unwrap();
    assert_eq!(outcome.samples.as_ref().unwrap().len(), 32);
    let session = load_session(&circle).unwrap();
    let added = session.feature("pond-fourier").unwrap();
    assert_eq!(added.points.len(), 32);
    let world = session.world_points("pond-fourier").unwrap();
    for (w, s) in world.iter().zip(outcome.samples.unwrap()) {
        assert!(w.distance(&s) < 1e-9);
    }
    // A second emit would collide with the existing feature.
    let before = std::fs::read(&circle).unwrap();
    let run = cartometry(["fit", p, "pond", "--emit-samples", "32"]);
    assert_eq!(run.code, 3);
    assert_eq!(std::fs::read(&circle).unwrap(), before);
}

#[test]
fn failures_leave_session_files_untouched() {
    let dir = golden_copies();
    let before = snapshot(dir.path());
    let d = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let failing: Vec<Vec<String>> = vec![
        vec!["calibrate".into(), d("circle.json"), "--kind".into(), "affine".into(), "--pair".into(), "0,0=0,0".into(), "--pair".into(), "1,1=1,1".into(), "--pair".into(), "2,2=2,2".into()],
        vec!["calibrate".into(), d("circle.json"), "--pairs-file".into(), d("missing.csv")],
        vec!["add-point".into(), d("rectangle.json"), "isacov-box".into(), "80,80".into()],
        vec!["add-point".into(), d("rectangle.json"), "isacov-box".into(), "10,10".into(), "10,10".into()],
        vec!["add-feature".into(), d("danube.json"), "road".into(), "--kind".into(), "route".into()],
        vec!["fit".into(), d("danube.json"), "wip".into(), "--emit-samples".into(), "10".into()],
        vec!["measure".into(), d("empty.json"), "x".into()],
    ];
    for args in failing {
        let run = cartometry(&args);
        assert!(run.code == 2 || run.code == 3, "{args:?}: {} {}", run.code, run.stderr);
        assert_eq!(snapshot(dir.path()), before, "{args:?}");
    }
}

#[test]
fn schema_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("bad.json");
    let text = std::fs::read_to_string(golden("rectangle.json")).unwrap().replace("\"kind\": \"region\"", "\"kind\": \"lake\"");
    std::fs::write(&s, &text).unwrap();
    let run = cartometry(["measure", s.to_str().unwrap(), "isacov-box"]);
    assert_eq!(run.code, 2);
    assert!(run.stderr.contains("features[0].kind"), "{}", run.stderr);
    assert!(run.stderr.contains("line"), "{}", run.stderr);
}

#[test]
fn serve_invalid_dir_and_busy_port() {
    let run = cartometry(["serve", "/definitely/not/here"]);
    assert_eq!(run.code, 2);
    let dir = tempfile::tempdir().unwrap();
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let run = cartometry(["serve", dir.path().to_str().unwrap(), "--port", &port]);
    assert_eq!(run.code, 2, "{}", run.stderr);
}

#[test]
fn serve_answers_health_and_shuts_down_cleanly() {
    let dir = golden_copies();
    let mut child = bin()
        .args(["serve", dir.path().to_str().unwrap(), "--port", "0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").expect(&line).to_string();

    let get = |path: &str| {
        let mut stream = TcpStream::connect(&addr).unwrap();
        stream.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
        write!(stream, "GET {path} HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").unwrap();
        let mut resp = String::new();
        stream.read_to_string(&mut resp).unwrap();
        resp
    };
    let health = get("/healthz");
    assert!(health.starts_with("HTTP/1.1 200"), "{health}");
    assert!(health.ends_with("\r\n\r\nok"), "{health}");
    let session = get("/api/sessions/rectangle");
    assert!(session.ends_with(&std::fs::read_to_string(golden("rectangle.json")).unwrap()));

    let pid = child.id().to_string();
    assert!(std::process::Command::new("kill").args(["-INT", &pid]).status().unwrap().success());
    let status = child.wait().unwrap();
    assert_eq!(status.code(), Some(0));
}
