//! Black-box runs of the shipped binary: exit codes, diagnostics, and
//! the format of emitted artifacts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn cw<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_cw")).args(args).output().expect("spawn cw")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

fn json_of(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn wreath_dist_on_the_fixture_pair_prints_6() {
    let out = cw([
        "wreath-dist".as_ref(),
        fixture("instance_c5.json").as_os_str(),
        fixture("point_rest.json").as_os_str(),
        fixture("point_two_lamps.json").as_os_str(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert_eq!(stdout_of(&out), "6\n");
}

#[test]
fn missing_input_file_exits_2() {
    let out = cw(["validate", "definitely-not-here.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("cannot read"));
}

#[test]
fn malformed_json_reports_path_and_byte_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"points\": [\"a\"], \"dist\": [[}").unwrap();
    let out = cw(["validate".as_ref(), path.as_os_str()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("broken.json"), "diagnostic names the file: {err}");
    assert!(err.contains("byte"), "diagnostic carries the byte offset: {err}");
}

#[test]
fn validate_accepts_the_shipped_cycle() {
    let out = cw(["validate".as_ref(), fixture("metric_c5.json").as_os_str()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["valid"], serde_json::json!(true));
}

#[test]
fn validate_flags_a_triangle_failure_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"points":["a","b","c"],
            "dist":[["0","5","1"],["5","0","1"],["1","1","0"]]}"#,
    )
    .unwrap();
    let out = cw(["validate".as_ref(), path.as_os_str()]);
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    assert_eq!(v["valid"], serde_json::json!(false));
    let rendered = v["defects"].to_string();
    assert!(rendered.contains("triangle"), "defects: {rendered}");
}

#[test]
fn geometry_reports_the_cycle_ball_bound() {
    let out = cw([
        "geometry".as_ref(),
        fixture("metric_c5.json").as_os_str(),
        "--c".as_ref(),
        "1".as_ref(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["ball_bound"]["n"], serde_json::json!(3));
    assert_eq!(v["diameter"]["value"], serde_json::json!("2"));
    assert_eq!(v["diameter"]["kind"], serde_json::json!("computed"));
}

#[test]
fn walls_metric_reproduces_the_cycle_distances() {
    let out = cw(["walls".as_ref(), "metric".as_ref(), fixture("walls_y.json").as_os_str()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["metric"]["dist"][0][2], serde_json::json!("2"));
    assert_eq!(v["metric"]["dist"][0][1], serde_json::json!("1"));
}

#[test]
fn walls_embed_emits_the_factored_csv() {
    let out = cw(["walls".as_ref(), "embed".as_ref(), fixture("walls_x.json").as_os_str()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("point,w0"));
    assert_eq!(lines.next(), Some("#weight,1"));
    assert_eq!(lines.next(), Some("\"0\",1"));
    assert_eq!(lines.next(), Some("\"1\",0"));
}

#[test]
fn walls_decompose_round_trips_the_cycle() {
    let out = cw([
        "walls".as_ref(),
        "decompose".as_ref(),
        fixture("metric_c5.json").as_os_str(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["decomposed"], serde_json::json!(true));
}

#[test]
fn decompose_past_the_cut_cap_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wide.json");
    let n = 13;
    let points: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let dist: Vec<Vec<String>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { "0" } else { "1" }.to_string()).collect())
        .collect();
    std::fs::write(
        &path,
        serde_json::json!({ "points": points, "dist": dist }).to_string(),
    )
    .unwrap();
    let out = cw(["walls".as_ref(), "decompose".as_ref(), path.as_os_str()]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains("cap"));
}

#[test]
fn certify_passes_on_the_shipped_instance() {
    let out = cw([
        "certify".as_ref(),
        fixture("instance_c5.json").as_os_str(),
        fixture("walls_x.json").as_os_str(),
        fixture("walls_y.json").as_os_str(),
        fixture("walls_z.json").as_os_str(),
        "--min-points".as_ref(),
        "80".as_ref(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let v = json_of(&out);
    assert_eq!(v["certified"], serde_json::json!(true));
    assert_eq!(v["c2_evaluated"], serde_json::json!(true));
    assert_eq!(v["violations"].as_array().map(|a| a.len()), Some(0));
}

#[test]
fn compress_emits_fits_and_the_cloud() {
    let dir = tempfile::tempdir().unwrap();
    let out = cw([
        "compress".as_ref(),
        fixture("instance_c5.json").as_os_str(),
        fixture("walls_x.json").as_os_str(),
        fixture("walls_y.json").as_os_str(),
        fixture("walls_z.json").as_os_str(),
        "--ball-radius".as_ref(),
        "4".as_ref(),
        "--support-cap".as_ref(),
        "2".as_ref(),
        "--out".as_ref(),
        dir.path().as_os_str(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let v = json_of(&out);
    assert_eq!(v["lifting_fit"]["delta_hat"]["kind"], serde_json::json!("fitted"));
    let cloud = std::fs::read_to_string(dir.path().join("cloud.tsv")).unwrap();
    assert!(cloud.starts_with("product\tcomparison\n"));
    assert!(cloud.lines().count() > 10);
}

#[test]
fn embed_wreath_writes_coords_and_scatter() {
    let dir = tempfile::tempdir().unwrap();
    let points = dir.path().join("points.json");
    std::fs::write(
        &points,
        r#"[{"f": {}, "y": "0"}, {"f": {"1": "1", "4": "1"}, "y": "0"}]"#,
    )
    .unwrap();
    let out_dir = dir.path().join("emit");
    let out = cw([
        "embed-wreath".as_ref(),
        fixture("instance_c5.json").as_os_str(),
        fixture("walls_x.json").as_os_str(),
        fixture("walls_y.json").as_os_str(),
        fixture("walls_z.json").as_os_str(),
        "--points".as_ref(),
        points.as_os_str(),
        "--out".as_ref(),
        out_dir.as_os_str(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let coords = std::fs::read_to_string(out_dir.join("coords.csv")).unwrap();
    assert!(coords.starts_with("point,"));
    let scatter = std::fs::read_to_string(out_dir.join("scatter.tsv")).unwrap();
    let mut rows = scatter.lines();
    assert_eq!(rows.next(), Some("product\tcomparison"));
    let pair = rows.next().expect("one pair row");
    assert!(pair.starts_with("6\t"), "fixture pair sits at product distance 6: {pair}");
}

#[test]
fn boxspace_tower_reports_and_embeds() {
    let out = cw([
        "boxspace".as_ref(),
        "--g".as_ref(),
        fixture("group_z2.json").as_os_str(),
        "--k-chain".as_ref(),
        "0;0".as_ref(),
        "--n-chain".as_ref(),
        "2,4".as_ref(),
        "--ball".as_ref(),
        "3".as_ref(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let v = json_of(&out);
    assert_eq!(v["levels"][0]["order"], serde_json::json!(8));
    assert_eq!(v["levels"][1]["order"], serde_json::json!(64));
    assert_eq!(v["checks"]["nesting_ok"], serde_json::json!(true));
    assert_eq!(v["checks"]["triviality_ok"], serde_json::json!(true));
    assert_eq!(v["unbounded_proxy"], serde_json::json!(true));
}

#[test]
fn boxspace_requires_exactly_one_top() {
    let out = cw([
        "boxspace".as_ref(),
        "--g".as_ref(),
        fixture("group_z2.json").as_os_str(),
        "--k-chain".as_ref(),
        "0".as_ref(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("exactly one"));
}
