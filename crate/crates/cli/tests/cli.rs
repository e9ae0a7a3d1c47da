use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn pqm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqm"))
        .args(args)
        .env_remove("PQM_MAX_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn write_xyz(path: &Path, pts: &[[f64; 3]]) {
    let mut s = String::new();
    for p in pts {
        s.push_str(&format!("{} {} {}\n", p[0], p[1], p[2]));
    }
    std::fs::write(path, s).unwrap();
}

fn grid(n: [usize; 3], spacing: f64) -> Vec<[f64; 3]> {
    let mut v = Vec::new();
    for i in 0..n[0] {
        for j in 0..n[1] {
            for k in 0..n[2] {
                v.push([i as f64 * spacing, j as f64 * spacing, k as f64 * spacing]);
            }
        }
    }
    v
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        Fixture {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn cloud(&self, name: &str, pts: &[[f64; 3]]) -> String {
        write_xyz(&self.path(name), pts);
        self.s(name)
    }
}

fn scores(v: &Value) -> [f64; 4] {
    ["qr", "qa", "qc", "qt"].map(|k| v[k].as_f64().unwrap())
}

#[test]
fn compare_identical_is_perfect() {
    let fx = Fixture::new();
    let a = fx.cloud("a.xyz", &grid([10, 10, 5], 0.07));
    // Same cloud in binary PLY through ablate's no-op shift.
    let out = pqm(&[
        "ablate",
        &a,
        "--op",
        "shift",
        "--offset",
        "0,0,0",
        "-o",
        &fx.s("a.ply"),
        "--output-format",
        "ply-binary-le",
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&pqm(&[
        "compare",
        &fx.s("a.ply"),
        &fx.s("a.ply"),
        "-e",
        "0.1",
        "-r",
        "1.0",
    ]));
    assert_eq!(scores(&v), [1.0; 4]);
    assert_eq!(v["settings"]["epsilon"], 0.1);
    assert_eq!(v["settings"]["region_size"], 1.0);
    assert!(v.get("per_region").is_none());
}

#[test]
fn compare_crop_matches_surviving_fraction() {
    let fx = Fixture::new();
    let a = fx.cloud("ref.xyz", &grid([50, 50, 10], 0.0731));
    let c = fx.s("cropped40.xyz");
    assert_eq!(
        code(&pqm(&[
            "ablate", &a, "--op", "crop", "--axis", "x", "--keep", "0.4", "-o", &c
        ])),
        0
    );
    let v = stdout_json(&pqm(&["compare", &a, &c, "-e", "0.1"]));
    let [qr, qa, qc, qt] = scores(&v);
    assert!((qc - 0.4).abs() <= 0.02, "qc {qc}");
    assert!(qr >= 0.999 && qa >= 0.999 && qt >= 0.999);
}

#[test]
fn defaults_are_echoed_and_json_is_reproducible() {
    let fx = Fixture::new();
    let a = fx.cloud("a.xyz", &grid([8, 8, 4], 0.05));
    let b = fx.cloud("b.xyz", &grid([8, 7, 4], 0.051));
    let first = pqm(&["compare", &a, &b, "-w", "2"]);
    let second = pqm(&["compare", &a, &b, "-w", "2"]);
    assert_eq!(first.stdout, second.stdout);
    let v = stdout_json(&first);
    assert_eq!(v["settings"]["epsilon"], 0.1);
    assert_eq!(v["settings"]["region_size"], 1.0);
    assert_eq!(v["settings"]["workers"], 2);
    // Worker count never changes the scores.
    let one = stdout_json(&pqm(&["compare", &a, &b, "-w", "1", "--full-precision"]));
    let four = stdout_json(&pqm(&["compare", &a, &b, "-w", "4", "--full-precision"]));
    assert_eq!(scores(&one), scores(&four));
}

#[test]
fn invalid_epsilon_is_a_config_error_naming_the_flag() {
    let fx = Fixture::new();
    let a = fx.cloud("a.xyz", &grid([3, 3, 3], 0.1));
    let out = pqm(&["compare", &a, &a, "-e", "0"]);
    assert_eq!(code(&out), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--epsilon"));
    let out = pqm(&["compare", &a, &a, "-e", "0.5", "-r", "0.1"]);
    assert_eq!(code(&out), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--region-size"));
}

#[test]
fn exit_codes_by_error_kind() {
    let fx = Fixture::new();
    let a = fx.cloud("a.xyz", &grid([3, 3, 3], 0.1));
    assert_eq!(code(&pqm(&["compare", &a])), 2);
    assert_eq!(code(&pqm(&["frobnicate"])), 2);
    assert_eq!(code(&pqm(&["compare", &a, &fx.s("missing.xyz")])), 3);

    std::fs::write(fx.path("bad.xyz"), "1 2 3\n1 x 3\n").unwrap();
    assert_eq!(code(&pqm(&["compare", &a, &fx.s("bad.xyz")])), 4);
    std::fs::write(fx.path("empty.xyz"), "").unwrap();
    assert_eq!(code(&pqm(&["compare", &a, &fx.s("empty.xyz")])), 4);

    // Isolated single points: no region has two reference points.
    let lone = fx.cloud("lone.xyz", &[[0.0, 0.0, 0.0], [5.0, 5.0, 5.0]]);
    assert_eq!(code(&pqm(&["compare", &lone, &lone])), 6);

    assert_eq!(code(&pqm(&["--help"])), 0);
}

#[test]
fn config_file_precedence_and_worker_cap() {
    let fx = Fixture::new();
    let a = fx.cloud("a.xyz", &grid([6, 6, 3], 0.05));
    std::fs::write(
        fx.path("pqm.toml"),
        "epsilon = 0.2\nregion_size = 2.0\nworkers = 3\n",
    )
    .unwrap();
    let cfg = fx.s("pqm.toml");
    let v = stdout_json(&pqm(&["compare", &a, &a, "-c", &cfg]));
    assert_eq!(v["settings"]["epsilon"], 0.2);
    assert_eq!(v["settings"]["region_size"], 2.0);
    assert_eq!(v["settings"]["workers"], 3);

    let v = stdout_json(&pqm(&["compare", &a, &a, "-c", &cfg, "-e", "0.05"]));
    assert_eq!(v["settings"]["epsilon"], 0.05);
    assert_eq!(v["settings"]["region_size"], 2.0);

    let out = Command::new(env!("CARGO_BIN_EXE_pqm"))
        .args(["compare", &a, &a, "-w", "6"])
        .env("PQM_MAX_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(stdout_json(&out)["settings"]["workers"], 2);

    std::fs::write(fx.path("broken.toml"), "epsilon = [").unwrap();
    assert_eq!(
        code(&pqm(&["compare", &a, &a, "-c", &fx.s("broken.toml")])),
        5
    );
}

#[test]
fn per_region_rows_heatmap_and_baselines() {
    let fx = Fixture::new();
    let a = fx.cloud("a.xyz", &grid([30, 10, 3], 0.1));
    let b = fx.cloud(
        "b.xyz",
        &grid([30, 10, 3], 0.1)
            .into_iter()
            .map(|p| [p[0] + 0.01, p[1], p[2]])
            .collect::<Vec<_>>(),
    );
    let report = fx.s("report.json");
    let out = pqm(&[
        "compare",
        &a,
        &b,
        "--per-region",
        "--baselines",
        "-o",
        &report,
        "--full-precision",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let rows = v["per_region"].as_array().unwrap();
    assert_eq!(rows.len(), v["regions"].as_u64().unwrap() as usize);
    assert!(rows.len() >= 3);
    let b = &v["baselines"];
    assert!((b["chamfer"].as_f64().unwrap() - 2.0 * 900.0 * 0.01).abs() < 1e-9);
    assert!((b["hausdorff"].as_f64().unwrap() - 0.01).abs() < 1e-12);
    assert!((b["emd"].as_f64().unwrap() - 900.0 * 0.01).abs() < 1e-9);

    let csv = std::fs::read_to_string(fx.path("report.json.regions.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("i,j,k,qr,qa,ref_count,cand_count"));
    assert_eq!(lines.count(), rows.len());

    // Unequal sizes: no EMD.
    let c = fx.cloud("c.xyz", &grid([5, 5, 5], 0.1));
    let v = stdout_json(&pqm(&["compare", &a, &c, "--baselines"]));
    assert!(v["baselines"]["emd"].is_null());

    let table = pqm(&["compare", &a, &a, "-f", "table", "--per-region"]);
    assert_eq!(code(&table), 0);
    let text = String::from_utf8(table.stdout).unwrap();
    assert!(text.contains("coverage") && text.contains("cand"));
}

#[test]
fn ablate_downsample_writes_half_and_manifest() {
    let fx = Fixture::new();
    let a = fx.cloud("a.xyz", &grid([10, 10, 10], 0.1));
    let out = fx.s("half.xyz");
    let o = pqm(&[
        "ablate",
        &a,
        "--op",
        "downsample",
        "--keep",
        "0.5",
        "--seed",
        "7",
        "-o",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 500);
    let m: Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{out}.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m["operation"], "downsample");
    assert_eq!(m["seed"], 7);
    assert_eq!(m["parameters"]["keep_fraction"], 0.5);
    assert_eq!(m["output_points"], 500);
    assert!(m["rng_algorithm"].as_str().unwrap().contains("ChaCha8"));
}

#[test]
fn ablate_is_byte_reproducible() {
    let fx = Fixture::new();
    let a = fx.cloud("a.xyz", &grid([8, 8, 8], 0.1));
    for (op, extra) in [("noise", ["--sigma", "0.01"]), ("crop", ["--keep", "0.4"])] {
        let mut files = Vec::new();
        for run in 0..2 {
            let out = fx.s(&format!("{op}{run}.ply"));
            let mut args = vec!["ablate", a.as_str(), "--op", op, "-o", &out];
            args.extend(extra);
            if op == "noise" {
                args.extend(["--seed", "7"]);
            } else {
                args.extend(["--axis", "X"]);
            }
            assert_eq!(code(&pqm(&args)), 0);
            files.push(std::fs::read(&out).unwrap());
        }
        assert_eq!(files[0], files[1], "{op}");
    }
    let other = fx.s("noise_seed8.ply");
    pqm(&[
        "ablate", &a, "--op", "noise", "--sigma", "0.01", "--seed", "8", "-o", &other,
    ]);
    assert_ne!(
        std::fs::read(other).unwrap(),
        std::fs::read(fx.path("noise0.ply")).unwrap()
    );
}

#[test]
fn ablate_argument_checks() {
    let fx = Fixture::new();
    let a = fx.cloud("a.xyz", &grid([4, 4, 4], 0.1));
    let o = fx.s("o.xyz");
    assert_eq!(
        code(&pqm(&["ablate", &a, "--op", "downsample", "-o", &o])),
        2
    );
    assert_eq!(
        code(&pqm(&[
            "ablate", &a, "--op", "crop", "--keep", "0.5", "-o", &o
        ])),
        2
    );
    assert_eq!(
        code(&pqm(&[
            "ablate", &a, "--op", "noise", "--sigma", "0.1", "--keep", "0.5", "-o", &o
        ])),
        2
    );
    assert_eq!(
        code(&pqm(&[
            "ablate",
            &a,
            "--op",
            "downsample",
            "--keep",
            "1.5",
            "-o",
            &o
        ])),
        5
    );
    assert_eq!(
        code(&pqm(&[
            "ablate",
            &a,
            "--op",
            "noise",
            "--sigma=-1",
            "-o",
            &o
        ])),
        5
    );
    assert_eq!(
        code(&pqm(&[
            "ablate",
            &a,
            "--op",
            "shift",
            "--offset",
            "1,1,1",
            "-o",
            &fx.s("o.bin")
        ])),
        2
    );
}

fn cluster_scene(fx: &Fixture) -> (String, String) {
    let eps = 0.1;
    let c = |i: i64, j: i64, k: i64| {
        [
            (i as f64 + 0.5) * eps,
            (j as f64 + 0.5) * eps,
            (k as f64 + 0.5) * eps,
        ]
    };
    let mut floor = vec![[0.0, 0.0, 0.0]];
    for i in 0..30 {
        for j in 0..20 {
            floor.push(c(i, j, 0));
        }
    }
    let scene = |ox: i64| {
        let mut p = floor.clone();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    p.push(c(ox + i, 5 + j, 2 + k));
                }
            }
        }
        p
    };
    (
        fx.cloud("ref.xyz", &scene(2)),
        fx.cloud("frame.xyz", &scene(20)),
    )
}

#[test]
fn anomaly_reports_per_frame() {
    let fx = Fixture::new();
    let (r, f) = cluster_scene(&fx);
    let dir = fx.s("out");
    let o = pqm(&[
        "anomaly",
        &r,
        &r,
        &f,
        "-e",
        "0.1",
        "-o",
        &dir,
        "--masks",
        "--full-precision",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let same: Value =
        serde_json::from_str(&std::fs::read_to_string(fx.path("out/ref.json")).unwrap()).unwrap();
    assert_eq!(same["change_fraction"], 0.0);

    let moved: Value =
        serde_json::from_str(&std::fs::read_to_string(fx.path("out/frame.json")).unwrap()).unwrap();
    assert_eq!(
        moved["change_fraction"].as_f64().unwrap(),
        250.0 / (600.0 + 250.0)
    );
    let cells =
        |k: &str| -> Vec<Vec<i64>> { serde_json::from_value(moved[k]["cells"].clone()).unwrap() };
    let (missing, artifact) = (cells("missing_cells"), cells("artifact_cells"));
    assert_eq!((missing.len(), artifact.len()), (125, 125));
    assert!(missing.iter().all(|c| (2..7).contains(&c[0])));
    assert!(artifact.iter().all(|c| (20..25).contains(&c[0])));
    assert_eq!(moved["changed_points"], 125);

    let mask = std::fs::read_to_string(fx.path("out/frame.mask")).unwrap();
    assert_eq!(mask.lines().count(), 601 + 125);
    assert_eq!(mask.lines().filter(|l| *l == "1").count(), 125);
    assert!(mask.lines().all(|l| l == "0" || l == "1"));
}

#[test]
fn anomaly_streams_json_lines_and_checks_inputs() {
    let fx = Fixture::new();
    let (r, f) = cluster_scene(&fx);
    let o = pqm(&["anomaly", &r, &f, &r, "--roi", "-1,-1,-1,1,1,1"]);
    assert_eq!(code(&o), 0);
    let lines: Vec<Value> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 2);
    // The ROI leaves out the moved cluster entirely.
    assert!(lines[0]["change_fraction"].as_f64().unwrap() > 0.0);
    assert_eq!(lines[1]["change_fraction"], 0.0);
    assert!(lines[0]["roi"].is_object());

    assert_eq!(code(&pqm(&["anomaly", &r, &fx.s("nope.xyz")])), 3);
    assert_eq!(code(&pqm(&["anomaly", &r, &f, "--roi", "0,0,1"])), 2);
    assert_eq!(
        code(&pqm(&["anomaly", &r, &f, "--roi", "50,50,50,60,60,60"])),
        5
    );
    assert_eq!(code(&pqm(&["anomaly", &r, &f, "--masks"])), 2);
    assert_eq!(code(&pqm(&["anomaly", &r])), 2);
}

#[test]
fn bench_emits_records_and_pivot() {
    let fx = Fixture::new();
    let a = fx.cloud("a.xyz", &grid([12, 12, 4], 0.05));
    let b = fx.cloud("b.xyz", &grid([12, 11, 4], 0.05));
    let csv = fx.s("pivot.csv");
    let o = pqm(&[
        "bench",
        &a,
        &b,
        "--resolutions",
        "1,0.5",
        "--region-sizes",
        "0.5,1",
        "--repetitions",
        "1",
        "--warmup",
        "0",
        "--csv",
        &csv,
        "-w",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let recs: Vec<Value> = String::from_utf8(o.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(recs.len(), 2 * 2 * 3);
    for r in &recs {
        assert!(r["wall_time_s"].as_f64().unwrap() > 0.0);
        assert_eq!(r["workers"], 2);
    }
    let started: Vec<f64> = recs
        .iter()
        .map(|r| r["started_at_s"].as_f64().unwrap())
        .collect();
    assert!(started.windows(2).all(|w| w[0] <= w[1]));

    // Values equal a single-threaded compare at the same settings.
    let pqm1 = recs
        .iter()
        .find(|r| r["metric"] == "pqm" && r["keep_fraction"] == 1.0 && r["region_size"] == 1.0)
        .unwrap();
    let v = stdout_json(&pqm(&["compare", &a, &b, "-w", "1", "--full-precision"]));
    let vals: Vec<f64> = serde_json::from_value(pqm1["values"].clone()).unwrap();
    assert_eq!(vals, scores(&v));

    let pivot = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        pivot.lines().next(),
        Some("metric,keep_fraction,cand_points,r=0.5,r=1")
    );
    assert_eq!(pivot.lines().count(), 1 + 3 * 2);

    assert_eq!(code(&pqm(&["bench", &a, &b, "--resolutions", "0"])), 5);
    assert_eq!(code(&pqm(&["bench", &a, &b, "--region-sizes", "0.01"])), 5);
}
