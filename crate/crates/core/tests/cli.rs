use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mordrive::mor::{self, ReductionConfig};
use mordrive::TransferFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn mordrive(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mordrive"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

fn strip_wall_time(mut v: Value) -> Value {
    if let Some(m) = v.get_mut("manifest").and_then(Value::as_object_mut) {
        m.remove("wall_time");
    }
    v
}

#[test]
fn reduce_reference_loop_shape() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("reduced.json");
    let o = mordrive(&[
        "reduce", "--tf", path_str(&data("loop_shape.json")), "--order", "2",
        "--numerator-order", "1", "--adjust", "none", "--out", path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = read_json(&out);
    let den: Vec<f64> = serde_json::from_value(v["den"].clone()).unwrap();
    for (a, b) in den.iter().zip([1.0, 0.12988, 0.00241749]) {
        assert!((a - b).abs() <= 1e-4 * b);
    }
    assert!((v["num"][1].as_f64().unwrap() - 0.03).abs() < 5e-4);
    let diag = &v["diagnostics"];
    assert!(diag["factorization"]["z_sq"].is_array());
    assert!(diag["matched_conditions"].is_array());
    assert!(diag["residual"]["max_abs"].is_number());
    assert_eq!(v["manifest"]["command"], "reduce");
    assert_eq!(v["manifest"]["input_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn reduce_output_round_trips_bit_exactly() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("reduced.json");
    for adjust in ["none", "auto", "7.5"] {
        let o = mordrive(&[
            "reduce", "--tf", path_str(&data("loop_shape.json")), "--order", "2",
            "--adjust", adjust, "--out", path_str(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

        let g = mordrive::cli::parse_tf(&std::fs::read(data("loop_shape.json")).unwrap()).unwrap();
        let adjust = match adjust {
            "none" => mor::Adjust::None,
            "auto" => mor::Adjust::Auto,
            n => mor::Adjust::Fixed(n.parse().unwrap()),
        };
        let expected = mor::reduce(&g, &ReductionConfig::new(2).with_adjust(adjust)).unwrap().reduced;

        // The report reads back as a transfer-function file.
        let back = mordrive::cli::parse_tf(&std::fs::read(&out).unwrap()).unwrap();
        let bits = |tf: &TransferFunction| {
            (
                tf.num().coeffs().iter().map(|c| c.to_bits()).collect::<Vec<_>>(),
                tf.den().coeffs().iter().map(|c| c.to_bits()).collect::<Vec<_>>(),
            )
        };
        assert_eq!(bits(&back), bits(&expected));

        // Feeding it back in as input works and keeps every bit.
        let again = dir.path().join("again.json");
        let o = mordrive(&["reduce", "--tf", path_str(&out), "--order", "1", "--out", path_str(&again)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let input_back: TransferFunction = serde_json::from_value(read_json(&again)["input"].clone()).unwrap();
        assert_eq!(bits(&input_back), bits(&expected));
    }
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let o = mordrive(&[
            "reduce", "--tf", path_str(&data("loop_shape.json")), "--order", "2", "--adjust", "auto",
            "--out", path_str(out),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(strip_wall_time(read_json(&a)), strip_wall_time(read_json(&b)));

    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = mordrive(&["simulate", "step", "--tf", path_str(&data("loop_shape.json")), "--out", path_str(out)]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn reduce_rejects_full_order_and_unstable_input() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.json");
    let o = mordrive(&["reduce", "--tf", path_str(&data("loop_shape.json")), "--order", "3", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let unstable = dir.path().join("unstable.json");
    std::fs::write(&unstable, r#"{"num": [1], "den": [1, -0.5, 0.1, 0.01]}"#).unwrap();
    let o = mordrive(&["reduce", "--tf", path_str(&unstable), "--order", "2", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("stability"), "{}", stderr(&o));

    // The numerator order must stay below the target order.
    let o = mordrive(&[
        "reduce", "--tf", path_str(&data("loop_shape.json")), "--order", "2", "--numerator-order", "3",
        "--out", path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));

    let o = mordrive(&["reduce", "--tf", path_str(&data("loop_shape.json")), "--order", "2", "--adjust", "40",
        "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn design_conventional_and_mor() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("design.json");
    let o = mordrive(&[
        "design", "--motor", path_str(&data("reference_drive.json")), "--method", "conventional",
        "--report", path_str(&report),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = read_json(&report);
    let kc = v["design"]["kc"].as_f64().unwrap();
    assert!((kc - 3.38).abs() <= 0.01 * 3.38, "{kc}");
    assert!(v["comparison"]["closed_loop_ise"].is_number());
    assert_eq!(v["published_reference"]["k"], 357.192);

    let o = mordrive(&[
        "design", "--motor", path_str(&data("reference_drive.json")), "--method", "mor", "--q", "1",
        "--report", path_str(&report),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let v = read_json(&report);
    assert_eq!(v["status"], "infeasible");
    assert_eq!(v["error"]["kind"], "no_real_gain");
    let disc = v["error"]["discriminant"].as_f64().unwrap();
    assert!((disc + 3.46e-5).abs() <= 0.1 * 3.46e-5, "{disc}");

    let o = mordrive(&["design", "--builtin-example", "--method", "mor", "--q", "0", "--report", path_str(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn design_names_missing_fields() {
    let dir = TempDir::new().unwrap();
    let mut v = read_json(&data("reference_drive.json"));
    v.as_object_mut().unwrap().remove("kb_v_per_rad_s");
    let motor = dir.path().join("motor.json");
    std::fs::write(&motor, v.to_string()).unwrap();
    let o = mordrive(&[
        "design", "--motor", path_str(&motor), "--method", "conventional",
        "--report", path_str(&dir.path().join("r.json")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kb_v_per_rad_s"), "{}", stderr(&o));

    // Time constants out of order are an input error.
    let mut v = read_json(&data("reference_drive.json"));
    v["tr_s"] = 0.5.into();
    std::fs::write(&motor, v.to_string()).unwrap();
    let o = mordrive(&[
        "design", "--motor", path_str(&motor), "--method", "conventional",
        "--report", path_str(&dir.path().join("r.json")),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn simulate_writes_exact_headers() {
    let dir = TempDir::new().unwrap();
    let step = dir.path().join("step.csv");
    let o = mordrive(&["simulate", "step", "--tf", path_str(&data("loop_shape.json")), "--out", path_str(&step)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&step).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t_s,y"));
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[1] - 1.0).abs() < 0.01);
    assert!(dir.path().join("step.csv.manifest.json").exists());

    let bode = dir.path().join("bode.csv");
    let o = mordrive(&[
        "simulate", "bode", "--tf", path_str(&data("loop_shape.json")), "--out", path_str(&bode),
        "--w-min", "0.1", "--w-max", "1000", "--ppd", "10",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&bode).unwrap();
    assert_eq!(text.lines().next(), Some("omega_rad_per_s,mag_db,phase_deg"));
    assert_eq!(text.lines().count(), 1 + 41);

    let o = mordrive(&[
        "simulate", "step", "--tf", path_str(&data("loop_shape.json")), "--out", path_str(&step),
        "--t-final", "1", "--dt", "-1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn constant_gain_bode_and_step() {
    let dir = TempDir::new().unwrap();
    let tf = dir.path().join("two.json");
    std::fs::write(&tf, r#"{"num": [2], "den": [1]}"#).unwrap();
    let out = dir.path().join("bode.csv");
    let o = mordrive(&["simulate", "bode", "--tf", path_str(&tf), "--out", path_str(&out), "--ppd", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 26);
    for line in text.lines().skip(1) {
        let mag: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((mag - 6.0206).abs() < 1e-3);
    }
    let out = dir.path().join("step.csv");
    let o = mordrive(&["simulate", "step", "--tf", path_str(&tf), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(std::fs::read_to_string(&out).unwrap().lines().skip(1).all(|l| l.ends_with(",2")));
}

#[test]
fn sweep_writes_metrics_table() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = mordrive(&[
        "sweep", "--motor", path_str(&data("reference_drive.json")), "--kc-min", "1", "--kc-max", "50",
        "--steps", "5", "--out", path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("kc,overshoot_pct,settling_s,rise_s,ise,stable"));
    assert_eq!(text.lines().count(), 6);

    let o = mordrive(&[
        "sweep", "--motor", path_str(&data("reference_drive.json")), "--kc-min", "5", "--kc-max", "1",
        "--steps", "5", "--out", path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn argument_errors_exit_2() {
    assert_eq!(mordrive(&[]).status.code(), Some(2));
    assert_eq!(mordrive(&["reduce"]).status.code(), Some(2));
    assert_eq!(mordrive(&["bogus"]).status.code(), Some(2));
    assert_eq!(mordrive(&["--help"]).status.code(), Some(0));
    let o = mordrive(&["reduce", "--tf", "/nonexistent/x.json", "--order", "1", "--out", "/tmp/x"]);
    assert_eq!(o.status.code(), Some(2));
}

fn mutate(rng: &mut ChaCha8Rng, seed: &[u8]) -> Vec<u8> {
    let mut b = seed.to_vec();
    let pool: &[&[u8]] = &[
        b"-", b"0", b"1e400", b"NaN", b"null", b"[", b"]", b"{", b"}", b",", b"\"", b"1e-320", b"-0", b"\xff",
        b"[]", b"\"den\"", b"9999999999999999999999",
    ];
    for _ in 0..rng.gen_range(1..4) {
        if b.is_empty() {
            break;
        }
        let at = rng.gen_range(0..b.len());
        match rng.gen_range(0..4) {
            0 => {
                b.remove(at);
            }
            1 => b[at] = rng.gen(),
            2 => {
                let piece = pool[rng.gen_range(0..pool.len())];
                b.splice(at..at, piece.iter().copied());
            }
            _ => b.truncate(at),
        }
    }
    b
}

#[test]
fn fuzzed_inputs_never_crash() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in.json");
    let out = dir.path().join("out");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tf_seed = std::fs::read(data("loop_shape.json")).unwrap();
    let motor_seed = std::fs::read(data("reference_drive.json")).unwrap();
    let mut seen = [0usize; 4];
    for i in 0..240 {
        let (seed, args): (&[u8], Vec<&str>) = match i % 4 {
            0 => (&tf_seed, vec!["reduce", "--order", "2", "--tf"]),
            1 => (&tf_seed, vec!["simulate", "step", "--tf"]),
            2 => (&motor_seed, vec!["design", "--method", "conventional", "--motor"]),
            _ => (&motor_seed, vec!["sweep", "--kc-min", "1", "--kc-max", "40", "--steps", "3", "--motor"]),
        };
        let bytes = mutate(&mut rng, seed);
        std::fs::write(&input, &bytes).unwrap();
        let mut full = args.clone();
        full.push(path_str(&input));
        full.push(if i % 4 == 2 { "--report" } else { "--out" });
        full.push(path_str(&out));
        let o = mordrive(&full);
        let code = o.status.code();
        assert!(
            matches!(code, Some(0 | 2 | 3)),
            "exit {code:?} for {:?}\n{}",
            String::from_utf8_lossy(&bytes),
            stderr(&o)
        );
        assert!(!stderr(&o).contains("panicked"), "{}", stderr(&o));
        seen[code.unwrap() as usize] += 1;
    }
    assert!(seen[2] > 0);
}
