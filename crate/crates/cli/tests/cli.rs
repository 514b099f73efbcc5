use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(file)
}

fn cac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cac")).args(args).output().expect("run cac")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn check(file: &str, extra: &[&str]) -> Output {
    let p = corpus(file);
    let mut args = vec!["check", p.to_str().unwrap()];
    args.extend_from_slice(extra);
    cac(&args)
}

#[test]
fn accepted_signatures_exit_zero() {
    for f in ["nat.cac", "list.cac", "int.cac", "distributivity.cac", "f-arrow.cac", "dlist.cac"] {
        let o = check(f, &[]);
        assert_eq!(code(&o), 0, "{f}:\n{}", stdout(&o));
        assert!(stdout(&o).trim_end().ends_with(": accepted"), "{f}");
    }
    assert_eq!(code(&check("trm.cac", &["--trusted-recursor", "trm"])), 0);
}

#[test]
fn per_symbol_report() {
    let out = stdout(&check("nat.cac", &[]));
    for line in ["symbol nat: ok", "symbol 0: ok", "symbol s: ok", "symbol plus: ok", "rule plus/1: ok", "rule plus/2: ok"] {
        assert!(out.lines().any(|l| l == line), "missing {line:?} in\n{out}");
    }
}

#[test]
fn rejections_exit_one_with_codes() {
    for (f, extra, c) in [
        ("mendler.cac", &[][..], "E0400"),
        ("fin-strong.cac", &[], "E0401"),
        ("jmeq-strong.cac", &[], "E0402"),
        ("fin-intro.cac", &[], "E0403"),
        ("duplicating.cac", &[], "E0205"),
        ("trm.cac", &[], "E0502"),
    ] {
        let o = check(f, extra);
        assert_eq!(code(&o), 1, "{f}");
        assert!(stdout(&o).contains(&format!("error[{c}]")), "{f}: no {c} in\n{}", stdout(&o));
    }
}

#[test]
fn trusted_recursor_is_a_warning() {
    let out = stdout(&check("trm.cac", &["--trusted-recursor", "trm"]));
    assert!(out.contains("warning[W0503]"), "{out}");
    assert!(out.contains("symbol rec: ok (with warnings)"), "{out}");
}

#[test]
fn fuel_exhaustion_exits_three() {
    assert_eq!(code(&check("looping.cac", &["--fuel", "10"])), 3);
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cac");
    std::fs::write(&bad, "symbol f : nat.\n").unwrap();
    assert_eq!(code(&cac(&["check", bad.to_str().unwrap()])), 2);
    std::fs::write(&bad, "constant c : *\n").unwrap();
    assert_eq!(code(&cac(&["check", bad.to_str().unwrap()])), 2);
    std::fs::write(&bad, "constant c : *.\nconstant c : *.\n").unwrap();
    assert_eq!(code(&cac(&["check", bad.to_str().unwrap()])), 2);
    assert_eq!(code(&cac(&["check", dir.path().join("missing.cac").to_str().unwrap()])), 2);
    assert_eq!(code(&cac(&["frobnicate"])), 2);
}

#[test]
fn json_diagnostics_are_stable() {
    let a = stdout(&check("mendler.cac", &["--json"]));
    let b = stdout(&check("mendler.cac", &["--json"]));
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr[0]["code"], "E0400");
    assert_eq!(arr[0]["severity"], "error");
    assert_eq!(arr[0]["symbol"], "c");
    assert_eq!(arr[0]["position"], "1.1");
    assert_eq!(arr[0]["paper_pointer"], "strict-positivity");
    let keys: Vec<&str> = arr[0].as_object().unwrap().keys().map(|k| k.as_str()).collect();
    assert_eq!(keys.len(), 7, "{keys:?}");
    let clean: serde_json::Value = serde_json::from_str(&stdout(&check("nat.cac", &["--json"]))).unwrap();
    assert_eq!(clean, serde_json::json!([]));
}

#[test]
fn normalize_examples() {
    let nat = corpus("nat.cac");
    let o = cac(&["normalize", nat.to_str().unwrap(), "plus (s 0) (s 0)"]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, "s (s 0)\n"));
    let o = cac(&["normalize", nat.to_str().unwrap(), "0"]);
    assert_eq!(stdout(&o), "0\n");
    let o = cac(&["normalize", nat.to_str().unwrap(), "plus (s 0) (s 0)", "--trace"]);
    assert_eq!(stdout(&o), "step 1: plus/2 at ε\nstep 2: plus/1 at 2\ns (s 0)\n");
    let cic = corpus("nat.cicminus");
    let o = cac(&["normalize", cic.to_str().unwrap(), "WElim_Nat Q (Constr^Nat_2 Constr^Nat_1) f1 f2"]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, "f2 Constr^Nat_1 f1\n"));
}

#[test]
fn normalize_rejects_ill_typed_terms() {
    let nat = corpus("nat.cac");
    let o = cac(&["normalize", nat.to_str().unwrap(), "plus s s"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("E0101"));
    let o = cac(&["normalize", nat.to_str().unwrap(), "plus (s"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn normalize_out_of_fuel() {
    let f = corpus("f-arrow.cac");
    let o = cac(&["normalize", f.to_str().unwrap(), "F (s (s (s 0))) nat nat", "--fuel", "2"]);
    assert_eq!(code(&o), 3, "{}", stdout(&o));
}

#[test]
fn translate_round_trips_through_check() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["nat.cicminus", "list.cicminus", "vec.cicminus"] {
        let out = dir.path().join(f.replace(".cicminus", ".cac"));
        let o = cac(&["translate", corpus(f).to_str().unwrap(), "-o", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{f}: {}", stdout(&o));
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.contains("recursor WElim_"), "{f}:\n{text}");
        let o = cac(&["check", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{f}:\n{}", stdout(&o));
    }
}

#[test]
fn translate_nat_declares_the_inductive_block_first() {
    let o = cac(&["translate", corpus("nat.cicminus").to_str().unwrap()]);
    let text = stdout(&o);
    let first: Vec<&str> = text.lines().take(3).collect();
    assert_eq!(first, ["constant Ind_Nat : *.", "constant Constr^Nat_1 : Ind_Nat.", "constant Constr^Nat_2 : Ind_Nat -> Ind_Nat."]);
    assert!(text.lines().any(|l| l.starts_with("symbol check_1 : ")), "{text}");
    assert!(text.contains("recursor SElim^Nat_1 for Ind_Nat."), "{text}");
}

#[test]
fn translate_edge_cases() {
    let o = cac(&["translate", corpus("empty.cicminus").to_str().unwrap()]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, ""));
    let o = cac(&["translate", corpus("jmeq-strong.cicminus").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("E0402"));
}

#[test]
fn cicminus_check_lists_items() {
    let o = check("nat.cicminus", &[]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.lines().any(|l| l == "define Nat : *"), "{out}");
    assert!(out.lines().any(|l| l == "define Vec : Ind(X:*){X, X -> X} -> *"), "{out}");
    assert!(out.trim_end().ends_with(": accepted"));
}
