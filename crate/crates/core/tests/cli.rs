use std::process::{Command, Output};

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data");

fn hlcft(spec: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hlcft"))
        .args(args)
        .arg("--spec")
        .arg(format!("{DATA}/{spec}"))
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn every_shipped_spec_runs_clean() {
    for spec in ["d1_p2.toml", "d1_p3.toml", "d1_q4.toml", "d2_p2.toml", "d2_q4.toml"] {
        let o = hlcft(spec, &["run"]);
        assert_eq!(o.status.code(), Some(0), "{spec}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!stdout(&o).contains("verification failed"), "{spec}");
    }
}

#[test]
fn json_report_shape() {
    let o = hlcft("d1_p2.toml", &["pair", "--ext", "unramified", "--symbol", "{t}", "--json", "-"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["tool"], "hlcft");
    assert_eq!(v["field"]["p"], 2);
    assert_eq!(v["results"][0]["task"], "pair");
    assert_eq!(v["results"][0]["value"], "1/2");
}

#[test]
fn pairing_and_invariant_lines() {
    let o = hlcft("d1_p2.toml", &["pair", "--ext", "wild", "--symbol", "{1 + t}"]);
    assert_eq!(stdout(&o).trim(), "pair wild {1 + t} = 1/2 (M = 2)");
    let o = hlcft("d1_p2.toml", &["inv", "--class", "1 (x) t"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("= 1/2"));
}

#[test]
fn refusal_exits_3() {
    let o = hlcft("d2_p2.toml", &["verify", "--ext", "wild3", "--level", "3"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("too small"));
}

#[test]
fn bad_input_exits_2() {
    let cases: [&[&str]; 3] = [
        &["pair", "--ext", "wild", "--symbol", "{1 + t"],
        &["verify", "--ext", "nope"],
        &["inv", "--class", "1 (x) 0"],
    ];
    for args in cases {
        let o = hlcft("d1_p2.toml", args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
    let o = Command::new(env!("CARGO_BIN_EXE_hlcft"))
        .args(["run", "--spec", "/nonexistent.toml"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
