use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use wdvv_core::format::{parse_potential, write_potential};

const CASES: &[(&str, &str, &str, &str)] = &[
    ("a222_m4", "2,2,2", "4", "standard"),
    ("a223_m3", "2,2,3", "3", "standard"),
    ("a234_m2", "2,3,4", "2", "standard"),
    ("a333_m2", "3,3,3", "2", "standard"),
    ("a237_m1", "2,3,7", "1", "standard"),
    ("a223_m3_vanishing", "2,2,3", "3", "vanishing"),
    ("a222_m4_vanishing_no_vii", "2,2,2", "4", "vanishing-no-vii"),
    ("a223_m2_rescaled_7_3", "2,2,3", "2", "rescaled:7/3"),
];

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

#[test]
fn reconstruct_output_matches_golden_files() {
    let tmp = tempfile::tempdir().unwrap();
    for &(name, a, m, mode) in CASES {
        let pot = tmp.path().join(format!("{name}.pot"));
        let trace = tmp.path().join(format!("{name}.trace"));
        let status = Command::new(env!("CARGO_BIN_EXE_wdvv"))
            .args(["reconstruct", "-A", a, "-m", m, "--mode", mode, "-o"])
            .arg(&pot)
            .arg("--trace")
            .arg(&trace)
            .status()
            .unwrap();
        assert!(status.success(), "{name}");
        for (got, ext) in [(&pot, "pot"), (&trace, "trace")] {
            let want = fs::read_to_string(golden_dir().join(format!("{name}.{ext}"))).unwrap();
            assert_eq!(fs::read_to_string(got).unwrap(), want, "{name}.{ext}");
        }
    }
}

#[test]
fn golden_files_round_trip() {
    let mut seen = 0;
    for entry in fs::read_dir(golden_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "pot") {
            let text = fs::read_to_string(&path).unwrap();
            let p = parse_potential(&text).unwrap();
            assert_eq!(write_potential(&p), text, "{}", path.display());
            seen += 1;
        }
    }
    assert_eq!(seen, CASES.len());
}

#[test]
fn golden_files_verify() {
    for &(name, ..) in CASES {
        let out = Command::new(env!("CARGO_BIN_EXE_wdvv"))
            .arg("verify")
            .arg(golden_dir().join(format!("{name}.pot")))
            .output()
            .unwrap();
        let stdout = String::from_utf8(out.stdout).unwrap();
        assert_eq!(out.status.code(), Some(0), "{name}:\n{stdout}");
        assert!(stdout.contains("CHECK wdvv: PASS"));
    }
}
