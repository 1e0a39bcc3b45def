use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flexplan"))
}

fn out_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("flexplan_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn sweep_then_report_round_trip() {
    let dir = out_dir("sweep");
    let out = bin().args(["sweep", "--preset", "p2p", "--out-dir"]).arg(&dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("strategy=CSO psd=15.03: EP=3375 Gbps JP=3750 Gbps"), "{stdout}");
    assert!(stdout.contains("strategy=FIX(37.5) psd=15.03: EP=3375 Gbps JP=3375 Gbps"), "{stdout}");

    let again = out_dir("report");
    let out = bin().arg("report").arg(dir.join("bundle.json")).arg("--out-dir").arg(&again).output().unwrap();
    assert!(out.status.success());
    for f in ["throughput_vs_load.csv", "trace.csv", "slot_usage.csv", "summary.txt"] {
        assert_eq!(std::fs::read(dir.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn single_phase_commands_write_their_csv() {
    let dir = out_dir("phases");
    for (cmd, file) in [("precalc", "candidates.csv"), ("optimize", "provisioning.csv"), ("spacing", "spacing.csv")] {
        let out = bin()
            .args([cmd, "--topology", "ring4", "--load", "0.2", "--k", "2", "--out-dir"])
            .arg(&dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let text = std::fs::read_to_string(dir.join(file)).unwrap();
        assert!(text.lines().count() > 1, "{file} is empty");
    }
}

#[test]
fn bad_input_fails_cleanly() {
    let out = bin().args(["sweep", "--preset", "nowhere"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));
    let out = bin().args(["tune", "--strategy", "spiral"]).output().unwrap();
    assert!(!out.status.success());
    let out = bin().args(["tune", "--load", "3"]).output().unwrap();
    assert!(!out.status.success());
}
