//! The `txlab` binary: verbs, exit codes, report formats and witness files.

use std::path::{Path, PathBuf};
use std::process::Command;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Out {
    /// The value of the first `key: value` line.
    fn get(&self, key: &str) -> Option<&str> {
        self.stdout
            .lines()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
    }

    fn witnesses(&self) -> Vec<PathBuf> {
        self.stdout
            .lines()
            .filter_map(|l| l.strip_prefix("witness: "))
            .map(PathBuf::from)
            .collect()
    }

    /// The report without its timing line.
    fn stable(&self) -> String {
        self.stdout.lines().filter(|l| !l.starts_with("time-ms")).collect::<Vec<_>>().join("\n")
    }
}

fn txlab(args: &[&str], witness_dir: &Path) -> Out {
    let out = Command::new(env!("CARGO_BIN_EXE_txlab"))
        .args(args)
        .arg("--witness-dir")
        .arg(witness_dir)
        .output()
        .expect("binary runs");
    Out {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn fig1_history_is_race_free() {
    let d = tmp();
    let f = data("fig1_atomic.hist");
    let out = txlab(&["check-history", f.to_str().unwrap(), "--checks", "tdrf"], d.path());
    assert_eq!(out.code, 0, "{}", out.stdout);
    assert_eq!(out.get("wf"), Some("pass"));
    assert_eq!(out.get("tdrf"), Some("pass"));
    assert_eq!(out.get("verdict"), Some("pass"));
}

#[test]
fn fig3_history_fails_cdrf_with_a_witness() {
    let d = tmp();
    let f = data("fig3_racy.hist");
    let out = txlab(&["check-history", f.to_str().unwrap(), "--checks", "cdrf"], d.path());
    assert_eq!(out.code, 1);
    assert_eq!(out.get("cdrf"), Some("fail"));
    assert!(out.get("cdrf.race").is_some());
    let ws = out.witnesses();
    assert_eq!(ws.len(), 1);
    assert!(ws[0].to_str().unwrap().ends_with("fig3_racy.cdrf.witness.hist"));
}

#[test]
fn empty_history_is_well_formed() {
    let d = tmp();
    let f = data("empty.hist");
    let out = txlab(&["check-history", f.to_str().unwrap(), "--checks", "wf"], d.path());
    assert_eq!(out.code, 0);
    assert_eq!(out.get("wf"), Some("pass"));
}

#[test]
fn graph_checks_run_after_consistency() {
    let d = tmp();
    let f = data("fig1_atomic.hist");
    let out = txlab(&["check-history", f.to_str().unwrap(), "--checks", "opacity-graph,wf"], d.path());
    let order: Vec<&str> = out
        .stdout
        .lines()
        .filter_map(|l| l.split_once(": ").map(|(k, _)| k))
        .filter(|k| ["wf", "cons", "opacity-graph"].contains(k))
        .collect();
    assert_eq!(order, ["wf", "cons", "opacity-graph"]);
}

#[test]
fn malformed_history_skips_other_checks() {
    let d = tmp();
    let f = d.path().join("bad.hist");
    std::fs::write(&f, "1 1 ok\n").unwrap();
    let out = txlab(&["check-history", f.to_str().unwrap(), "--checks", "tdrf,cdrf"], d.path());
    assert_eq!(out.code, 1);
    assert_eq!(out.get("wf"), Some("fail"));
    assert_eq!(out.get("wf.skipped"), Some("tdrf,cdrf"));
    assert_eq!(out.get("tdrf"), None);
    assert_eq!(out.witnesses().len(), 1);
}

#[test]
fn witness_files_fail_the_same_check_again() {
    let d = tmp();
    let f = data("fig3_racy.hist");
    for check in ["atomic", "tdrf", "cdrf", "cdrf-graph", "opacity-graph", "fenced-drf"] {
        let out = txlab(&["check-history", f.to_str().unwrap(), "--checks", check], d.path());
        for w in out.witnesses().iter().filter(|w| w.extension().unwrap() == "hist") {
            let again = txlab(&["check-history", w.to_str().unwrap(), "--checks", check], d.path());
            assert_eq!(again.get(check), out.get(check), "{check} on {}", w.display());
        }
    }
    let out = txlab(&["run", "fig3", "--tm", "tl2", "--check", "tdrf"], d.path());
    let w = &out.witnesses()[0];
    let again = txlab(&["check-history", w.to_str().unwrap(), "--checks", "tdrf"], d.path());
    assert_eq!(again.get("tdrf"), Some("fail"));
    let out = txlab(&["run", "thm25", "--tm", "tl2", "--check", "refinement"], d.path());
    let w = &out.witnesses()[0];
    let again = txlab(&["check-history", w.to_str().unwrap(), "--checks", "opacity"], d.path());
    assert_eq!(again.get("opacity"), Some("fail"));
}

#[test]
fn reports_are_deterministic() {
    let d = tmp();
    for args in [
        &["run", "fig6", "--tm", "tl2", "--check", "post,tdrf,refinement,witness-graph"][..],
        &["check-history", data("fig3_racy.hist").to_str().unwrap(), "--checks", "cdrf,cdrf-graph"][..],
        &["tm-props", "--tm", "2pl", "--depth", "4"][..],
    ] {
        let a = txlab(args, d.path());
        let b = txlab(args, d.path());
        assert_eq!(a.code, b.code);
        assert_eq!(a.stable(), b.stable());
    }
}

#[test]
fn run_examples() {
    let d = tmp();
    let out = txlab(&["run", "fig1", "--tm", "fencedtl2", "--check", "post"], d.path());
    assert_eq!((out.code, out.get("post")), (0, Some("pass")));
    let out = txlab(&["run", "fig3", "--tm", "atomic", "--check", "post"], d.path());
    assert_eq!((out.code, out.get("post")), (0, Some("pass")));
    let out = txlab(&["run", "fig3", "--tm", "tl2", "--check", "post"], d.path());
    assert_eq!((out.code, out.get("post")), (1, Some("fail")));
    assert_eq!(out.witnesses().len(), 1);
    let out = txlab(&["run", "thm25", "--tm", "tl2", "--check", "refinement"], d.path());
    assert_eq!((out.code, out.get("refinement")), (1, Some("fail")));
}

#[test]
fn loops_cut_by_the_bound_give_partial() {
    let d = tmp();
    let out = txlab(&["run", "fig5", "--tm", "2pl", "--check", "post"], d.path());
    assert_eq!((out.code, out.get("verdict")), (4, Some("partial")));
}

#[test]
fn program_files_are_accepted() {
    let d = tmp();
    let f = d.path().join("p.tm");
    std::fs::write(&f, "thread a { l = atomic { x.write(1); }; }\npost l == committed => x == 1;\n").unwrap();
    let out = txlab(&["run", f.to_str().unwrap(), "--tm", "globallock", "--check", "post,refinement"], d.path());
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
}

#[test]
fn tm_props_examples() {
    let d = tmp();
    let out = txlab(&["tm-props", "--tm", "2pl", "--depth", "4"], d.path());
    assert_eq!(out.get("progressive"), Some("pass"));
    assert_eq!(out.get("invisible-reads"), Some("fail"));
    assert!(out.get("invisible-reads.witness").is_some());
    assert_eq!(out.code, 1);
    let out = txlab(&["tm-props", "--tm", "globallock", "--depth", "4"], d.path());
    assert_eq!(out.get("progressive"), Some("pass"));
    assert_eq!(out.get("invisible-reads"), Some("fail"));
    let out = txlab(&["tm-props", "--tm", "tl2", "--depth", "4"], d.path());
    assert_eq!((out.code, out.get("invisible-reads")), (0, Some("pass")));
}

#[test]
fn input_errors_exit_with_2() {
    let d = tmp();
    let f = d.path().join("garbage.hist");
    std::fs::write(&f, "1 1 frobnicate\n").unwrap();
    let out = txlab(&["check-history", f.to_str().unwrap()], d.path());
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("line 1"), "{}", out.stderr);
    assert_eq!(txlab(&["run", "no-such-program"], d.path()).code, 2);
    assert_eq!(txlab(&["run", "fig1", "--tm", "nope"], d.path()).code, 2);
    assert_eq!(txlab(&["run", "fig1", "--bounds", "depth=x"], d.path()).code, 2);
    assert_eq!(txlab(&["run", "fig1", "--tm", "atomic", "--check", "witness-graph"], d.path()).code, 2);
}

#[test]
fn cap_overflow_exits_with_3_and_suggests_graphs() {
    let d = tmp();
    let f = d.path().join("wide.hist");
    let mut s = String::new();
    for i in 0..5u64 {
        s.push_str(&format!("{} 1 write x {}\n{} 1 retu\n", 2 * i + 1, i + 1, 2 * i + 2));
    }
    std::fs::write(&f, s).unwrap();
    let out = txlab(&["check-history", f.to_str().unwrap(), "--checks", "cdrf", "--bounds", "perm-cap=3"], d.path());
    assert_eq!(out.code, 3);
    assert!(out.stderr.contains("graph"), "{}", out.stderr);
}

#[test]
fn json_lines_output() {
    let d = tmp();
    let f = data("fig3_racy.hist");
    let out = txlab(&["check-history", f.to_str().unwrap(), "--checks", "cdrf", "--format", "json-lines"], d.path());
    let lines: Vec<serde_json::Value> = out.stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[1]["check"], "cdrf");
    assert_eq!(lines[1]["verdict"], "fail");
    assert_eq!(lines[2]["verdict"], "fail");
    assert_eq!(lines[2]["witnesses"].as_array().unwrap().len(), 1);
}

#[test]
fn corpus_verbs() {
    let d = tmp();
    let out = txlab(&["corpus", "list"], d.path());
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout.lines().count(), 6);
    let out = txlab(&["corpus", "show", "fig3"], d.path());
    assert!(out.stdout.contains("post l1 == 1 => l2 == 2;"));
    assert_eq!(txlab(&["corpus", "show", "fig9"], d.path()).code, 2);
}
