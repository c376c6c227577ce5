//! Drives the `volquad` binary through a full run.

use std::path::Path;
use std::process::{Command, Output};

fn volquad(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_volquad"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn volquad")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key))
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or_else(|| panic!("no '{key}' in {text}"))
}

#[test]
fn generate_mesh_weigh_and_integrate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    stdout(&volquad(
        d,
        &["gen-nodes", "--surface", "ball", "--n", "500", "--out", "nodes.txt"],
    ));
    stdout(&volquad(
        d,
        &[
            "tessellate",
            "--nodes",
            "nodes.txt",
            "--surface",
            "ball",
            "--out",
            "tets.txt",
        ],
    ));
    std::fs::write(d.join("run.toml"), "m = 2\nsurface = \"ball\"\n").unwrap();
    let args = [
        "weights",
        "--nodes",
        "nodes.txt",
        "--tets",
        "tets.txt",
        "--config",
        "run.toml",
        "--out",
        "w.txt",
    ];
    stdout(&volquad(d, &args));
    let first = std::fs::read(d.join("w.txt")).unwrap();
    stdout(&volquad(d, &args));
    assert_eq!(
        first,
        std::fs::read(d.join("w.txt")).unwrap(),
        "reruns must be byte-identical"
    );

    let out = stdout(&volquad(
        d,
        &[
            "integrate",
            "--nodes",
            "nodes.txt",
            "--weights",
            "w.txt",
            "--integrand",
            "f2",
            "--surface",
            "ball",
        ],
    ));
    let err = value(&out, "error");
    assert!(err < 5e-2 * value(&out, "reference"), "{out}");
}

#[test]
fn input_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("nodes.txt"), "0 0 0 1\n1 0 0 1\n0 1 0 1\n0 0 1 1\n").unwrap();
    std::fs::write(d.join("tets.txt"), "1 2 3 4\n").unwrap();
    let o = volquad(d, &["tessellate", "--nodes", "missing.txt", "--out", "t.txt"]);
    assert_eq!(o.status.code(), Some(2));
    let o = volquad(
        d,
        &[
            "weights",
            "--nodes",
            "nodes.txt",
            "--tets",
            "tets.txt",
            "--surface",
            "ball",
            "--out",
            "w.txt",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tets.txt:1:"));
    // Known mode without a surface.
    let o = volquad(d, &["converge", "--ns", "100,200", "--out", "c"]);
    assert_eq!(o.status.code(), Some(2));
}
