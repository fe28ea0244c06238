// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

fn rdf(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdf"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("rdf binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn stages_lists_every_kind() {
    let dir = tempfile::tempdir().unwrap();
    let o = rdf(&["stages"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 10);
    assert!(text.contains("translateGuides"));
}

#[test]
fn gen_run_and_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(rdf(&["gen", "-o", "lib", "--cells", "12", "--seed", "3"], d)
        .status
        .success());
    assert!(rdf(&["validate", "-c", "lib/flow.toml"], d).status.success());
    let first = rdf(&["run", "-c", "lib/flow.toml"], d);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(stdout(&first).matches(" ok ").count(), 8);
    let second = rdf(&["run", "-c", "lib/flow.toml"], d);
    assert_eq!(stdout(&second).matches(" cached ").count(), 8);

    let run = d.join("lib/run");
    let def = run.join("final/design.def");
    let guide = run.join("final/design.guide");
    let check = rdf(
        &[
            "check",
            "--lef",
            "lib/design.lef",
            "--def",
            def.to_str().unwrap(),
            "--guide",
            guide.to_str().unwrap(),
        ],
        d,
    );
    assert!(check.status.success(), "{}", stdout(&check));
    assert!(stdout(&check).starts_with("# rdf check report v1"));

    let sta = rdf(
        &[
            "sta",
            "--lef",
            "lib/design.lef",
            "--def",
            def.to_str().unwrap(),
            "--liberty",
            "lib/design.lib",
            "--sdc",
            "lib/design.sdc",
        ],
        d,
    );
    assert!(sta.status.success(), "{}", String::from_utf8_lossy(&sta.stderr));
}

#[test]
fn bad_inputs_fail_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("flow.toml"), "schema = 9\n").unwrap();
    let o = rdf(&["run", "-c", "flow.toml"], d);
    assert_eq!(o.status.code(), Some(2));
    let o = rdf(&["run", "-c", "missing.toml"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(rdf(&["gen", "-o", "lib", "--cells", "4"], d).status.success());
    let o = rdf(&["run", "-c", "lib/flow.toml", "--until", "floorplan"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown stage kind"));
}
