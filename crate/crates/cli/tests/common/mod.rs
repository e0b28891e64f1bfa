#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kirchhoff_cli::Scenario;

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_kirchhoff"))
}

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn examples_dir() -> PathBuf {
    crate_dir().join("examples")
}

pub fn golden_dir() -> PathBuf {
    crate_dir().join("tests").join("golden")
}

pub fn malformed_dir() -> PathBuf {
    crate_dir().join("tests").join("malformed")
}

pub fn scenario_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(examples_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
}

pub fn load(path: &Path) -> Scenario {
    Scenario::load(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn example(name: &str) -> Scenario {
    load(&examples_dir().join(format!("{name}.json")))
}

/// Subcommands exercised for a scenario: `norms` and `certify` always, the
/// rest when the scenario carries their section.
pub fn commands_for(s: &Scenario) -> Vec<&'static str> {
    let mut out = vec!["norms", "certify"];
    if s.simulate.is_some() {
        out.push("simulate");
    }
    if s.fixedpoint.is_some() {
        out.push("fixedpoint");
    }
    if s.audit.is_some() {
        out.push("linear-audit");
    }
    out
}

pub fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args).env_remove("KIRCHHOFF_WORKERS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn listing(dir: &Path) -> BTreeSet<String> {
    fs::read_dir(dir)
        .map(|rd| {
            rd.map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
                .collect()
        })
        .unwrap_or_default()
}

/// Runs every shipped scenario and compares all outputs with the golden
/// files. With `UPDATE_GOLDEN=1` the goldens are rewritten instead.
/// Returns one message per mismatch.
pub fn check_goldens() -> Vec<String> {
    let update = std::env::var("UPDATE_GOLDEN").is_ok_and(|v| v == "1");
    let mut problems = Vec::new();
    for file in scenario_files() {
        let scenario = load(&file);
        let out = tempfile::tempdir().unwrap();
        for cmd in commands_for(&scenario) {
            let o = run(
                &[
                    cmd,
                    "--config",
                    file.to_str().unwrap(),
                    "--out-dir",
                    out.path().to_str().unwrap(),
                ],
                &[],
            );
            let record = format!(
                "exit: {}\n{}",
                o.status.code().unwrap_or(-1),
                String::from_utf8_lossy(&o.stdout)
            );
            fs::write(out.path().join(format!("{cmd}.out")), record).unwrap();
        }
        let expected_dir = golden_dir().join(&scenario.name);
        if update {
            let _ = fs::remove_dir_all(&expected_dir);
            fs::create_dir_all(&expected_dir).unwrap();
            for name in listing(out.path()) {
                fs::copy(out.path().join(&name), expected_dir.join(&name)).unwrap();
            }
            continue;
        }
        let (got, want) = (listing(out.path()), listing(&expected_dir));
        for name in want.symmetric_difference(&got) {
            problems.push(format!(
                "{}: {name} {}",
                scenario.name,
                if got.contains(name) {
                    "produced but has no golden"
                } else {
                    "missing from output"
                }
            ));
        }
        for name in want.intersection(&got) {
            let a = fs::read(out.path().join(name)).unwrap();
            let b = fs::read(expected_dir.join(name)).unwrap();
            if a != b {
                problems.push(format!("{}: {name} differs from golden", scenario.name));
            }
        }
    }
    problems
}

/// Malformed scenario files, the command they are fed to, and a string the
/// diagnostic must contain.
pub const MALFORMED: &[(&str, &str, &str)] = &[
    ("missing-horizon.json", "simulate", "horizon"),
    ("unknown-key.json", "simulate", "gevrey.speed"),
    ("unknown-top-level.json", "certify", "horizn"),
    ("s-at-boundary.json", "certify", "gevrey.s"),
    ("wrong-type.json", "norms", "basis.modes"),
    (
        "family-range.json",
        "norms",
        "initial.position.family.last_mode",
    ),
    (
        "too-many-coefficients.json",
        "norms",
        "initial.velocity.coefficients",
    ),
    ("torus-without-period.json", "norms", "basis.period"),
    ("grading-ratio.json", "simulate", "grid.grading_ratio"),
    ("syntax.json", "norms", "line"),
    ("coarse-grid.json", "simulate", "grid.steps"),
    ("audit-missing.json", "linear-audit", "audit"),
    (
        "audit-delta.json",
        "linear-audit",
        "audit.coefficient.manufactured.delta",
    ),
];

/// Feeds every malformed file to the binary and returns one message per
/// case that did not exit 64 with the expected field in its diagnostic.
pub fn check_malformed() -> Vec<String> {
    let out = tempfile::tempdir().unwrap();
    let mut problems = Vec::new();
    for (file, cmd, needle) in MALFORMED {
        let path = malformed_dir().join(file);
        let o = run(
            &[
                cmd,
                "--config",
                path.to_str().unwrap(),
                "--out-dir",
                out.path().to_str().unwrap(),
            ],
            &[],
        );
        let stderr = String::from_utf8_lossy(&o.stderr);
        if o.status.code() != Some(64) || !stderr.contains(needle) {
            problems.push(format!(
                "{file}: exit {:?}, stderr {:?} (expected 64 and {needle:?})",
                o.status.code(),
                stderr.trim()
            ));
        }
    }
    problems
}
