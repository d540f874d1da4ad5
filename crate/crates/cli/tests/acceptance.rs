//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! The suite runs twice at the same time, once in this process and once
//! through the `thermorelax --check` binary. Criterion 12 additionally
//! requires every CSV the two runs wrote to be byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};

use thermorelax_cli::check::run_checks;

fn collect_csv(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
    let Ok(entries) = fs::read_dir(dir) else {
        return;
    };
    for entry in entries.flatten() {
        let path = entry.path();
        if path.is_dir() {
            collect_csv(root, &path, out);
        } else if path.extension().is_some_and(|e| e == "csv") {
            let rel = path.strip_prefix(root).expect("under root").to_path_buf();
            out.insert(rel, fs::read(&path).expect("readable csv"));
        }
    }
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let in_process = tmp.path().join("library");
    let via_binary = tmp.path().join("binary");

    let (results, binary) = std::thread::scope(|s| {
        let child = s.spawn(|| {
            Command::new(env!("CARGO_BIN_EXE_thermorelax"))
                .arg("--check")
                .arg("--out")
                .arg(&via_binary)
                .output()
                .expect("binary runs")
        });
        let results = run_checks(&in_process).expect("check outputs are writable");
        (results, child.join().expect("binary thread"))
    });

    let mut failed = 0;
    for r in &results {
        let mut line = r.line();
        let mut pass = r.pass();
        if r.id == 12 {
            let (mut a, mut b) = (BTreeMap::new(), BTreeMap::new());
            collect_csv(&in_process, &in_process, &mut a);
            collect_csv(&via_binary, &via_binary, &mut b);
            let differing: Vec<String> = a
                .keys()
                .chain(b.keys())
                .filter(|k| a.get(*k) != b.get(*k))
                .map(|k| k.display().to_string())
                .collect();
            if a.is_empty() || !differing.is_empty() {
                pass = false;
                line = format!(
                    "FAIL 12  {}: CSV files differ between --check runs: {:?}",
                    r.title, differing
                );
            } else {
                line = format!(
                    "{line}; {} CSV files identical across two --check runs",
                    a.len()
                );
            }
        }
        if !pass {
            failed += 1;
        }
        println!("{line}");
    }
    if !binary.status.success() {
        println!("binary --check exited with {}:", binary.status);
        print!("{}", String::from_utf8_lossy(&binary.stderr));
        failed += 1;
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed.min(results.len()),
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
