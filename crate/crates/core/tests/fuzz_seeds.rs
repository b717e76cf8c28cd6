// SPDX-License-Identifier: Apache-2.0

//! Replays the checked-in fuzz corpora through the same checks the fuzz
//! targets make, so the seeds stay meaningful on a stable toolchain.

use std::path::PathBuf;

use memadvisor::ingest::parse_profile_bytes;
use memadvisor::knowledge_base::parse_store_line;
use memadvisor::Rational;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn profile_seeds() {
    let mut accepted = Vec::new();
    for (name, data) in seeds("parse_profiles") {
        if let Ok(set) = parse_profile_bytes(&data) {
            let again = parse_profile_bytes(set.to_records().as_bytes()).unwrap();
            assert_eq!(set, again, "{name}");
            let _ = memadvisor::classifier::classify_profile(&set);
            accepted.push(name);
        }
    }
    assert_eq!(accepted, ["crlf", "huge_numbers", "single_run", "worked_five_runs"]);
}

#[test]
fn store_line_seeds() {
    let mut accepted = Vec::new();
    for (name, data) in seeds("kb_store_line") {
        let Ok(line) = std::str::from_utf8(&data) else { continue };
        if let Ok(entry) = parse_store_line(line) {
            let text = serde_json::to_string(&entry).unwrap();
            assert_eq!(parse_store_line(&text).unwrap(), entry, "{name}");
            accepted.push(name);
        }
    }
    assert_eq!(accepted, ["expanding_rapid", "shrinking_single_run"]);
}

#[test]
fn rational_seeds() {
    let mut accepted = Vec::new();
    for (name, data) in seeds("rational") {
        let Ok(s) = std::str::from_utf8(&data) else { continue };
        if let Ok(r) = s.parse::<Rational>() {
            assert_eq!(r.to_string().parse::<Rational>().unwrap(), r, "{name}");
            accepted.push(name);
        }
    }
    assert!(accepted.contains(&"half".to_string()));
    assert!(!accepted.contains(&"zero_denominator".to_string()));
}
