use std::fs;
use std::path::PathBuf;

use orbitlab_core::corpus::{list_examples, load_example, verify_bundle, verify_corpus};

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/corpus.toml")
}

#[test]
fn every_bundle_matches_its_expectations() {
    for name in list_examples() {
        let cfg = load_example(name).unwrap();
        let b = verify_bundle(&cfg).unwrap();
        for o in &b.outcome {
            assert!(o.ok, "{name}/{}: {:?} {:?}", o.id, o.mismatches, o.error);
        }
        let flagged: Vec<_> = cfg.discrepancy.iter().map(|d| d.id.clone()).collect();
        assert_eq!(b.reproduced, flagged, "{name}");
    }
}

/// Set `UPDATE_GOLDEN=1` to rewrite the file after an intended change.
#[test]
fn corpus_report_matches_golden_file() {
    let text = verify_corpus(&[]).unwrap().to_toml().unwrap();
    let path = golden_path();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, &text).unwrap();
    }
    let golden = fs::read_to_string(&path).expect("golden file; run once with UPDATE_GOLDEN=1");
    assert!(golden == text, "corpus report drifted from {}", path.display());
}
