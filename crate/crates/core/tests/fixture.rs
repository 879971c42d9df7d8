use std::path::{Path, PathBuf};

use casesim::fixture::{generate, FixtureSpec};

fn files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn shipped_fixture_matches_the_generator() {
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk");
    let fresh = tempfile::tempdir().unwrap();
    generate(&FixtureSpec::default()).write(fresh.path()).unwrap();
    let expected = files(fresh.path());
    let found: Vec<PathBuf> = files(&shipped).into_iter().filter(|p| !p.starts_with("out")).collect();
    assert_eq!(found, expected);
    for rel in &expected {
        let a = std::fs::read(shipped.join(rel)).unwrap();
        let b = std::fs::read(fresh.path().join(rel)).unwrap();
        assert!(a == b, "{} differs; rerun the make_fixture example", rel.display());
    }
}

#[test]
fn fixture_has_sixty_documents() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk/corpus");
    assert_eq!(std::fs::read_dir(corpus).unwrap().count(), 60);
}
