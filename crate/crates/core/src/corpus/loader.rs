use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use super::{parse_document, CorpusError, JudgmentDoc};

/// Parsed documents plus the records that failed, with their origin.
#[derive(Debug, Default)]
pub struct LoadedCorpus {
    pub docs: Vec<JudgmentDoc>,
    pub failures: Vec<(String, CorpusError)>,
}

fn collect_files(path: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        entries.sort();
        for entry in entries {
            collect_files(&entry, out)?;
        }
    } else {
        out.push(path.to_path_buf());
    }
    Ok(())
}

fn is_archive(path: &Path) -> bool {
    let name = path.to_string_lossy();
    name.ends_with(".tar.gz") || name.ends_with(".tgz")
}

/// Loads `*.json` judgment files from files, directories (recursively), and
/// gzipped tar archives. Later duplicates of an id are reported as failures.
pub fn load_corpus(paths: &[PathBuf]) -> std::io::Result<LoadedCorpus> {
    let mut files = Vec::new();
    for p in paths {
        collect_files(p, &mut files)?;
    }
    let mut corpus = LoadedCorpus::default();
    let mut seen = HashSet::new();
    let mut accept = |origin: String, bytes: &[u8], corpus: &mut LoadedCorpus| match parse_document(bytes) {
        Ok(doc) if !seen.insert(doc.jid.clone()) => corpus
            .failures
            .push((origin, CorpusError::MalformedRecord(format!("duplicate JID {}", doc.jid)))),
        Ok(doc) => corpus.docs.push(doc),
        Err(e) => corpus.failures.push((origin, e)),
    };

    for file in files {
        if is_archive(&file) {
            let mut archive = tar::Archive::new(GzDecoder::new(File::open(&file)?));
            for entry in archive.entries()? {
                let mut entry = entry?;
                let name = entry.path()?.to_string_lossy().into_owned();
                if !name.ends_with(".json") {
                    continue;
                }
                let mut bytes = Vec::new();
                entry.read_to_end(&mut bytes)?;
                accept(format!("{}!{name}", file.display()), &bytes, &mut corpus);
            }
        } else if file.extension().is_some_and(|e| e == "json") {
            let bytes = std::fs::read(&file)?;
            accept(file.display().to_string(), &bytes, &mut corpus);
        }
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn record(jid: &str) -> String {
        json!({"JID": jid, "JYEAR": "98", "JCASE": "勞訴", "JNO": "1", "JDATE": "20100409", "JTITLE": "t", "JFULL": "本文"}).to_string()
    }

    #[test]
    fn loads_directories_and_archives() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.json"), record("TPDV,98,勞訴,1,20100409,1")).unwrap();
        std::fs::write(dir.path().join("b.json"), "{}").unwrap();
        std::fs::write(dir.path().join("notes.txt"), "skip").unwrap();

        let tar_path = dir.path().join("batch.tar.gz");
        {
            let enc = flate2::write::GzEncoder::new(File::create(&tar_path).unwrap(), flate2::Compression::default());
            let mut builder = tar::Builder::new(enc);
            for (name, body) in [("c.json", record("KSDV,98,勞訴,2,20100409,1")), ("dup.json", record("TPDV,98,勞訴,1,20100409,1"))] {
                let mut header = tar::Header::new_gnu();
                header.set_size(body.len() as u64);
                header.set_mode(0o644);
                header.set_cksum();
                builder.append_data(&mut header, name, body.as_bytes()).unwrap();
            }
            builder.into_inner().unwrap().finish().unwrap();
        }

        let corpus = load_corpus(&[dir.path().to_path_buf()]).unwrap();
        assert_eq!(corpus.docs.len(), 2);
        assert_eq!(corpus.failures.len(), 2);
        assert!(matches!(corpus.failures.iter().find(|(o, _)| o.ends_with("b.json")).unwrap().1, CorpusError::MissingField(_)));
    }
}
