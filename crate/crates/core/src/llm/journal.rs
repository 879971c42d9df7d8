use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use super::{ChainOutcome, LlmError};

/// Append-only record of finished chains, keyed by case id.
///
/// Reopening a journal loads the outcomes already written so a resumed run
/// skips them. A torn final line from an interrupted write is ignored.
pub struct Journal {
    path: PathBuf,
    file: Mutex<File>,
    done: Mutex<HashMap<String, ChainOutcome>>,
}

impl Journal {
    pub fn open(path: &Path) -> Result<Self, LlmError> {
        let err = |source| LlmError::Journal {
            path: path.display().to_string(),
            source,
        };
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(err)?;
        }
        let mut done = HashMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(path).map_err(err)?).lines() {
                let line = line.map_err(err)?;
                match serde_json::from_str::<ChainOutcome>(&line) {
                    Ok(o) => {
                        done.insert(o.case_id.clone(), o);
                    }
                    Err(e) if !line.trim().is_empty() => {
                        log::warn!("{}: skipping unreadable journal line: {e}", path.display())
                    }
                    Err(_) => {}
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(err)?;
        Ok(Journal {
            path: path.to_path_buf(),
            file: Mutex::new(file),
            done: Mutex::new(done),
        })
    }

    pub fn get(&self, case_id: &str) -> Option<ChainOutcome> {
        self.done.lock().unwrap().get(case_id).cloned()
    }

    pub fn contains(&self, case_id: &str) -> bool {
        self.done.lock().unwrap().contains_key(case_id)
    }

    pub fn len(&self) -> usize {
        self.done.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes one outcome as a single line.
    pub fn append(&self, outcome: &ChainOutcome) -> Result<(), LlmError> {
        let mut line = serde_json::to_string(outcome).expect("outcomes serialize");
        line.push('\n');
        {
            let mut file = self.file.lock().unwrap();
            file.write_all(line.as_bytes())
                .and_then(|_| file.flush())
                .map_err(|source| LlmError::Journal {
                    path: self.path.display().to_string(),
                    source,
                })?;
        }
        self.done
            .lock()
            .unwrap()
            .insert(outcome.case_id.clone(), outcome.clone());
        Ok(())
    }

    pub fn outcomes(&self) -> Vec<ChainOutcome> {
        let mut all: Vec<ChainOutcome> = self.done.lock().unwrap().values().cloned().collect();
        all.sort_by(|a, b| a.case_id.cmp(&b.case_id));
        all
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ChainStatus;

    fn outcome(id: &str) -> ChainOutcome {
        ChainOutcome {
            case_id: id.into(),
            status: ChainStatus::Ok,
            p_points: vec!["p".into()],
            d_points: vec!["d".into()],
            disputes: vec!["x".into()],
            attempts: 1,
            provider_calls: 3,
        }
    }

    #[test]
    fn reopen_restores_outcomes_and_ignores_torn_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        {
            let j = Journal::open(&path).unwrap();
            j.append(&outcome("a")).unwrap();
            j.append(&outcome("b")).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"case_id\":\"c\",\"sta").unwrap();
        drop(f);
        let j = Journal::open(&path).unwrap();
        assert_eq!(j.len(), 2);
        assert!(j.contains("a") && !j.contains("c"));
        assert_eq!(j.get("b").unwrap(), outcome("b"));
    }
}
