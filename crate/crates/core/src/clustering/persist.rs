use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClusterAssignment, ClusterParams, Clustering, ClusteringError};

#[derive(Serialize, Deserialize)]
struct Header {
    gamma: usize,
    epsilon: f64,
    params: ClusterParams,
}

fn persist_err(path: &Path, msg: impl ToString) -> ClusteringError {
    ClusteringError::Persist {
        path: path.display().to_string(),
        msg: msg.to_string(),
    }
}

/// Writes a header line followed by one assignment per line.
pub fn save_clustering(c: &Clustering, path: &Path) -> Result<(), ClusteringError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| persist_err(path, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| persist_err(path, e))?;
    let mut w = BufWriter::new(file);
    let header = Header {
        gamma: c.gamma,
        epsilon: c.epsilon,
        params: c.params.clone(),
    };
    let mut write = |line: String| writeln!(w, "{line}").map_err(|e| persist_err(path, e));
    write(serde_json::to_string(&header).unwrap())?;
    for a in &c.assignments {
        write(serde_json::to_string(a).unwrap())?;
    }
    w.flush().map_err(|e| persist_err(path, e))
}

pub fn load_clustering(path: &Path) -> Result<Clustering, ClusteringError> {
    let file = std::fs::File::open(path).map_err(|e| persist_err(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| persist_err(path, "missing header"))?
        .map_err(|e| persist_err(path, e))?;
    let header: Header = serde_json::from_str(&first).map_err(|e| persist_err(path, e))?;
    let mut assignments = Vec::new();
    for line in lines {
        let line = line.map_err(|e| persist_err(path, e))?;
        if !line.trim().is_empty() {
            let a: ClusterAssignment = serde_json::from_str(&line).map_err(|e| persist_err(path, e))?;
            assignments.push(a);
        }
    }
    if assignments.iter().any(|a| a.cluster_code > header.gamma) {
        return Err(persist_err(path, "cluster code above gamma"));
    }
    Ok(Clustering {
        assignments,
        gamma: header.gamma,
        epsilon: header.epsilon,
        params: header.params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let c = Clustering {
            assignments: vec![
                ClusterAssignment { sentence_id: "a".into(), cluster_code: 1 },
                ClusterAssignment { sentence_id: "b".into(), cluster_code: 0 },
            ],
            gamma: 1,
            epsilon: 0.1 + 0.2,
            params: ClusterParams::default(),
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        save_clustering(&c, &p).unwrap();
        assert_eq!(load_clustering(&p).unwrap(), c);
    }
}
