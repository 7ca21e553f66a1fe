//! Plain-text dataset directories:
//!
//! ```text
//! meta.json            {"name": str, "n": int, "d0": int, "p": int}
//! X.csv                n lines of d0 comma-separated floats
//! y.txt                n lines, one integer label each
//! edges.txt            one "u v" pair per line, 0-indexed
//! splits/split_<i>.json {"train": [..], "val": [..], "test": [..]}
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Graph, GraphError, Split, SplitSet};
use crate::numkit::{SparseMatrix, Tensor};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub n: usize,
    pub d0: usize,
    pub p: usize,
}

fn read(path: &Path) -> Result<String, GraphError> {
    if !path.exists() {
        return Err(GraphError::MissingFile(path.display().to_string()));
    }
    fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), GraphError> {
    fs::write(path, contents).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_err(file: &str, line: usize, msg: impl ToString) -> GraphError {
    GraphError::Parse {
        file: file.to_string(),
        line,
        msg: msg.to_string(),
    }
}

/// Loads a dataset directory. Edges are symmetrized and deduplicated;
/// splits `split_0.json, split_1.json, ...` are read until the first gap.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<(Graph, SplitSet), GraphError> {
    let dir = dir.as_ref();
    let meta: DatasetMeta = serde_json::from_str(&read(&dir.join("meta.json"))?)
        .map_err(|e| parse_err("meta.json", e.line(), e))?;

    let mut features = Vec::with_capacity(meta.n * meta.d0);
    let x_text = read(&dir.join("X.csv"))?;
    let mut rows = 0;
    for (i, line) in x_text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = features.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|e| parse_err("X.csv", i + 1, e))?;
            features.push(v);
        }
        if features.len() - before != meta.d0 {
            return Err(GraphError::LengthMismatch {
                what: "feature columns",
                expected: meta.d0,
                found: features.len() - before,
            });
        }
        rows += 1;
    }
    if rows != meta.n {
        return Err(GraphError::LengthMismatch {
            what: "feature rows",
            expected: meta.n,
            found: rows,
        });
    }

    let labels = read(&dir.join("y.txt"))?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.trim().parse::<usize>().map_err(|e| parse_err("y.txt", i + 1, e)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut edges = Vec::new();
    for (i, line) in read(&dir.join("edges.txt"))?.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let (Some(u), Some(v)) = (parts.next(), parts.next()) else {
            if line.trim().is_empty() {
                continue;
            }
            return Err(parse_err("edges.txt", i + 1, "expected \"u v\""));
        };
        let u: usize = u.parse().map_err(|e| parse_err("edges.txt", i + 1, e))?;
        let v: usize = v.parse().map_err(|e| parse_err("edges.txt", i + 1, e))?;
        for idx in [u, v] {
            if idx >= meta.n {
                return Err(GraphError::IndexOutOfRange { index: idx, n: meta.n });
            }
        }
        edges.push((u, v));
    }

    let adjacency = SparseMatrix::from_undirected_edges(meta.n, &edges)?;
    let features = Tensor::from_vec(meta.n, meta.d0, features)?;
    let graph = Graph::new(meta.name.clone(), features, adjacency, labels, meta.p)?;

    let mut splits = Vec::new();
    let split_dir = dir.join("splits");
    loop {
        let path = split_dir.join(format!("split_{}.json", splits.len()));
        if !path.exists() {
            break;
        }
        let split: Split = serde_json::from_str(&read(&path)?).map_err(|e| {
            parse_err(&format!("splits/split_{}.json", splits.len()), e.line(), e)
        })?;
        split.validate(meta.n)?;
        splits.push(split);
    }
    Ok((graph, SplitSet { splits }))
}

/// Writes a dataset directory readable by [`load_dataset`]. Output is a
/// deterministic function of the inputs.
pub fn write_dataset(graph: &Graph, splits: &SplitSet, dir: impl AsRef<Path>) -> Result<PathBuf, GraphError> {
    let dir = dir.as_ref();
    let split_dir = dir.join("splits");
    fs::create_dir_all(&split_dir).map_err(|source| GraphError::Io {
        path: split_dir.display().to_string(),
        source,
    })?;
    let meta = DatasetMeta {
        name: graph.name.clone(),
        n: graph.num_nodes(),
        d0: graph.feature_dim(),
        p: graph.num_classes,
    };
    write(&dir.join("meta.json"), &(serde_json::to_string(&meta).expect("meta serializes") + "\n"))?;

    let mut x = String::new();
    for r in 0..graph.num_nodes() {
        let row = graph.features.row(r);
        for (c, v) in row.iter().enumerate() {
            if c > 0 {
                x.push(',');
            }
            write!(x, "{v}").expect("string write");
        }
        x.push('\n');
    }
    write(&dir.join("X.csv"), &x)?;

    let mut y = String::new();
    for l in &graph.labels {
        writeln!(y, "{l}").expect("string write");
    }
    write(&dir.join("y.txt"), &y)?;

    let mut e = String::new();
    for (u, v, _) in graph.adjacency.iter().filter(|&(u, v, _)| u <= v) {
        writeln!(e, "{u} {v}").expect("string write");
    }
    write(&dir.join("edges.txt"), &e)?;

    for (i, s) in splits.splits.iter().enumerate() {
        let json = serde_json::to_string(s).expect("split serializes") + "\n";
        write(&split_dir.join(format!("split_{i}.json")), &json)?;
    }
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_dir() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        fs::write(p.join("meta.json"), r#"{"name":"toy","n":2,"d0":2,"p":2}"#).unwrap();
        fs::write(p.join("X.csv"), "1,0\n0,1\n").unwrap();
        fs::write(p.join("y.txt"), "0\n1\n").unwrap();
        fs::write(p.join("edges.txt"), "0 1\n").unwrap();
        dir
    }

    #[test]
    fn toy_directory_symmetrizes() {
        let dir = toy_dir();
        let (g, splits) = load_dataset(dir.path()).unwrap();
        assert_eq!(g.adjacency.get(0, 1), 1.0);
        assert_eq!(g.adjacency.get(1, 0), 1.0);
        assert!(splits.is_empty());
    }

    #[test]
    fn overlapping_masks_rejected() {
        let dir = toy_dir();
        fs::create_dir(dir.path().join("splits")).unwrap();
        fs::write(
            dir.path().join("splits/split_0.json"),
            r#"{"train":[0],"val":[0],"test":[1]}"#,
        )
        .unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("split masks overlap"), "{err}");
    }

    #[test]
    fn missing_file_and_bad_index() {
        let dir = toy_dir();
        fs::remove_file(dir.path().join("y.txt")).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(GraphError::MissingFile(_))));

        let dir = toy_dir();
        fs::write(dir.path().join("edges.txt"), "0 5\n").unwrap();
        assert!(matches!(
            load_dataset(dir.path()),
            Err(GraphError::IndexOutOfRange { index: 5, n: 2 })
        ));
    }

    #[test]
    fn write_then_load_round_trips() {
        let dir = toy_dir();
        let (g, _) = load_dataset(dir.path()).unwrap();
        let splits = SplitSet {
            splits: vec![Split {
                train: vec![0],
                val: vec![1],
                test: vec![],
            }],
        };
        let out = tempfile::tempdir().unwrap();
        write_dataset(&g, &splits, out.path()).unwrap();
        let (g2, s2) = load_dataset(out.path()).unwrap();
        assert_eq!(g2.features, g.features);
        assert_eq!(g2.adjacency, g.adjacency);
        assert_eq!(s2, splits);
    }
}
