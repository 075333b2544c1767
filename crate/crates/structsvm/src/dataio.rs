//! Plain-text dataset formats.
//!
//! Sequences: a `#dim D S` pragma (feature-hash dimension and state count),
//! then blank-line-separated blocks of `token<TAB>state` lines. Tokens hash
//! into [0, D) with FNV-1a.
//!
//! Multi-label / hierarchical: a `#dim D L` pragma, then one line per
//! instance: `l1,l2,... idx:val idx:val ...` with `-` for the empty label
//! set. Hierarchical files carry the leaf node id as the single label.
//!
//! Hierarchy: one `parent child` edge per line, `#` comments; leaves are
//! inferred.

use crate::hierarchy::HierarchySpec;
use crate::model::{Dataset, HierExample, MultiLabelExample, SeqExample, SparseVec};
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

fn parse_err(path: &Path, message: impl Into<String>) -> DataError {
    DataError::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// FNV-1a, the stable token hash of the sequence format.
pub fn hash_token(token: &str, dim: usize) -> usize {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in token.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    (h % dim as u64) as usize
}

pub fn write_sequences(
    path: &Path,
    dim: usize,
    num_states: usize,
    examples: &[(Vec<String>, Vec<usize>)],
) -> Result<(), DataError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "#dim {dim} {num_states}")?;
    for (tokens, states) in examples {
        for (tok, s) in tokens.iter().zip(states) {
            writeln!(f, "{tok}\t{s}")?;
        }
        writeln!(f)?;
    }
    Ok(())
}

pub fn read_sequences(path: &Path) -> Result<Dataset, DataError> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut lines = f.lines();
    let pragma = lines
        .next()
        .ok_or_else(|| parse_err(path, "empty file"))??;
    let parts: Vec<&str> = pragma.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != "#dim" {
        return Err(parse_err(path, "expected `#dim D S` pragma"));
    }
    let dim: usize = parts[1]
        .parse()
        .map_err(|_| parse_err(path, "bad dimension"))?;
    let num_states: usize = parts[2]
        .parse()
        .map_err(|_| parse_err(path, "bad state count"))?;
    let mut examples = Vec::new();
    let mut features: Vec<SparseVec> = Vec::new();
    let mut states: Vec<usize> = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            if !states.is_empty() {
                examples.push(SeqExample {
                    features: std::mem::take(&mut features),
                    states: std::mem::take(&mut states),
                });
            }
            continue;
        }
        let (tok, st) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(path, format!("expected token<TAB>state: {line}")))?;
        let s: usize = st
            .trim()
            .parse()
            .map_err(|_| parse_err(path, format!("bad state: {st}")))?;
        if s >= num_states {
            return Err(parse_err(path, format!("state {s} out of range")));
        }
        features.push(vec![(hash_token(tok, dim), 1.0)]);
        states.push(s);
    }
    if !states.is_empty() {
        examples.push(SeqExample { features, states });
    }
    Ok(Dataset::Chain {
        dim,
        num_states,
        examples,
    })
}

fn write_sparse(f: &mut impl Write, x: &SparseVec) -> std::io::Result<()> {
    for &(i, v) in x {
        write!(f, " {i}:{v:.16e}")?;
    }
    Ok(())
}

fn parse_sparse(path: &Path, fields: &[&str], dim: usize) -> Result<SparseVec, DataError> {
    let mut x = Vec::with_capacity(fields.len());
    for field in fields {
        let (i, v) = field
            .split_once(':')
            .ok_or_else(|| parse_err(path, format!("expected idx:val, got {field}")))?;
        let i: usize = i
            .parse()
            .map_err(|_| parse_err(path, format!("bad feature index {i}")))?;
        if i >= dim {
            return Err(parse_err(path, format!("feature index {i} out of range")));
        }
        let v: f64 = v
            .parse()
            .map_err(|_| parse_err(path, format!("bad feature value {v}")))?;
        x.push((i, v));
    }
    Ok(x)
}

pub fn write_multilabel(
    path: &Path,
    dim: usize,
    num_labels: usize,
    examples: &[MultiLabelExample],
) -> Result<(), DataError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "#dim {dim} {num_labels}")?;
    for ex in examples {
        if ex.labels.is_empty() {
            write!(f, "-")?;
        } else {
            let labels: Vec<String> = ex.labels.iter().map(|l| l.to_string()).collect();
            write!(f, "{}", labels.join(","))?;
        }
        write_sparse(&mut f, &ex.features)?;
        writeln!(f)?;
    }
    Ok(())
}

pub fn read_multilabel(path: &Path) -> Result<Dataset, DataError> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut lines = f.lines();
    let pragma = lines
        .next()
        .ok_or_else(|| parse_err(path, "empty file"))??;
    let parts: Vec<&str> = pragma.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != "#dim" {
        return Err(parse_err(path, "expected `#dim D L` pragma"));
    }
    let dim: usize = parts[1]
        .parse()
        .map_err(|_| parse_err(path, "bad dimension"))?;
    let num_labels: usize = parts[2]
        .parse()
        .map_err(|_| parse_err(path, "bad label count"))?;
    let mut examples = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let label_field = fields
            .next()
            .ok_or_else(|| parse_err(path, "missing label field"))?;
        let labels = if label_field == "-" {
            Default::default()
        } else {
            label_field
                .split(',')
                .map(|l| {
                    l.parse::<u32>()
                        .map_err(|_| parse_err(path, format!("bad label {l}")))
                })
                .collect::<Result<_, _>>()?
        };
        let rest: Vec<&str> = fields.collect();
        let features = parse_sparse(path, &rest, dim)?;
        examples.push(MultiLabelExample { features, labels });
    }
    Ok(Dataset::MultiLabel {
        dim,
        num_labels,
        examples,
    })
}

pub fn write_hier_examples(
    path: &Path,
    dim: usize,
    num_nodes: usize,
    examples: &[HierExample],
) -> Result<(), DataError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "#dim {dim} {num_nodes}")?;
    for ex in examples {
        write!(f, "{}", ex.leaf)?;
        write_sparse(&mut f, &ex.features)?;
        writeln!(f)?;
    }
    Ok(())
}

pub fn read_hier_examples(path: &Path, spec: &HierarchySpec) -> Result<Dataset, DataError> {
    let ds = read_multilabel(path)?;
    let (dim, examples) = match ds {
        Dataset::MultiLabel { dim, examples, .. } => (dim, examples),
        _ => unreachable!(),
    };
    let examples = examples
        .into_iter()
        .map(|ex| {
            if ex.labels.len() != 1 {
                return Err(parse_err(path, "hierarchical instance needs one leaf"));
            }
            let leaf = *ex.labels.iter().next().unwrap() as usize;
            if !spec.leaves().contains(&leaf) {
                return Err(parse_err(path, format!("node {leaf} is not a leaf")));
            }
            Ok(HierExample {
                features: ex.features,
                leaf,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset::Hier {
        dim,
        spec: spec.clone(),
        examples,
    })
}

pub fn write_hierarchy(path: &Path, spec: &HierarchySpec) -> Result<(), DataError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# {} nodes, one `parent child` edge per line", spec.num_nodes())?;
    for n in 0..spec.num_nodes() {
        for &p in spec.parents(n) {
            writeln!(f, "{p} {n}")?;
        }
    }
    Ok(())
}

pub fn read_hierarchy(path: &Path) -> Result<HierarchySpec, DataError> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut edges = Vec::new();
    let mut max_node = 0usize;
    for line in f.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let p: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(path, format!("bad edge line: {line}")))?;
        let c: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(path, format!("bad edge line: {line}")))?;
        max_node = max_node.max(p).max(c);
        edges.push((p, c));
    }
    if edges.is_empty() {
        return Err(parse_err(path, "no edges"));
    }
    HierarchySpec::from_edges(max_node + 1, &edges)
        .map_err(|e| parse_err(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("structsvm-dataio-test");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn sequence_roundtrip() {
        let path = tmp("seq.txt");
        let examples = vec![
            (
                vec!["the".into(), "cat".into()],
                vec![0usize, 1],
            ),
            (vec!["dog".into()], vec![1]),
        ];
        write_sequences(&path, 16, 2, &examples).unwrap();
        let ds = read_sequences(&path).unwrap();
        match ds {
            Dataset::Chain {
                dim,
                num_states,
                examples,
            } => {
                assert_eq!((dim, num_states), (16, 2));
                assert_eq!(examples.len(), 2);
                assert_eq!(examples[0].states, vec![0, 1]);
                assert_eq!(examples[0].features[0][0].0, hash_token("the", 16));
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn multilabel_roundtrip() {
        let path = tmp("ml.txt");
        let examples = vec![
            MultiLabelExample {
                features: vec![(0, 0.5), (3, -1.25)],
                labels: [1u32, 3].into(),
            },
            MultiLabelExample {
                features: vec![(2, 1.0)],
                labels: Default::default(),
            },
        ];
        write_multilabel(&path, 5, 4, &examples).unwrap();
        let ds = read_multilabel(&path).unwrap();
        match ds {
            Dataset::MultiLabel {
                dim,
                num_labels,
                examples: read,
            } => {
                assert_eq!((dim, num_labels), (5, 4));
                assert_eq!(read.len(), 2);
                assert_eq!(read[0].labels, [1u32, 3].into());
                assert!(read[1].labels.is_empty());
                assert_eq!(read[0].features, examples[0].features);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn hierarchy_roundtrip() {
        let path = tmp("hier.txt");
        let spec =
            HierarchySpec::from_parent_lists(vec![vec![], vec![0], vec![0], vec![1]]).unwrap();
        write_hierarchy(&path, &spec).unwrap();
        let read = read_hierarchy(&path).unwrap();
        assert_eq!(read.num_nodes(), 4);
        assert_eq!(read.leaves(), spec.leaves());
        assert!(read.is_tree());
    }
}
