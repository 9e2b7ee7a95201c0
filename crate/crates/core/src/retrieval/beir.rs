//! BEIR-style benchmark files: corpus and queries as JSONL, qrels as TSV with a
//! `query-id\tcorpus-id\tscore` header.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{ingest_passages, PassageStore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    #[serde(rename = "_id")]
    pub id: String,
    pub text: String,
}

/// Graded judgments: query id → (corpus id → score).
pub type Qrels = BTreeMap<String, BTreeMap<String, i64>>;

/// Corpus ids with a positive score, per query.
pub fn relevant_sets(qrels: &Qrels) -> BTreeMap<String, BTreeSet<String>> {
    qrels
        .iter()
        .map(|(q, docs)| {
            let rel = docs
                .iter()
                .filter(|(_, &s)| s > 0)
                .map(|(d, _)| d.clone())
                .collect();
            (q.clone(), rel)
        })
        .collect()
}

fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufReader::new(f))
}

pub fn read_queries(reader: impl BufRead) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let q: Query = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        if !seen.insert(q.id.clone()) {
            return Err(Error::DuplicateId(q.id));
        }
        out.push(q);
    }
    Ok(out)
}

pub fn write_queries(queries: &[Query], mut w: impl Write) -> std::io::Result<()> {
    for q in queries {
        serde_json::to_writer(&mut w, q)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_qrels(reader: impl BufRead) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if line_no == 1 && cols.first() == Some(&"query-id") {
            continue;
        }
        if cols.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 tab-separated columns, found {}", cols.len()),
            });
        }
        let score: i64 = cols[2].trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("invalid score {:?}", cols[2]),
        })?;
        qrels
            .entry(cols[0].to_string())
            .or_default()
            .insert(cols[1].to_string(), score);
    }
    Ok(qrels)
}

pub fn write_qrels(qrels: &Qrels, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "query-id\tcorpus-id\tscore")?;
    for (q, docs) in qrels {
        for (d, s) in docs {
            writeln!(w, "{q}\t{d}\t{s}")?;
        }
    }
    Ok(())
}

/// A loaded benchmark: corpus, queries and judgments.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalBundle {
    pub corpus: PassageStore,
    pub queries: Vec<Query>,
    pub qrels: Qrels,
}

impl EvalBundle {
    /// Every qrels query must exist among the queries and every judged document
    /// in the corpus.
    pub fn validate(&self) -> Result<()> {
        let query_ids: HashSet<&str> = self.queries.iter().map(|q| q.id.as_str()).collect();
        for (q, docs) in &self.qrels {
            if !query_ids.contains(q.as_str()) {
                return Err(Error::DanglingQrels { kind: "query", id: q.clone() });
            }
            for d in docs.keys() {
                if self.corpus.get(d).is_none() {
                    return Err(Error::DanglingQrels { kind: "corpus", id: d.clone() });
                }
            }
        }
        Ok(())
    }

    pub fn load(corpus: &Path, queries: &Path, qrels: &Path) -> Result<Self> {
        let bundle = EvalBundle {
            corpus: ingest_passages(open(corpus)?)?,
            queries: read_queries(open(queries)?)?,
            qrels: read_qrels(open(qrels)?)?,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    /// Writes `corpus.jsonl`, `queries.jsonl` and `qrels.tsv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.corpus.save_jsonl(dir.join("corpus.jsonl"))?;
        let write = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| -> Result<()> {
            let path = dir.join(name);
            let mut buf = Vec::new();
            f(&mut buf).map_err(|e| Error::io(&path, e))?;
            std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))
        };
        write("queries.jsonl", &|b| write_queries(&self.queries, b))?;
        write("qrels.tsv", &|b| write_qrels(&self.qrels, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Passage;

    #[test]
    fn qrels_round_trip_with_header() {
        let text = "query-id\tcorpus-id\tscore\nq1\td1\t1\nq1\td2\t0\nq2\td3\t2\n";
        let qrels = read_qrels(text.as_bytes()).unwrap();
        assert_eq!(qrels["q1"]["d2"], 0);
        let mut out = Vec::new();
        write_qrels(&qrels, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
        let rel = relevant_sets(&qrels);
        assert_eq!(rel["q1"].len(), 1);
    }

    #[test]
    fn bad_qrels_rows() {
        assert!(matches!(read_qrels("q1\td1\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_qrels("q1\td1\tx\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn dangling_ids_detected() {
        let corpus = PassageStore::from_passages([Passage::new("d1", "x")]).unwrap();
        let queries = vec![Query { id: "q1".into(), text: "y".into() }];
        let mut qrels = Qrels::new();
        qrels.entry("q1".into()).or_default().insert("d9".into(), 1);
        let b = EvalBundle { corpus, queries, qrels };
        assert!(matches!(b.validate(), Err(Error::DanglingQrels { kind: "corpus", .. })));
    }
}
