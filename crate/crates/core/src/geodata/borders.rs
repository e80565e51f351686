use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{normalize_code, CountryRecord, GeoError, Result};
use crate::rng::seeded_rng;

/// Undirected, irreflexive country adjacency.
///
/// Edges are stored as canonically ordered pairs `(a, b)` with `a < b`, so
/// symmetry holds by construction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BorderGraph {
    nodes: BTreeSet<String>,
    edges: BTreeSet<(String, String)>,
}

fn canonical(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl BorderGraph {
    pub fn new<I, S>(nodes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        BorderGraph {
            nodes: nodes.into_iter().map(Into::into).collect(),
            edges: BTreeSet::new(),
        }
    }

    /// Adds `{a, b}`. Returns `false` when the edge already existed.
    pub fn add_edge(&mut self, a: &str, b: &str) -> Result<bool> {
        if a == b {
            return Err(GeoError::Validation(format!("self-border {a}-{b}")));
        }
        for code in [a, b] {
            if !self.nodes.contains(code) {
                return Err(GeoError::Validation(format!("unknown country code {code}")));
            }
        }
        Ok(self.edges.insert(canonical(a, b)))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains_node(&self, code: &str) -> bool {
        self.nodes.contains(code)
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        a != b && self.edges.contains(&canonical(a, b))
    }

    pub fn degree(&self, code: &str) -> usize {
        self.edges.iter().filter(|(a, b)| a == code || b == code).count()
    }
}

/// Result of reading an adjacency file.
#[derive(Debug, Clone)]
pub struct BorderIngest {
    pub graph: BorderGraph,
    /// Lines skipped because a code was not among the loaded countries.
    pub skipped_unknown: usize,
}

/// Reads a whitespace-separated adjacency list restricted to `countries`.
///
/// `#` starts a comment. Unknown codes are skipped with a warning; a
/// self-pair is a validation error.
pub fn load_borders(path: impl AsRef<Path>, countries: &[CountryRecord]) -> Result<BorderIngest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GeoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut graph = BorderGraph::new(countries.iter().map(|c| c.code.clone()));
    let mut skipped_unknown = 0;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(GeoError::Ingest {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("expected two country codes, found {}", fields.len()),
            });
        }
        let a = normalize_code(fields[0]).map_err(|e| GeoError::Ingest {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        let b = normalize_code(fields[1]).map_err(|e| GeoError::Ingest {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        if a == b {
            return Err(GeoError::Validation(format!(
                "{}, line {line_no}: self-border {a} {b}",
                path.display()
            )));
        }
        if !graph.contains_node(&a) || !graph.contains_node(&b) {
            log::warn!(
                "{}, line {line_no}: skipping {a}-{b}, code not among loaded countries",
                path.display()
            );
            skipped_unknown += 1;
            continue;
        }
        graph.add_edge(&a, &b)?;
    }
    Ok(BorderIngest {
        graph,
        skipped_unknown,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairStrategy {
    /// As many negatives as positives, sampled without replacement.
    #[default]
    Balanced,
    /// Every non-adjacent pair.
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub a: String,
    pub b: String,
    pub adjacent: bool,
}

#[derive(Debug, Clone)]
pub struct BorderPairs {
    pub pairs: Vec<LabeledPair>,
    /// Negatives missing under `Balanced` because fewer non-adjacent pairs
    /// exist than edges.
    pub shortfall: usize,
}

impl BorderPairs {
    pub fn positives(&self) -> usize {
        self.pairs.iter().filter(|p| p.adjacent).count()
    }

    pub fn negatives(&self) -> usize {
        self.pairs.len() - self.positives()
    }
}

/// Builds the labeled pair set for border classification.
///
/// Output order: all positives in canonical order, then the chosen negatives
/// in canonical order. Each unordered pair appears once with `a < b`.
pub fn make_border_pairs(graph: &BorderGraph, strategy: PairStrategy, seed: u64) -> Result<BorderPairs> {
    if graph.edge_count() == 0 {
        return Err(GeoError::NoPositivePairs);
    }
    let mut pairs: Vec<LabeledPair> = graph
        .edges()
        .map(|(a, b)| LabeledPair {
            a: a.to_string(),
            b: b.to_string(),
            adjacent: true,
        })
        .collect();

    let nodes: Vec<&str> = graph.nodes().collect();
    let mut negatives = Vec::new();
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            if !graph.has_edge(a, b) {
                negatives.push((*a, *b));
            }
        }
    }

    let mut shortfall = 0;
    let chosen: Vec<(&str, &str)> = match strategy {
        PairStrategy::All => negatives,
        PairStrategy::Balanced => {
            let want = graph.edge_count();
            if negatives.len() < want {
                shortfall = want - negatives.len();
                log::warn!(
                    "only {} non-adjacent pairs for {} positives; class balance not achievable",
                    negatives.len(),
                    want
                );
                negatives
            } else {
                let mut rng = seeded_rng(seed);
                let mut picked = index::sample(&mut rng, negatives.len(), want).into_vec();
                picked.sort_unstable();
                picked.into_iter().map(|i| negatives[i]).collect()
            }
        }
    };
    pairs.extend(chosen.into_iter().map(|(a, b)| LabeledPair {
        a: a.to_string(),
        b: b.to_string(),
        adjacent: false,
    }));
    Ok(BorderPairs { pairs, shortfall })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::GeoPoint;
    use std::io::Write;

    fn country(code: &str) -> CountryRecord {
        CountryRecord {
            name: code.to_string(),
            code: code.to_string(),
            centroid: GeoPoint::new(0.0, 0.0).unwrap(),
            population_millions: 1.0,
        }
    }

    fn borders_file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn unordered_pairs_deduplicate() {
        let countries = [country("FR"), country("DE"), country("IS")];
        let f = borders_file("# comment\nFR DE\nDE FR   # again\n\n");
        let ingest = load_borders(f.path(), &countries).unwrap();
        assert_eq!(ingest.graph.edge_count(), 1);
        assert!(ingest.graph.has_edge("FR", "DE"));
        assert!(ingest.graph.has_edge("DE", "FR"));
        // island: present, no edges
        assert!(ingest.graph.contains_node("IS"));
        assert_eq!(ingest.graph.degree("IS"), 0);
    }

    #[test]
    fn self_pair_is_error() {
        let countries = [country("IS")];
        let f = borders_file("IS IS\n");
        assert!(matches!(load_borders(f.path(), &countries), Err(GeoError::Validation(_))));
    }

    #[test]
    fn unknown_codes_skipped_and_counted() {
        let countries = [country("FR"), country("ES")];
        let f = borders_file("FR ES\nFR AD\nAD ES\n");
        let ingest = load_borders(f.path(), &countries).unwrap();
        assert_eq!(ingest.graph.edge_count(), 1);
        assert_eq!(ingest.skipped_unknown, 2);
    }

    #[test]
    fn malformed_line_is_ingest_error() {
        let countries = [country("FR"), country("ES")];
        let f = borders_file("FR ES AD\n");
        assert!(matches!(
            load_borders(f.path(), &countries),
            Err(GeoError::Ingest { line: 1, .. })
        ));
    }

    fn chain() -> BorderGraph {
        let mut g = BorderGraph::new(["A", "B", "C"]);
        g.add_edge("A", "B").unwrap();
        g.add_edge("C", "B").unwrap();
        g
    }

    #[test]
    fn all_strategy_enumerates_every_pair() {
        let pairs = make_border_pairs(&chain(), PairStrategy::All, 0).unwrap();
        let got: Vec<(&str, &str, bool)> = pairs
            .pairs
            .iter()
            .map(|p| (p.a.as_str(), p.b.as_str(), p.adjacent))
            .collect();
        assert_eq!(got, [("A", "B", true), ("B", "C", true), ("A", "C", false)]);
    }

    #[test]
    fn balanced_caps_at_available_negatives() {
        for seed in 0..5 {
            let pairs = make_border_pairs(&chain(), PairStrategy::Balanced, seed).unwrap();
            assert_eq!(pairs.positives(), 2);
            assert_eq!(pairs.negatives(), 1);
            assert_eq!(pairs.shortfall, 1);
        }
    }

    #[test]
    fn empty_edge_set_is_error() {
        let g = BorderGraph::new(["A", "B"]);
        assert!(matches!(
            make_border_pairs(&g, PairStrategy::Balanced, 0),
            Err(GeoError::NoPositivePairs)
        ));
    }

    #[test]
    fn balanced_sampling_is_seeded() {
        let codes: Vec<String> = (0..20).map(|i| format!("{}{}", (b'A' + i / 10) as char, i % 10)).collect();
        // codes are not alphabetic here, so build the graph directly
        let mut g = BorderGraph::new(codes.iter().cloned());
        for w in codes.windows(2) {
            g.add_edge(&w[0], &w[1]).unwrap();
        }
        let a = make_border_pairs(&g, PairStrategy::Balanced, 3).unwrap();
        let b = make_border_pairs(&g, PairStrategy::Balanced, 3).unwrap();
        assert_eq!(a.pairs, b.pairs);
        assert_eq!(a.positives(), 19);
        assert_eq!(a.negatives(), 19);
        for p in &a.pairs {
            assert!(p.a < p.b);
            assert_eq!(p.adjacent, g.has_edge(&p.a, &p.b));
        }
        let unique: BTreeSet<_> = a.pairs.iter().map(|p| (&p.a, &p.b)).collect();
        assert_eq!(unique.len(), a.pairs.len());
    }
}
