//! Edge-list and TUDataset corpus formats.
//!
//! Edge lists hold one `u v` pair of 0-based ids per line, with `#` comments
//! and LF or CRLF endings. Two optional comment directives make the format
//! lossless: `# nodes N` sets a minimum node count (for trailing isolated
//! nodes) and `# label K` attaches a class label.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use grapho_core::{EdgeStats, Graph, GraphCorpus};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("input contains no edges")]
    EmptyInput,
    #[error("no file ending in `{suffix}` in {}", dir.display())]
    MissingFile { dir: PathBuf, suffix: &'static str },
    #[error("{}: line {line}: node {node} is not listed in the graph indicator", file.display())]
    UnknownNode { file: PathBuf, line: usize, node: usize },
    #[error("{}: line {line}: edge joins graphs {a} and {b}", file.display())]
    CrossGraphEdge { file: PathBuf, line: usize, a: i64, b: i64 },
    #[error("{}: {count} labels for {graphs} graphs", file.display())]
    LabelCount { file: PathBuf, count: usize, graphs: usize },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<FormatError>,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Core(#[from] grapho_core::Error),
}

pub type Result<T, E = FormatError> = std::result::Result<T, E>;

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| FormatError::Io { path: parent.to_path_buf(), source })?;
        }
    }
    fs::write(path, text).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, message: message.into() }
}

fn parse_id(token: &str, line: usize) -> Result<usize> {
    token.parse().map_err(|_| syntax(line, format!("`{token}` is not a non-negative integer node id")))
}

/// Parses an edge list. Duplicate edges and self-loops are dropped and
/// counted in the returned [`EdgeStats`].
pub fn parse_edge_list(text: &str) -> Result<(Graph, EdgeStats)> {
    let mut edges = Vec::new();
    let mut min_nodes = 0usize;
    let mut label = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let (body, comment) = match raw.split_once('#') {
            Some((b, c)) => (b, Some(c)),
            None => (raw, None),
        };
        if let Some(c) = comment {
            let directive = c.split('#').next().unwrap_or_default();
            let mut words = directive.split_whitespace();
            match (words.next(), words.next(), words.next()) {
                (Some("nodes"), Some(n), None) => min_nodes = parse_id(n, line)?,
                (Some("label"), Some(k), None) => {
                    label = Some(k.parse().map_err(|_| syntax(line, format!("`{k}` is not an integer label")))?)
                }
                _ => {}
            }
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            [u, v] => edges.push((parse_id(u, line)?, parse_id(v, line)?)),
            _ => return Err(syntax(line, format!("expected two node ids, found {} tokens", tokens.len()))),
        }
    }
    if edges.is_empty() && min_nodes == 0 {
        return Err(FormatError::EmptyInput);
    }
    let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0).max(min_nodes);
    let (g, stats) = Graph::from_edges(n, edges)?;
    if stats.dropped() > 0 {
        log::warn!("dropped {} duplicate edges and {} self-loops", stats.duplicates, stats.self_loops);
    }
    Ok((g.with_label(label), stats))
}

/// Serializes with a `# nodes` directive (and `# label` when present) so that
/// parsing the output restores the graph exactly.
pub fn write_edge_list(g: &Graph) -> String {
    let mut out = format!("# nodes {}\n", g.node_count());
    if let Some(k) = g.label() {
        let _ = writeln!(out, "# label {k}");
    }
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

pub fn read_edge_list(path: &Path) -> Result<Graph> {
    let text = read_text(path)?;
    parse_edge_list(&text)
        .map(|(g, _)| g)
        .map_err(|e| FormatError::Parse { path: path.to_path_buf(), source: Box::new(e) })
}

/// A single file is a one-graph corpus; a directory holds one graph per file,
/// read in file-name order.
pub fn read_edge_list_corpus(path: &Path) -> Result<GraphCorpus> {
    let name = corpus_name(path);
    if path.is_file() {
        return Ok(GraphCorpus::new(name, vec![read_edge_list(path)?])?);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|source| FormatError::Io { path: path.to_path_buf(), source })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    let graphs = files.iter().map(|f| read_edge_list(f)).collect::<Result<Vec<_>>>()?;
    Ok(GraphCorpus::new(name, graphs)?)
}

/// Writes `graph_0000.edges`, `graph_0001.edges`, ... into `dir`.
pub fn write_edge_list_corpus(corpus: &GraphCorpus, dir: &Path) -> Result<()> {
    let width = corpus.len().saturating_sub(1).to_string().len().max(4);
    for (i, g) in corpus.iter().enumerate() {
        write_text(&dir.join(format!("graph_{i:0width$}.edges")), &write_edge_list(g))?;
    }
    Ok(())
}

fn corpus_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "corpus".into())
}

const ADJACENCY_SUFFIX: &str = "_A.txt";
const INDICATOR_SUFFIX: &str = "_graph_indicator.txt";
const LABELS_SUFFIX: &str = "_graph_labels.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TuOptions {
    /// Fail when the `_graph_labels.txt` file is absent.
    pub require_labels: bool,
}

impl Default for TuOptions {
    fn default() -> Self {
        Self { require_labels: true }
    }
}

fn find_file(dir: &Path, suffix: &'static str) -> Result<Option<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|source| FormatError::Io { path: dir.to_path_buf(), source })?;
    let mut hits: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(suffix)))
        .collect();
    hits.sort();
    Ok(hits.into_iter().next())
}

fn require(dir: &Path, suffix: &'static str) -> Result<PathBuf> {
    find_file(dir, suffix)?.ok_or_else(|| FormatError::MissingFile { dir: dir.to_path_buf(), suffix })
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

/// Reads the `DS_A.txt` / `DS_graph_indicator.txt` / `DS_graph_labels.txt`
/// layout with 1-based node ids. Graphs are ordered by graph id and nodes
/// within a graph by global node id.
pub fn parse_tudataset(dir: &Path, opts: TuOptions) -> Result<GraphCorpus> {
    let a_path = require(dir, ADJACENCY_SUFFIX)?;
    let ind_path = require(dir, INDICATOR_SUFFIX)?;
    let labels_path = if opts.require_labels { Some(require(dir, LABELS_SUFFIX)?) } else { find_file(dir, LABELS_SUFFIX)? };
    let name = a_path
        .file_name()
        .and_then(|n| n.to_str())
        .and_then(|n| n.strip_suffix(ADJACENCY_SUFFIX))
        .unwrap_or("corpus")
        .to_string();

    let wrap = |path: &Path| {
        let path = path.to_path_buf();
        move |e: FormatError| FormatError::Parse { path: path.clone(), source: Box::new(e) }
    };

    let indicator: Vec<i64> = data_lines(&read_text(&ind_path)?)
        .map(|(line, l)| l.parse::<i64>().map_err(|_| syntax(line, format!("`{l}` is not a graph id"))))
        .collect::<Result<_>>()
        .map_err(wrap(&ind_path))?;

    // Local index of every node inside its graph.
    let mut members: BTreeMap<i64, usize> = BTreeMap::new();
    let local: Vec<usize> = indicator
        .iter()
        .map(|&gid| {
            let slot = members.entry(gid).or_insert(0);
            *slot += 1;
            *slot - 1
        })
        .collect();
    let graph_ids: Vec<i64> = members.keys().copied().collect();
    let position: BTreeMap<i64, usize> = graph_ids.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); graph_ids.len()];

    let node = |id: usize, line: usize| -> Result<usize> {
        if id == 0 || id > indicator.len() {
            return Err(FormatError::UnknownNode { file: a_path.clone(), line, node: id });
        }
        Ok(id - 1)
    };
    for (line, l) in data_lines(&read_text(&a_path)?) {
        let (u, v) = l.split_once(',').ok_or_else(|| wrap(&a_path)(syntax(line, "expected `u, v`")))?;
        let u = node(parse_id(u.trim(), line).map_err(wrap(&a_path))?, line)?;
        let v = node(parse_id(v.trim(), line).map_err(wrap(&a_path))?, line)?;
        if indicator[u] != indicator[v] {
            return Err(FormatError::CrossGraphEdge { file: a_path.clone(), line, a: indicator[u], b: indicator[v] });
        }
        edges[position[&indicator[u]]].push((local[u], local[v]));
    }

    let labels: Option<Vec<i64>> = match &labels_path {
        Some(p) => {
            let labels: Vec<i64> = data_lines(&read_text(p)?)
                .map(|(line, l)| l.parse::<i64>().map_err(|_| syntax(line, format!("`{l}` is not an integer label"))))
                .collect::<Result<_>>()
                .map_err(wrap(p))?;
            if labels.len() != graph_ids.len() {
                return Err(FormatError::LabelCount { file: p.clone(), count: labels.len(), graphs: graph_ids.len() });
            }
            Some(labels)
        }
        None => None,
    };

    let mut dropped = EdgeStats::default();
    let mut graphs = Vec::with_capacity(graph_ids.len());
    for (i, gid) in graph_ids.iter().enumerate() {
        let (g, stats) = Graph::from_edges(members[gid], std::mem::take(&mut edges[i]))?;
        dropped.self_loops += stats.self_loops;
        graphs.push(g.with_label(labels.as_ref().map(|l| l[i])));
    }
    if dropped.self_loops > 0 {
        log::warn!("{name}: dropped {} self-loops", dropped.self_loops);
    }
    Ok(GraphCorpus::new(name, graphs)?)
}

/// Writes the corpus in TUDataset layout under `dir` with prefix `name`. Both
/// directions of every edge are listed; the labels file is written only when
/// every graph carries a label.
pub fn write_tudataset(corpus: &GraphCorpus, dir: &Path, name: &str) -> Result<()> {
    let mut a = String::new();
    let mut indicator = String::new();
    let mut offset = 0;
    for (gi, g) in corpus.iter().enumerate() {
        for _ in 0..g.node_count() {
            let _ = writeln!(indicator, "{}", gi + 1);
        }
        for u in 0..g.node_count() {
            for &v in g.neighbors(u) {
                let _ = writeln!(a, "{}, {}", offset + u + 1, offset + v + 1);
            }
        }
        offset += g.node_count();
    }
    write_text(&dir.join(format!("{name}{ADJACENCY_SUFFIX}")), &a)?;
    write_text(&dir.join(format!("{name}{INDICATOR_SUFFIX}")), &indicator)?;
    let labels: Option<Vec<i64>> = corpus.iter().map(Graph::label).collect();
    if let Some(labels) = labels {
        let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
        write_text(&dir.join(format!("{name}{LABELS_SUFFIX}")), &text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_examples() {
        let (g, _) = parse_edge_list("0 1\n1 2\n2 0").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (3, 3));

        let (g, stats) = parse_edge_list("0 1\n0 1\n1 1").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        assert_eq!((stats.duplicates, stats.self_loops), (1, 1));

        let (g, _) = parse_edge_list("0 5").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (6, 1));
        assert_eq!(g.degree(3), 0);
    }

    #[test]
    fn edge_list_syntax() {
        let (g, _) = parse_edge_list("# header\r\n0 1 # inline\r\n\r\n  2\t1  \r\n").unwrap();
        assert_eq!(g.edge_count(), 2);
        assert!(matches!(parse_edge_list(""), Err(FormatError::EmptyInput)));
        assert!(matches!(parse_edge_list("# only comments\n\n"), Err(FormatError::EmptyInput)));
        assert!(matches!(parse_edge_list("0 1\n1 x\n"), Err(FormatError::Syntax { line: 2, .. })));
        assert!(matches!(parse_edge_list("0 1\n1 2 3\n"), Err(FormatError::Syntax { line: 2, .. })));
        assert!(matches!(parse_edge_list("0 1\n-1 2\n"), Err(FormatError::Syntax { line: 2, .. })));
    }

    #[test]
    fn directives_round_trip() {
        let (g, _) = Graph::from_edges(7, [(0, 1), (2, 3)]).unwrap();
        let g = g.with_label(Some(-1));
        let (back, _) = parse_edge_list(&write_edge_list(&g)).unwrap();
        assert_eq!(back, g);
        let (lonely, _) = parse_edge_list("# nodes 3\n").unwrap();
        assert_eq!((lonely.node_count(), lonely.edge_count()), (3, 0));
    }
}
