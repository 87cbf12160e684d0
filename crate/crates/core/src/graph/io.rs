use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{csl, Graph, GraphDataset, Label, Task};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// On-disk dataset layouts understood by [`load_dataset`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetFormat {
    /// One JSON object per line.
    EdgeListJsonl,
    /// TU flat-file layout (`DS_A.txt`, `DS_graph_indicator.txt`, ...).
    Tu,
}

impl std::str::FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "edge_list_jsonl" => Ok(Self::EdgeListJsonl),
            "tu" | "tu_format" => Ok(Self::Tu),
            other => Err(Error::InvalidArgument(format!("unknown dataset format '{other}'"))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRecord {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    node_features: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edge_features: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<serde_json::Value>,
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<GraphDataset> {
    match format {
        DatasetFormat::EdgeListJsonl => load_jsonl(path),
        DatasetFormat::Tu => load_tu(path),
    }
}

fn features_or_zeros(rows: Option<Vec<Vec<f64>>>, n: usize, what: &str, loc: &str) -> Result<Tensor> {
    match rows {
        None => Ok(Tensor::zeros(n, 1)),
        Some(r) if r.is_empty() && n == 0 => Ok(Tensor::zeros(0, 1)),
        Some(r) => Tensor::from_rows(&r)
            .map_err(|_| Error::parse(loc, format!("ragged {what} rows"))),
    }
}

fn parse_label(v: serde_json::Value, loc: &str) -> Result<Label> {
    match v {
        serde_json::Value::Number(n) => match n.as_u64() {
            Some(c) => Ok(Label::Class(c as usize)),
            None => n
                .as_f64()
                .map(|x| Label::Values(vec![x]))
                .ok_or_else(|| Error::parse(loc, "unreadable label")),
        },
        serde_json::Value::Array(a) => a
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| Error::parse(loc, "non-numeric label entry")))
            .collect::<Result<Vec<_>>>()
            .map(Label::Values),
        other => Err(Error::parse(loc, format!("unsupported label {other}"))),
    }
}

fn infer_task(graphs: &[Graph]) -> Result<Task> {
    let mut max_class = None;
    let mut dim = None;
    for g in graphs {
        match g.label() {
            Some(Label::Class(c)) => max_class = Some(max_class.unwrap_or(0).max(*c)),
            Some(Label::Values(v)) => dim = Some(v.len()),
            None => {}
        }
    }
    match (max_class, dim) {
        (Some(_), Some(_)) => Err(Error::Schema("mixed class and real-valued labels".into())),
        (Some(c), None) => Ok(Task::Classification { num_classes: c + 1 }),
        (None, Some(d)) => Ok(Task::Regression { dim: d }),
        (None, None) => Ok(Task::Classification { num_classes: 0 }),
    }
}

/// Reads the one-graph-per-line JSON format.
pub fn load_jsonl(path: &Path) -> Result<GraphDataset> {
    let file = fs::File::open(path)?;
    let mut graphs = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let loc = format!("{}:{} (graph {})", path.display(), lineno + 1, graphs.len());
        let rec: GraphRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(&loc, e.to_string()))?;
        graphs.push(record_to_graph(rec, &loc)?);
    }
    let task = infer_task(&graphs)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    GraphDataset::new(name, task, graphs)
}

fn record_to_graph(rec: GraphRecord, loc: &str) -> Result<Graph> {
    let n = rec.num_nodes;
    let m = rec.edges.len();
    let nf = features_or_zeros(rec.node_features, n, "node_features", loc)?;
    let ef = match rec.edge_features {
        None => Tensor::zeros(m, 1),
        Some(r) if r.is_empty() => Tensor::zeros(0, 1),
        Some(r) => Tensor::from_rows(&r).map_err(|_| Error::parse(loc, "ragged edge_features rows"))?,
    };
    let label = rec.label.map(|v| parse_label(v, loc)).transpose()?;
    Graph::new(n, rec.edges, nf, ef, label).map_err(|e| match e {
        Error::Schema(msg) => Error::parse(loc, msg),
        other => other,
    })
}

/// Writes a dataset in the one-graph-per-line JSON format.
pub fn write_jsonl(ds: &GraphDataset, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for g in ds.graphs() {
        let rec = GraphRecord {
            num_nodes: g.num_nodes(),
            edges: g.edges().to_vec(),
            node_features: Some(g.node_features().to_rows()),
            edge_features: Some(g.edge_features().to_rows()),
            label: g.label().map(|l| serde_json::to_value(l)).transpose()?,
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn tu_prefix(path: &Path) -> Result<(PathBuf, String)> {
    if path.is_dir() {
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| Error::InvalidArgument(format!("bad TU directory {}", path.display())))?;
        return Ok((path.to_path_buf(), name));
    }
    let file = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    match file.strip_suffix("_A.txt") {
        Some(name) => Ok((path.parent().unwrap_or(Path::new(".")).to_path_buf(), name.to_string())),
        None => Err(Error::InvalidArgument(format!(
            "TU path must be a dataset directory or its *_A.txt file: {}",
            path.display()
        ))),
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path)?;
    Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
}

fn read_optional(path: &Path) -> Result<Option<Vec<String>>> {
    if path.exists() {
        read_lines(path).map(Some)
    } else {
        Ok(None)
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, loc: impl Fn() -> String) -> Result<T> {
    s.trim().parse::<T>().map_err(|_| Error::parse(loc(), format!("cannot parse '{s}'")))
}

fn one_hot(labels: &[i64]) -> (Tensor, usize) {
    let distinct: BTreeSet<i64> = labels.iter().copied().collect();
    let index: HashMap<i64, usize> = distinct.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let width = distinct.len().max(1);
    let mut t = Tensor::zeros(labels.len(), width);
    for (r, l) in labels.iter().enumerate() {
        t.set(r, index[l], 1.0);
    }
    (t, width)
}

/// Reads the TU benchmark flat-file layout (1-based node ids).
pub fn load_tu(path: &Path) -> Result<GraphDataset> {
    let (dir, name) = tu_prefix(path)?;
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));

    let a_path = file("A");
    let a_lines = read_lines(&a_path)?;
    let indicator: Vec<usize> = read_lines(&file("graph_indicator"))?
        .iter()
        .enumerate()
        .map(|(i, l)| parse_num(l, || format!("{}_graph_indicator.txt:{}", name, i + 1)))
        .collect::<Result<_>>()?;
    let graph_label_lines = read_lines(&file("graph_labels"))?;
    let num_graphs = graph_label_lines.len();
    let total_nodes = indicator.len();

    if let Some(&bad) = indicator.iter().find(|&&g| g == 0 || g > num_graphs) {
        return Err(Error::parse(
            format!("{name}_graph_indicator.txt"),
            format!("graph id {bad} outside 1..={num_graphs}"),
        ));
    }

    let node_labels = read_optional(&file("node_labels"))?
        .map(|ls| {
            ls.iter()
                .enumerate()
                .map(|(i, l)| parse_num::<i64>(l.split(',').next().unwrap_or(""), || format!("{name}_node_labels.txt:{}", i + 1)))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let node_attrs = read_optional(&file("node_attributes"))?
        .map(|ls| {
            ls.iter()
                .enumerate()
                .map(|(i, l)| {
                    l.split(',')
                        .map(|x| parse_num::<f64>(x, || format!("{name}_node_attributes.txt:{}", i + 1)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let edge_labels = read_optional(&file("edge_labels"))?
        .map(|ls| {
            ls.iter()
                .enumerate()
                .map(|(i, l)| parse_num::<i64>(l.split(',').next().unwrap_or(""), || format!("{name}_edge_labels.txt:{}", i + 1)))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;

    // Global node feature matrix.
    let mut feat_parts: Vec<Tensor> = Vec::new();
    if let Some(l) = &node_labels {
        if l.len() != total_nodes {
            return Err(Error::Schema(format!("{name}_node_labels.txt has {} rows, expected {total_nodes}", l.len())));
        }
        feat_parts.push(one_hot(l).0);
    }
    if let Some(a) = &node_attrs {
        let t = Tensor::from_rows(a).map_err(|_| Error::Schema("ragged node attributes".into()))?;
        if t.rows() != total_nodes {
            return Err(Error::Schema(format!("{name}_node_attributes.txt has {} rows, expected {total_nodes}", t.rows())));
        }
        feat_parts.push(t);
    }
    let node_feat = if feat_parts.is_empty() {
        Tensor::zeros(total_nodes, 1)
    } else {
        let cols: usize = feat_parts.iter().map(Tensor::cols).sum();
        let mut t = Tensor::zeros(total_nodes, cols);
        for r in 0..total_nodes {
            let mut off = 0;
            for p in &feat_parts {
                t.row_slice_mut(r)[off..off + p.cols()].copy_from_slice(p.row_slice(r));
                off += p.cols();
            }
        }
        t
    };

    let (edge_onehot, edge_width) = match &edge_labels {
        Some(l) => {
            if l.len() != a_lines.len() {
                return Err(Error::Schema(format!("{name}_edge_labels.txt has {} rows, expected {}", l.len(), a_lines.len())));
            }
            let (t, w) = one_hot(l);
            (Some(t), w)
        }
        None => (None, 1),
    };

    // Directed pairs keyed by (min, max) -> (row of u<v direction, seen u<v, seen v<u).
    let mut pairs: BTreeMap<(usize, usize), (usize, bool, bool)> = BTreeMap::new();
    for (i, line) in a_lines.iter().enumerate() {
        let loc = || format!("{name}_A.txt:{}", i + 1);
        let mut it = line.split(',');
        let u: usize = parse_num(it.next().unwrap_or(""), loc)?;
        let v: usize = parse_num(it.next().unwrap_or(""), loc)?;
        if u == 0 || v == 0 || u > total_nodes || v > total_nodes {
            return Err(Error::parse(loc(), format!("node id out of range 1..={total_nodes}")));
        }
        let (u, v) = (u - 1, v - 1);
        if indicator[u] != indicator[v] {
            return Err(Error::parse(loc(), "edge joins two different graphs"));
        }
        if u == v {
            return Err(Error::parse(loc(), "self-loop"));
        }
        let key = (u.min(v), u.max(v));
        let entry = pairs.entry(key).or_insert((i, false, false));
        if u < v {
            entry.0 = i;
            entry.1 = true;
        } else {
            entry.2 = true;
        }
    }
    if let Some((&(u, v), _)) = pairs.iter().find(|(_, e)| !(e.1 && e.2)) {
        return Err(Error::Schema(format!(
            "directed edge {}->{} has no reverse; only undirected graphs are supported",
            u + 1,
            v + 1
        )));
    }

    // Assemble graphs.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); num_graphs];
    for (node, &g) in indicator.iter().enumerate() {
        members[g - 1].push(node);
    }
    let mut local = vec![0usize; total_nodes];
    for m in &members {
        for (i, &v) in m.iter().enumerate() {
            local[v] = i;
        }
    }
    let mut edges_per: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_graphs];
    let mut erows_per: Vec<Vec<usize>> = vec![Vec::new(); num_graphs];
    for (&(u, v), &(row, _, _)) in &pairs {
        let g = indicator[u] - 1;
        edges_per[g].push((local[u], local[v]));
        erows_per[g].push(row);
    }

    let raw_labels: Vec<&str> = graph_label_lines.iter().map(String::as_str).collect();
    let int_labels: Option<Vec<i64>> = raw_labels.iter().map(|l| l.parse::<i64>().ok()).collect();
    let (labels, task) = match int_labels {
        Some(ints) => {
            let distinct: BTreeSet<i64> = ints.iter().copied().collect();
            let idx: HashMap<i64, usize> = distinct.iter().enumerate().map(|(i, &l)| (l, i)).collect();
            (
                ints.iter().map(|l| Label::Class(idx[l])).collect::<Vec<_>>(),
                Task::Classification { num_classes: distinct.len() },
            )
        }
        None => {
            let vals = raw_labels
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    l.split(',')
                        .map(|x| parse_num::<f64>(x, || format!("{name}_graph_labels.txt:{}", i + 1)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let dim = vals.first().map_or(1, Vec::len);
            (vals.into_iter().map(Label::Values).collect(), Task::Regression { dim })
        }
    };

    let mut graphs = Vec::with_capacity(num_graphs);
    for (g, label) in labels.into_iter().enumerate() {
        let nf = node_feat.select_rows(&members[g]);
        let ef = match &edge_onehot {
            Some(t) => t.select_rows(&erows_per[g]),
            None => Tensor::zeros(erows_per[g].len(), edge_width),
        };
        let graph = Graph::new(members[g].len(), std::mem::take(&mut edges_per[g]), nf, ef, Some(label))
            .map_err(|e| Error::parse(format!("{name} graph {}", g + 1), e.to_string()))?;
        graphs.push(graph);
    }
    GraphDataset::new(name, task, graphs)
}

/// Resolves a graph argument: inline `csl:n:skip` or the first graph of a
/// JSONL file.
pub fn parse_graph_spec(spec: &str) -> Result<Graph> {
    if let Some(rest) = spec.strip_prefix("csl:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 2 {
            return Err(Error::InvalidArgument(format!("expected csl:n:skip, got '{spec}'")));
        }
        let n = parse_num(parts[0], || spec.to_string())?;
        let s = parse_num(parts[1], || spec.to_string())?;
        return csl(n, s);
    }
    let ds = load_jsonl(Path::new(spec))?;
    ds.graphs()
        .first()
        .cloned()
        .ok_or_else(|| Error::InvalidArgument(format!("{spec} contains no graphs")))
}

/// Resolves a dataset description:
/// `csl-pair:n:skip_a:skip_b:count`, `toy:count`, `csl:n:skip` (one
/// unlabeled graph), a TU directory or `*_A.txt` file, or a JSONL file.
/// `seed` drives the synthetic generators.
pub fn parse_dataset_spec(spec: &str, seed: u64) -> Result<GraphDataset> {
    let fields = |prefix: &str, count: usize| -> Option<Result<Vec<usize>>> {
        let rest = spec.strip_prefix(prefix)?;
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != count {
            return Some(Err(Error::InvalidArgument(format!("'{spec}' needs {count} fields after '{prefix}'"))));
        }
        Some(parts.iter().map(|p| parse_num(p, || spec.to_string())).collect())
    };
    if let Some(v) = fields("csl-pair:", 4) {
        let v = v?;
        return crate::graph::csl_pair_dataset(v[0], v[1], v[2], v[3], seed);
    }
    if let Some(v) = fields("toy:", 1) {
        return Ok(crate::graph::toy_dataset(v?[0], seed));
    }
    if spec.starts_with("csl:") {
        let g = parse_graph_spec(spec)?;
        return GraphDataset::new(spec, Task::Classification { num_classes: 0 }, vec![g]);
    }
    let path = Path::new(spec);
    if path.is_dir() || spec.ends_with("_A.txt") {
        load_tu(path)
    } else {
        load_jsonl(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_defaults_to_zero_features() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.jsonl");
        fs::write(&p, "{\"num_nodes\":3,\"edges\":[[0,1],[1,2]]}\n").unwrap();
        let ds = load_jsonl(&p).unwrap();
        let g = &ds.graphs()[0];
        assert_eq!((g.num_nodes(), g.num_edges()), (3, 2));
        assert_eq!(g.node_features().shape(), [3, 1]);
        assert!(g.node_features().data().iter().all(|&v| v == 0.0));
        assert_eq!(g.edge_features().shape(), [2, 1]);
    }

    #[test]
    fn jsonl_out_of_range_edge_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.jsonl");
        fs::write(&p, "{\"num_nodes\":2,\"edges\":[[0,1]]}\n{\"num_nodes\":3,\"edges\":[[5,2]]}\n").unwrap();
        match load_jsonl(&p) {
            Err(Error::Parse { location, .. }) => assert!(location.contains(":2"), "{location}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn jsonl_rejects_weighted_fields_and_mixed_widths() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.jsonl");
        fs::write(&p, "{\"num_nodes\":2,\"edges\":[[0,1]],\"edge_weights\":[2.0]}\n").unwrap();
        assert!(matches!(load_jsonl(&p), Err(Error::Parse { .. })));

        fs::write(
            &p,
            "{\"num_nodes\":1,\"edges\":[],\"node_features\":[[1.0]]}\n{\"num_nodes\":1,\"edges\":[],\"node_features\":[[1.0,2.0]]}\n",
        )
        .unwrap();
        assert!(matches!(load_jsonl(&p), Err(Error::Schema(_))));
    }

    #[test]
    fn jsonl_roundtrip_preserves_labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.jsonl");
        let g = csl(7, 2).unwrap().with_label(Label::Class(1));
        let ds = GraphDataset::new("r", Task::Classification { num_classes: 2 }, vec![g]).unwrap();
        write_jsonl(&ds, &p).unwrap();
        let back = load_jsonl(&p).unwrap();
        assert_eq!(back.graphs()[0].label(), Some(&Label::Class(1)));
        assert_eq!(back.graphs()[0].edges(), ds.graphs()[0].edges());
        assert_eq!(back.task, Task::Classification { num_classes: 2 });
    }

    fn write_tu(dir: &Path, a: &str) {
        let d = dir.join("TOY");
        fs::create_dir_all(&d).unwrap();
        fs::write(d.join("TOY_A.txt"), a).unwrap();
        fs::write(d.join("TOY_graph_indicator.txt"), "1\n1\n1\n2\n2\n").unwrap();
        fs::write(d.join("TOY_graph_labels.txt"), "-1\n1\n").unwrap();
        fs::write(d.join("TOY_node_labels.txt"), "0\n1\n0\n2\n2\n").unwrap();
    }

    #[test]
    fn tu_format_reads_graphs_labels_and_one_hot_features() {
        let dir = tempfile::tempdir().unwrap();
        write_tu(dir.path(), "1, 2\n2, 1\n2, 3\n3, 2\n4, 5\n5, 4\n");
        let ds = load_tu(&dir.path().join("TOY")).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.task, Task::Classification { num_classes: 2 });
        assert_eq!(ds.graphs()[0].num_edges(), 2);
        assert_eq!(ds.graphs()[1].num_edges(), 1);
        assert_eq!(ds.graphs()[0].label(), Some(&Label::Class(0)));
        assert_eq!(ds.node_feature_dim(), 3);
        assert_eq!(ds.graphs()[1].node_features().row_slice(0), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn tu_format_rejects_directed_edges() {
        let dir = tempfile::tempdir().unwrap();
        write_tu(dir.path(), "1, 2\n2, 3\n3, 2\n4, 5\n5, 4\n");
        assert!(matches!(load_tu(&dir.path().join("TOY")), Err(Error::Schema(_))));
    }

    #[test]
    fn inline_csl_spec() {
        let g = parse_graph_spec("csl:11:2").unwrap();
        assert_eq!((g.num_nodes(), g.num_edges()), (11, 22));
        assert!(parse_graph_spec("csl:6:3").is_err());
    }
}
