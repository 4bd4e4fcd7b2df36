//! File formats: CSV edge lists, dense adjacency CSV, dataset CSV and its
//! JSON sidecar.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{node_label, parse_node_label, Digraph};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::scm::{Dataset, Provenance, Scale, SimConfig, WeightedAdjacency};

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRow {
    source: String,
    target: String,
    weight: f64,
}

/// Writes `source,target,weight` rows. Edges without a weight matrix get 1.0.
pub fn write_edge_list<W: Write, T: Scalar>(out: W, g: &Digraph, weights: Option<&WeightedAdjacency<T>>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    if g.edge_count() == 0 {
        wtr.write_record(["source", "target", "weight"])?;
    }
    for (i, j) in g.edges() {
        let weight = weights.map_or(1.0, |w| w.get(i, j).as_f64());
        wtr.serialize(EdgeRow {
            source: node_label(i),
            target: node_label(j),
            weight,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads an edge list into a graph over `d` nodes (or the largest label seen
/// when `d` is `None`) plus the weight matrix.
pub fn read_edge_list<R: Read>(input: R, d: Option<usize>) -> Result<(Digraph, WeightedAdjacency<f64>)> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in rdr.deserialize::<EdgeRow>() {
        let row = row?;
        rows.push((
            parse_node_label(&row.source)?,
            parse_node_label(&row.target)?,
            row.weight,
        ));
    }
    let inferred = rows.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
    let d = d.unwrap_or(inferred);
    if inferred > d {
        return Err(Error::Parse(format!(
            "edge list references node X{inferred} beyond d = {d}"
        )));
    }
    let mut g = Digraph::empty(d);
    let mut w = WeightedAdjacency::zeros(d);
    for (i, j, weight) in rows {
        g.add_edge(i, j)?;
        w.set(i, j, weight);
    }
    Ok((g, w))
}

/// Dense `d x d` adjacency with a `node` label column and `X1..Xd` header.
pub fn write_adjacency<W: Write, T: Scalar>(out: W, w: &Matrix<T>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let d = w.nrows();
    let mut header = vec!["node".to_string()];
    header.extend((0..d).map(node_label));
    wtr.write_record(&header)?;
    for i in 0..d {
        let mut row = vec![node_label(i)];
        row.extend((0..d).map(|j| w[(i, j)].to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn graph_matrix(g: &Digraph) -> Matrix<f64> {
    let d = g.node_count();
    Matrix::from_fn(d, d, |i, j| if g.has_edge(i, j) { 1.0 } else { 0.0 })
}

/// Header `X1,...,Xd`, one sample per row.
pub fn write_dataset<W: Write, T: Scalar>(out: W, ds: &Dataset<T>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(ds.labels())?;
    let mut row = Vec::with_capacity(ds.d());
    for r in 0..ds.n() {
        row.clear();
        row.extend(ds.values().row(r).iter().map(|v| format!("{v:?}")));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> Result<Dataset<f64>> {
    let mut rdr = csv::Reader::from_reader(input);
    let labels: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let d = labels.len();
    let mut data = Vec::new();
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: rec.len(),
            });
        }
        for field in rec.iter() {
            data.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("`{field}`: {e}")))?,
            );
        }
        n += 1;
    }
    Dataset::with_labels(Matrix::from_row_major(n, d, data)?, labels)
}

/// Sidecar written next to a dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema_version: u32,
    pub n: usize,
    pub d: usize,
    pub scale: Scale,
    pub provenance: Provenance,
    pub config: Option<SimConfig>,
    /// Path of the ground-truth edge list, relative to the sidecar.
    pub truth: Option<String>,
}

pub const DATASET_META_VERSION: u32 = 1;

impl DatasetMeta {
    pub fn for_dataset<T: Scalar>(ds: &Dataset<T>, config: Option<SimConfig>, truth: Option<String>) -> Self {
        Self {
            schema_version: DATASET_META_VERSION,
            n: ds.n(),
            d: ds.d(),
            scale: ds.scale,
            provenance: ds.provenance.clone(),
            config,
            truth,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn edge_list_roundtrip_with_isolated_nodes() {
        let g = Digraph::from_edges(4, &[(0, 2), (3, 1)]).unwrap();
        let mut w = WeightedAdjacency::<f64>::zeros(4);
        w.set(0, 2, -1.25);
        w.set(3, 1, 0.5);
        let mut buf = Vec::new();
        write_edge_list(&mut buf, &g, Some(&w)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("source,target,weight\nX1,X3,-1.25\n"), "{text}");
        let (g2, w2) = read_edge_list(buf.as_slice(), Some(5)).unwrap();
        assert_eq!(g2.node_count(), 5);
        assert!(g2.has_edge(0, 2) && g2.has_edge(3, 1));
        assert_eq!(w2.get(0, 2), -1.25);
        assert!(read_edge_list(buf.as_slice(), Some(2)).is_err());
    }

    #[test]
    fn empty_edge_list_has_header() {
        let mut buf = Vec::new();
        write_edge_list::<_, f64>(&mut buf, &Digraph::empty(3), None).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "source,target,weight\n");
        let (g, _) = read_edge_list(buf.as_slice(), Some(3)).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn adjacency_layout() {
        let g = Digraph::from_edges(2, &[(0, 1)]).unwrap();
        let mut buf = Vec::new();
        write_adjacency(&mut buf, &graph_matrix(&g)).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "node,X1,X2\nX1,0,1\nX2,0,0\n");
    }

    proptest! {
        #[test]
        fn dataset_csv_roundtrip_is_exact(values in proptest::collection::vec(-1e6f64..1e6, 12)) {
            let ds = Dataset::new(Matrix::from_row_major(4, 3, values).unwrap()).unwrap();
            let mut buf = Vec::new();
            write_dataset(&mut buf, &ds).unwrap();
            let back = read_dataset(buf.as_slice()).unwrap();
            prop_assert_eq!(back.values(), ds.values());
            prop_assert_eq!(back.labels(), ds.labels());
        }
    }
}
