//! JSON and CSV artifacts: graphons, basis sets, plans and training
//! histories. Floats are written in shortest round-trip form, so equal values
//! always produce equal bytes.

use std::fmt::Write as _;
use std::path::Path;

use grapho_core::{BasisSet, CoefficientEncoder, CorpusStats, EpochRecord, Matrix, MotifGap, StepGraphon, ToyClassifier};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::io::{read_text, write_text, FormatError, Result};

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize infallibly");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| FormatError::Json { path: path.to_path_buf(), source })
}

/// `{size, measure, values}` with row-major values.
pub fn read_graphon(path: &Path) -> Result<StepGraphon> {
    read_json(path)
}

pub fn write_graphon(path: &Path, w: &StepGraphon) -> Result<()> {
    write_json(path, w)
}

/// One comma-separated row per matrix row, no header.
pub fn matrix_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, m: &Matrix) -> Result<()> {
    write_text(path, &matrix_csv(m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasesFile {
    pub bases: Vec<StepGraphon>,
    pub encoder: CoefficientEncoder,
}

impl BasesFile {
    pub fn new(bases: &BasisSet, encoder: &CoefficientEncoder) -> Result<Self> {
        Ok(Self { bases: bases.graphons()?, encoder: encoder.clone() })
    }

    /// Rebuilds trainable parameters. Basis values are mapped back through
    /// the logit, so values pinned at 0 or 1 come back clamped.
    pub fn into_parts(self) -> Result<(BasisSet, CoefficientEncoder)> {
        if self.encoder.count() != self.bases.len() {
            return Err(grapho_core::Error::Dimension(format!(
                "{} bases but the encoder emits {} coefficients",
                self.bases.len(),
                self.encoder.count()
            ))
            .into());
        }
        Ok((BasisSet::from_graphons(&self.bases)?, self.encoder))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierFile {
    pub classifier: ToyClassifier,
    /// Original dataset label of each class index.
    pub labels: Vec<i64>,
}

pub fn fit_history_csv(history: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (epoch, loss) in history.iter().enumerate() {
        let _ = writeln!(out, "{epoch},{loss}");
    }
    out
}

pub const TRAIN_HEADER: &str = "epoch,task_loss,recon_loss,total_loss,train_accuracy";

pub fn train_history_csv(history: &[EpochRecord]) -> String {
    let mut out = format!("{TRAIN_HEADER}\n");
    for r in history {
        let _ = writeln!(out, "{},{},{},{},{}", r.epoch, r.task_loss, r.recon_loss, r.total_loss, r.train_accuracy);
    }
    out
}

pub const STATS_HEADER: &str = "graphs,mean_nodes,mean_edges,density,transitivity,average_degree,average_clustering";

pub fn stats_row(s: &CorpusStats) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        s.graphs, s.mean_nodes, s.mean_edges, s.density, s.transitivity, s.average_degree, s.average_clustering
    )
}

pub fn motif_gaps_csv(gaps: &[MotifGap]) -> String {
    let mut out = String::from("motif,density_gap,bound,holds\n");
    for g in gaps {
        let _ = writeln!(out, "{},{},{},{}", g.motif, g.check.lhs, g.check.rhs, g.check.holds);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_shapes() {
        let m = Matrix::from_rows(&[&[0.5, 1.0], &[0.25, 0.0]]).unwrap();
        assert_eq!(matrix_csv(&m), "0.5,1\n0.25,0\n");
        assert_eq!(fit_history_csv(&[2.0, 0.5]), "epoch,loss\n0,2\n1,0.5\n");
    }

    #[test]
    fn graphon_json_shape() {
        let w = StepGraphon::constant(2, 0.25).unwrap();
        let v: serde_json::Value = serde_json::from_str(&to_json(&w)).unwrap();
        assert_eq!(v["size"], 2);
        assert_eq!(v["measure"].as_array().unwrap().len(), 2);
        assert_eq!(v["values"].as_array().unwrap().len(), 4);
        let back: StepGraphon = serde_json::from_str(&to_json(&w)).unwrap();
        assert_eq!(back, w);
    }
}
