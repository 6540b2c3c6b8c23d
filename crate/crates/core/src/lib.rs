//! Step-function graphons, Gromov-Wasserstein barycenters and graphon-basis
//! reconstruction.
//!
//! The crate is `no_std` and only needs `alloc`. Enabling `parallel` fans
//! per-graph transport solves out over rayon; results stay bit-identical to the
//! sequential path because every reduction is performed in corpus order.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod analysis;
pub mod basis;
mod error;
pub mod graph;
pub mod graphon;
pub mod gw;
pub mod joint;
mod math;
pub mod matrix;
pub mod oracle;
mod par;

pub use analysis::{
    counting_lemma_check, cut_norm, graph_statistics, hom_density_graph, hom_density_graphon, motif_gaps,
    motif_gaps_with, CorpusStats, CountingCheck, Motif, MotifFactor, MotifGap,
};
pub use basis::{
    encode_coefficients, fit, fit_from, init_bases, loss_and_grads, reconstruct, structural_features, BasisSet,
    CoefficientEncoder, FitConfig, FitResult,
};
pub use error::{Error, Result};
pub use graph::{degree_measure, generate_er, EdgeStats, Graph, GraphCorpus, NodeMeasure};
pub use graphon::{
    empirical_graphon, resample, sample_graph, sort_by_degree, uniform_step_graphon,
    StepGraphon,
};
pub use gw::{
    feasibility_audit, gw_cost, gw_discrepancy, solve_gw, solve_gw_from, GwConfig, GwSolution, TransportPlan, MARGINAL_TOL,
};
pub use joint::{ce_loss, train_ce_only, train_joint, EpochRecord, JointConfig, JointResult, ToyClassifier};
pub use matrix::Matrix;
pub use oracle::{estimate_oracle, merged_measure, OracleConfig};
