//! File artifacts shared between the library and the CLI: the per-timestamp
//! network JSON, the temporal-deviation CSV, and replayable scenario
//! bundles. Numbers are rounded to 12 significant digits before
//! serialization so that load/re-serialize round-trips are byte-identical.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::ObservationSet;
use crate::error::{Result, TvnetError};
use crate::eval::{GroundTruthScenario, ScenarioKind};
use crate::penalty::PenaltySpec;
use crate::solver::ThetaSequence;

/// Matrices are stored dense up to this dimension and as sparse triplets
/// above it.
const DENSE_LIMIT: usize = 200;

/// Round to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap()
}

/// Dense rows or sparse (i, j, value) triplets.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixData {
    Dense(Vec<Vec<f64>>),
    Sparse {
        p: usize,
        triplets: Vec<(usize, usize, f64)>,
    },
}

impl MatrixData {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let p = m.nrows();
        if p <= DENSE_LIMIT {
            MatrixData::Dense(
                (0..p)
                    .map(|i| (0..p).map(|j| round_sig(m[(i, j)])).collect())
                    .collect(),
            )
        } else {
            let mut triplets = Vec::new();
            for i in 0..p {
                for j in 0..p {
                    if m[(i, j)] != 0.0 {
                        triplets.push((i, j, round_sig(m[(i, j)])));
                    }
                }
            }
            MatrixData::Sparse { p, triplets }
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        match self {
            MatrixData::Dense(rows) => {
                let p = rows.len();
                if rows.iter().any(|r| r.len() != p) {
                    return Err(TvnetError::Input("ragged matrix rows".into()));
                }
                Ok(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
            }
            MatrixData::Sparse { p, triplets } => {
                let mut m = DMatrix::zeros(*p, *p);
                for &(i, j, v) in triplets {
                    if i >= *p || j >= *p {
                        return Err(TvnetError::Input("triplet index out of range".into()));
                    }
                    m[(i, j)] = v;
                }
                Ok(m)
            }
        }
    }
}

/// One edge of the reported network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// The solved network sequence, as written to `networks.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    pub p: usize,
    pub timestamps: Vec<f64>,
    pub penalty: PenaltySpec,
    pub edge_threshold: f64,
    pub matrices: Vec<MatrixData>,
    pub edges: Vec<Vec<Edge>>,
}

impl NetworkFile {
    pub fn from_sequence(
        seq: &ThetaSequence,
        timestamps: &[f64],
        penalty: &PenaltySpec,
    ) -> Self {
        let edges = (0..seq.len())
            .map(|t| {
                seq.edges_at(t)
                    .into_iter()
                    .map(|(i, j, w)| Edge {
                        i,
                        j,
                        weight: round_sig(w),
                    })
                    .collect()
            })
            .collect();
        NetworkFile {
            p: seq.dim(),
            timestamps: timestamps.iter().map(|&t| round_sig(t)).collect(),
            penalty: *penalty,
            edge_threshold: seq.edge_threshold,
            matrices: seq.thetas.iter().map(MatrixData::from_matrix).collect(),
            edges,
        }
    }

    pub fn to_sequence(&self) -> Result<ThetaSequence> {
        let thetas = self
            .matrices
            .iter()
            .map(|m| m.to_matrix())
            .collect::<Result<Vec<_>>>()?;
        let mut seq = ThetaSequence::new(thetas);
        seq.edge_threshold = self.edge_threshold;
        Ok(seq)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Write the temporal-deviation series as `time,deviation` CSV rows; the
/// time column holds the later timestamp of each consecutive pair.
pub fn write_deviation_csv(
    path: impl AsRef<Path>,
    timestamps: &[f64],
    deviations: &[f64],
) -> Result<()> {
    let mut out = String::from("time,deviation\n");
    for (k, dev) in deviations.iter().enumerate() {
        out.push_str(&format!("{},{}\n", round_sig(timestamps[k + 1]), round_sig(*dev)));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// A replayable synthetic experiment: the planted truth plus the sampled
/// observations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioBundle {
    pub kind: ScenarioKind,
    pub p: usize,
    pub t: usize,
    pub shift_time: usize,
    pub samples_per_t: usize,
    pub seed: u64,
    pub true_inverse_covs: Vec<MatrixData>,
    pub timestamps: Vec<f64>,
    /// samples[t][k] is the k-th observation vector at timestamp t.
    pub samples: Vec<Vec<Vec<f64>>>,
}

impl ScenarioBundle {
    pub fn from_parts(truth: &GroundTruthScenario, obs: &ObservationSet) -> Self {
        ScenarioBundle {
            kind: truth.kind,
            p: truth.p,
            t: truth.t,
            shift_time: truth.shift_time,
            samples_per_t: truth.samples_per_t,
            seed: truth.seed,
            true_inverse_covs: truth
                .true_inverse_covs
                .iter()
                .map(MatrixData::from_matrix)
                .collect(),
            timestamps: obs.timestamps().to_vec(),
            samples: obs
                .samples()
                .iter()
                .map(|bucket| bucket.iter().map(|v| v.iter().cloned().collect()).collect())
                .collect(),
        }
    }

    pub fn truth(&self) -> Result<GroundTruthScenario> {
        Ok(GroundTruthScenario {
            kind: self.kind,
            p: self.p,
            t: self.t,
            shift_time: self.shift_time,
            samples_per_t: self.samples_per_t,
            seed: self.seed,
            true_inverse_covs: self
                .true_inverse_covs
                .iter()
                .map(|m| m.to_matrix())
                .collect::<Result<_>>()?,
        })
    }

    pub fn observations(&self) -> Result<ObservationSet> {
        let samples = self
            .samples
            .iter()
            .map(|bucket| {
                bucket
                    .iter()
                    .map(|v| DVector::from_vec(v.clone()))
                    .collect()
            })
            .collect();
        ObservationSet::new(self.timestamps.clone(), samples)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
