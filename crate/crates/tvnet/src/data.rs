//! Domain types and ingestion: timestamped observations, grouping into
//! per-timestamp buckets, and empirical covariance computation.

use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, TvnetError};

/// Timestamped multivariate samples grouped per time bucket.
///
/// Each timestamp `t_i` carries `n_i >= 1` observation vectors in `R^p`.
/// Timestamps are strictly increasing after grouping.
#[derive(Debug, Clone)]
pub struct ObservationSet {
    timestamps: Vec<f64>,
    samples: Vec<Vec<DVector<f64>>>,
    dim: usize,
}

impl ObservationSet {
    /// Build from pre-grouped buckets. Buckets are sorted by time and buckets
    /// sharing a time value are merged.
    pub fn new(timestamps: Vec<f64>, samples: Vec<Vec<DVector<f64>>>) -> Result<Self> {
        if timestamps.len() != samples.len() {
            return Err(TvnetError::Input(
                "timestamps and sample buckets must have equal length".into(),
            ));
        }
        if timestamps.is_empty() {
            return Err(TvnetError::Input("observation set is empty".into()));
        }
        let dim = samples
            .iter()
            .flatten()
            .next()
            .map(|v| v.len())
            .ok_or_else(|| TvnetError::Input("no sample vectors provided".into()))?;
        for bucket in &samples {
            if bucket.is_empty() {
                return Err(TvnetError::Input("empty timestamp bucket".into()));
            }
            for v in bucket {
                if v.len() != dim {
                    return Err(TvnetError::Input(format!(
                        "sample of length {} does not match dimension {}",
                        v.len(),
                        dim
                    )));
                }
            }
        }
        let mut paired: Vec<(f64, Vec<DVector<f64>>)> =
            timestamps.into_iter().zip(samples).collect();
        paired.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, Vec<DVector<f64>>)> = Vec::new();
        for (t, bucket) in paired {
            if !t.is_finite() {
                return Err(TvnetError::Input("non-finite timestamp".into()));
            }
            match merged.last_mut() {
                Some((last_t, last_bucket)) if *last_t == t => last_bucket.extend(bucket),
                _ => merged.push((t, bucket)),
            }
        }
        let (timestamps, samples) = merged.into_iter().unzip();
        Ok(Self {
            timestamps,
            samples,
            dim,
        })
    }

    /// Parse rows of `time, v1, ..., vp` into a grouped observation set.
    /// Rows with equal time values become multiple samples of one timestamp.
    pub fn from_rows(rows: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(TvnetError::Input("no observation rows".into()));
        }
        let timestamps = rows.iter().map(|(t, _)| *t).collect();
        let samples = rows
            .into_iter()
            .map(|(_, v)| vec![DVector::from_vec(v)])
            .collect();
        Self::new(timestamps, samples)
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn samples(&self) -> &[Vec<DVector<f64>>] {
        &self.samples
    }

    /// Number of variables p.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of timestamps T.
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Per-timestamp sample counts n_i.
    pub fn counts(&self) -> Vec<usize> {
        self.samples.iter().map(|b| b.len()).collect()
    }

    /// Re-bin observations into buckets of the given time width. Bucket k
    /// collects rows with `t in [t0 + k*width, t0 + (k+1)*width)` and is
    /// stamped with the bucket midpoint.
    pub fn rebucket(&self, width: f64) -> Result<Self> {
        if width <= 0.0 {
            return Err(TvnetError::Input("bucket width must be positive".into()));
        }
        let t0 = self.timestamps[0];
        let mut timestamps = Vec::new();
        let mut samples: Vec<Vec<DVector<f64>>> = Vec::new();
        for (t, bucket) in self.timestamps.iter().zip(&self.samples) {
            let k = ((t - t0) / width).floor();
            let mid = t0 + (k + 0.5) * width;
            match timestamps.last() {
                Some(&last) if last == mid => samples.last_mut().unwrap().extend_from_slice(bucket),
                _ => {
                    timestamps.push(mid);
                    samples.push(bucket.clone());
                }
            }
        }
        Self::new(timestamps, samples)
    }
}

/// Delimiter and header options for text ingestion.
#[derive(Debug, Clone, Copy)]
pub struct InputFormat {
    pub delimiter: char,
    pub has_header: bool,
}

impl Default for InputFormat {
    fn default() -> Self {
        Self {
            delimiter: ',',
            has_header: false,
        }
    }
}

impl InputFormat {
    /// Guess the delimiter from a file extension (`.tsv` means tab).
    pub fn for_path(path: &Path, has_header: bool) -> Self {
        let delimiter = match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => '\t',
            _ => ',',
        };
        Self {
            delimiter,
            has_header,
        }
    }
}

/// Load a delimited time-series file: first column is the time value, the
/// remaining p columns are the sensor readings.
pub fn load_timeseries(path: impl AsRef<Path>, format: InputFormat) -> Result<ObservationSet> {
    let mut text = String::new();
    std::fs::File::open(path.as_ref())?.read_to_string(&mut text)?;
    parse_timeseries(&text, format)
}

/// Parse delimited text rows; see [`load_timeseries`].
pub fn parse_timeseries(text: &str, format: InputFormat) -> Result<ObservationSet> {
    let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut expected_cols: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        let row_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if format.has_header && idx == 0 {
            continue;
        }
        let cells: Vec<&str> = line.split(format.delimiter).map(|c| c.trim()).collect();
        if cells.len() < 2 {
            return Err(TvnetError::Parse {
                row: row_no,
                message: format!("expected a time column plus values, got {} cells", cells.len()),
            });
        }
        match expected_cols {
            Some(n) if n != cells.len() => {
                return Err(TvnetError::Parse {
                    row: row_no,
                    message: format!("ragged row: {} cells, expected {}", cells.len(), n),
                })
            }
            None => expected_cols = Some(cells.len()),
            _ => {}
        }
        let mut values = Vec::with_capacity(cells.len());
        for cell in &cells {
            let v: f64 = cell.parse().map_err(|_| TvnetError::Parse {
                row: row_no,
                message: format!("non-numeric cell '{cell}'"),
            })?;
            values.push(v);
        }
        let time = values[0];
        rows.push((time, values[1..].to_vec()));
    }
    if rows.is_empty() {
        return Err(TvnetError::Input("empty input file".into()));
    }
    ObservationSet::from_rows(rows)
}

/// Subtract each dimension's global mean (over all samples, all timestamps).
/// Idempotent.
pub fn center_columns(obs: &ObservationSet) -> ObservationSet {
    let p = obs.dim();
    let mut mean = DVector::zeros(p);
    let mut total = 0usize;
    for bucket in obs.samples() {
        for v in bucket {
            mean += v;
            total += 1;
        }
    }
    mean /= total as f64;
    let samples = obs
        .samples()
        .iter()
        .map(|bucket| bucket.iter().map(|v| v - &mean).collect())
        .collect();
    ObservationSet::new(obs.timestamps().to_vec(), samples)
        .expect("centering preserves validity")
}

/// Per-timestamp empirical covariance S_i with sample counts and time gaps.
#[derive(Debug, Clone)]
pub struct EmpiricalCovSequence {
    pub covs: Vec<DMatrix<f64>>,
    pub counts: Vec<usize>,
    /// h_i = t_i - t_{i-1} for i = 2..T; length T-1.
    pub gaps: Vec<f64>,
}

impl EmpiricalCovSequence {
    pub fn len(&self) -> usize {
        self.covs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.covs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.covs.first().map_or(0, |s| s.nrows())
    }
}

/// S_i = (1/n_i) sum_k x_k x_k^T over the n_i samples at t_i.
/// Rank-deficient S_i is allowed.
pub fn empirical_covariances(obs: &ObservationSet) -> EmpiricalCovSequence {
    let p = obs.dim();
    let covs = obs
        .samples()
        .iter()
        .map(|bucket| {
            let mut s = DMatrix::zeros(p, p);
            for v in bucket {
                s += v * v.transpose();
            }
            s / bucket.len() as f64
        })
        .collect();
    let gaps = obs
        .timestamps()
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect();
    EmpiricalCovSequence {
        covs,
        counts: obs.counts(),
        gaps,
    }
}
