use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// Discrete-time signal sampled every `dt` seconds.
///
/// Stored time-major: row `k` is the state `sigma[k]`, so a trajectory of
/// `L` steps has `L + 1` rows and `n` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    values: Array2<f64>,
    dt: f64,
}

impl Trajectory {
    pub fn new(values: Array2<f64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::Shape("trajectory needs at least one sample of dimension >= 1".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState {
                step: pos / values.ncols(),
            });
        }
        Ok(Self { values, dt })
    }

    /// Builds a trajectory from one row per time step.
    pub fn from_rows(rows: &[Vec<f64>], dt: f64) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("rows of unequal length".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((rows.len(), n), flat).map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(values, dt)
    }

    /// One-dimensional signal.
    pub fn scalar(samples: &[f64], dt: f64) -> Result<Self> {
        let values = Array2::from_shape_vec((samples.len(), 1), samples.to_vec())
            .map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(values, dt)
    }

    pub fn state_dim(&self) -> usize {
        self.values.ncols()
    }

    /// Number of samples, `L + 1`.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Number of steps `L`.
    pub fn steps(&self) -> usize {
        self.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn state(&self, k: usize) -> &[f64] {
        self.values
            .row(k)
            .to_slice()
            .expect("trajectory rows are contiguous")
    }

    pub fn component(&self, k: usize, i: usize) -> f64 {
        self.values[[k, i]]
    }

    pub fn column(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.column(i)
    }

    /// Fails unless the formula horizon fits after `k`.
    pub fn require(&self, k: usize, horizon: usize) -> Result<()> {
        let required = k + horizon + 1;
        if required > self.len() {
            return Err(Error::TrajectoryTooShort {
                required,
                available: self.len(),
            });
        }
        Ok(())
    }
}
