//! Linear readout of the spin vector, refit online with recursive least
//! squares, plus the residual bookkeeping used for error feedback.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{config_error, invalid_argument, invalid_data, Result};
use crate::quantum::SpinVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RlsParams {
    /// Ridge strength; the inverse Gram matrix starts at `I / ridge_lambda`.
    pub ridge_lambda: f64,
    /// Forgetting factor in `(0, 1]`; 1 weights all samples equally.
    pub forgetting: f64,
    /// Append a constant feature so the forecast carries a bias term.
    #[serde(default = "default_intercept")]
    pub intercept: bool,
}

fn default_intercept() -> bool {
    true
}

impl Default for RlsParams {
    fn default() -> Self {
        Self {
            ridge_lambda: 1e-3,
            forgetting: 1.0,
            intercept: true,
        }
    }
}

impl RlsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ridge_lambda.is_finite() && self.ridge_lambda > 0.0) {
            return Err(config_error(
                "readout.ridge_lambda",
                "must be finite and > 0",
            ));
        }
        if !(self.forgetting > 0.0 && self.forgetting <= 1.0) {
            return Err(config_error("readout.forgetting", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Readout weights and the RLS inverse-Gram matrix. With an intercept the
/// last weight multiplies a constant 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutState {
    n_inputs: usize,
    w: DVector<f64>,
    p: DMatrix<f64>,
    params: RlsParams,
}

impl ReadoutState {
    pub fn new(n: usize, params: RlsParams) -> Result<Self> {
        params.validate()?;
        if n == 0 {
            return Err(invalid_argument("readout needs at least one input"));
        }
        let dim = n + params.intercept as usize;
        Ok(Self {
            n_inputs: n,
            w: DVector::zeros(dim),
            p: DMatrix::identity(dim, dim) / params.ridge_lambda,
            params,
        })
    }

    pub fn weights(&self) -> &[f64] {
        self.w.as_slice()
    }

    pub fn inverse_gram(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn params(&self) -> RlsParams {
        self.params
    }

    fn features(&self, s: &SpinVector) -> Result<DVector<f64>> {
        if s.len() != self.n_inputs {
            return Err(invalid_argument(format!(
                "spin vector has {} entries, readout expects {}",
                s.len(),
                self.n_inputs
            )));
        }
        let mut x = DVector::from_element(self.w.len(), 1.0);
        x.rows_mut(0, self.n_inputs).copy_from_slice(s.as_slice());
        Ok(x)
    }

    /// `w · s` (plus the bias weight when the intercept is enabled).
    pub fn predict(&self, s: &SpinVector) -> Result<f64> {
        Ok(self.w.dot(&self.features(s)?))
    }

    /// One RLS step towards `target`.
    pub fn update(&mut self, s: &SpinVector, target: f64) -> Result<()> {
        let x = self.features(s)?;
        if !target.is_finite() {
            return Err(invalid_data(format!(
                "readout target is not finite ({target})"
            )));
        }
        let lf = self.params.forgetting;
        let px = &self.p * &x;
        let denom = lf + x.dot(&px);
        let gain = px / denom;
        let err = target - self.w.dot(&x);
        self.w += &gain * err;
        // P ← (P − k xᵀ P) / λ_f, with P symmetric so xᵀP = (Px)ᵀ.
        let pxt = (&self.p * &x).transpose();
        self.p -= &gain * pxt;
        self.p /= lf;
        let sym = (&self.p + self.p.transpose()) * 0.5;
        self.p = sym;
        Ok(())
    }
}

/// One-step-ahead forecast outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub t: usize,
    pub actual: f64,
    pub predicted: f64,
    pub residual: f64,
}

impl ForecastRecord {
    pub fn new(t: usize, actual: f64, predicted: f64) -> Self {
        Self {
            t,
            actual,
            predicted,
            residual: actual - predicted,
        }
    }
}

/// Mean of squared residuals.
pub fn mse(records: &[ForecastRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(invalid_argument("MSE of an empty record set"));
    }
    Ok(records.iter().map(|r| r.residual * r.residual).sum::<f64>() / records.len() as f64)
}

/// Maps a residual to `[0, 1)` for feeding back into the angle encoding.
pub fn squash_error(residual: f64, scale: f64) -> f64 {
    let e = 1.0 - (-residual.abs() / scale).exp();
    if e.is_nan() {
        0.0
    } else {
        e.clamp(0.0, 1.0)
    }
}

/// Writes `t,actual,predicted,residual` rows.
pub fn write_records_csv<W: std::io::Write>(records: &[ForecastRecord], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["t", "actual", "predicted", "residual"])?;
    for r in records {
        wtr.write_record([
            r.t.to_string(),
            r.actual.to_string(),
            r.predicted.to_string(),
            r.residual.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(n: usize) -> ReadoutState {
        ReadoutState::new(n, RlsParams::default()).unwrap()
    }

    fn pure(n: usize) -> ReadoutState {
        ReadoutState::new(
            n,
            RlsParams {
                intercept: false,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn predict_examples() {
        let st = state(6);
        assert_eq!(st.predict(&SpinVector(vec![0.3; 6])).unwrap(), 0.0);

        let mut st = pure(3);
        st.w = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert_eq!(st.predict(&SpinVector(vec![0.1, -0.7, 0.4])).unwrap(), -0.7);

        let mut st = pure(6);
        st.w = DVector::from_element(6, 1.0 / 6.0);
        assert!((st.predict(&SpinVector(vec![0.5; 6])).unwrap() - 0.5).abs() < 1e-15);

        assert!(st.predict(&SpinVector(vec![0.5; 5])).is_err());
    }

    #[test]
    fn zero_targets_keep_zero_weights() {
        let mut st = state(4);
        for k in 0..50 {
            let s = SpinVector((0..4).map(|m| ((k * 7 + m) as f64).sin()).collect());
            st.update(&s, 0.0).unwrap();
        }
        assert!(st.weights().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn single_update_closed_form() {
        let lambda = 0.5;
        let mut st = ReadoutState::new(
            3,
            RlsParams {
                ridge_lambda: lambda,
                forgetting: 1.0,
                intercept: false,
            },
        )
        .unwrap();
        let s = [0.2, -0.5, 0.9];
        let target = 1.7;
        st.update(&SpinVector(s.to_vec()), target).unwrap();
        let sts: f64 = s.iter().map(|x| x * x).sum();
        for (w, x) in st.weights().iter().zip(s) {
            assert!((w - x * target / (lambda + sts)).abs() < 1e-14);
        }
    }

    #[test]
    fn intercept_absorbs_offset() {
        let mut st = state(2);
        for k in 0..400 {
            let s = [((k * 3) as f64).sin(), ((k * 5) as f64).cos()];
            st.update(&SpinVector(s.to_vec()), 0.5 * s[0] - 0.2 * s[1] + 3.0)
                .unwrap();
        }
        let w = st.weights();
        assert_eq!(w.len(), 3);
        assert!(
            (w[0] - 0.5).abs() < 1e-3 && (w[1] + 0.2).abs() < 1e-3 && (w[2] - 3.0).abs() < 1e-3
        );
    }

    #[test]
    fn rejects_non_finite_target() {
        let mut st = state(2);
        let err = st
            .update(&SpinVector(vec![0.1, 0.2]), f64::NAN)
            .unwrap_err();
        assert!(matches!(err, crate::Error::InvalidData(_)));
    }

    #[test]
    fn mse_examples() {
        let recs = |res: &[f64]| -> Vec<ForecastRecord> {
            res.iter()
                .enumerate()
                .map(|(t, &r)| ForecastRecord::new(t, r, 0.0))
                .collect()
        };
        assert_eq!(mse(&recs(&[0.0, 0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(mse(&recs(&[1.0, -1.0])).unwrap(), 1.0);
        assert_eq!(mse(&recs(&[3.0, 4.0])).unwrap(), 12.5);
        assert!(mse(&[]).is_err());
    }

    #[test]
    fn squash_examples() {
        assert_eq!(squash_error(0.0, 2.0), 0.0);
        assert!((squash_error(2.0, 2.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!((squash_error(-2.0, 2.0) - 0.632).abs() < 1e-3);
        assert_eq!(squash_error(f64::INFINITY, 1.0), 1.0);
        assert!(squash_error(1e6, 1.0) <= 1.0);
    }

    #[test]
    fn param_validation() {
        let bad = |ridge_lambda, forgetting| RlsParams {
            ridge_lambda,
            forgetting,
            intercept: true,
        };
        assert!(ReadoutState::new(2, bad(0.0, 1.0)).is_err());
        assert!(ReadoutState::new(2, bad(1.0, 1.1)).is_err());
        assert!(ReadoutState::new(2, bad(1.0, 0.0)).is_err());
        assert!(ReadoutState::new(0, RlsParams::default()).is_err());
    }

    #[test]
    fn records_csv_layout() {
        let mut buf = Vec::new();
        write_records_csv(&[ForecastRecord::new(3, 1.5, 0.5)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,actual,predicted,residual\n3,1.5,0.5,1\n"
        );
    }
}
