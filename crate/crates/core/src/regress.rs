//! Lasso linear regression by coordinate descent, R² evaluation, and the
//! repeated 5-fold cross-validation protocol.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 50_000;

/// A linear prediction function on raw (unstandardized) features.
///
/// Fitting standardizes columns internally; the stored weights and bias are
/// de-standardized so prediction is `sum(w[j] * x[j]) + b` on raw features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hyperplane {
    pub column_names: Vec<String>,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Per-column (shift, scale) used at train time; scale 0 marks a column
    /// that was constant in training (its weight is forced to 0).
    pub scaling: Vec<(f64, f64)>,
    pub lambda: f64,
    pub converged: bool,
}

impl Hyperplane {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.bias
            + self
                .weights
                .iter()
                .zip(row)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.predict_row(r)).collect()
    }
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn check_finite(rows: &[Vec<f64>], y: &[f64]) -> Result<()> {
    if rows.iter().any(|r| r.iter().any(|v| !v.is_finite())) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Regress("non-finite value in training data".into()));
    }
    Ok(())
}

/// Minimizes (1/2n)||y - Xw - b||^2 + lambda * ||w||_1 by cyclic coordinate
/// descent on internally standardized columns.
///
/// Convergence is declared when the largest coordinate update in a sweep is
/// below `tol`. Running out of iterations is not an error: the result comes
/// back with `converged = false`.
pub fn lasso_fit(
    rows: &[Vec<f64>],
    y: &[f64],
    column_names: &[String],
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Hyperplane> {
    let n = rows.len();
    let k = column_names.len();
    if n < 2 || y.len() != n {
        return Err(Error::Regress(format!(
            "need at least 2 rows and matching targets (got {n} rows, {} targets)",
            y.len()
        )));
    }
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::Regress("ragged feature rows".into()));
    }
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::Regress(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    check_finite(rows, y)?;

    let nf = n as f64;
    let y_mean = y.iter().sum::<f64>() / nf;
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    // Standardize columns; constant columns are dropped from the fit.
    let mut shift = vec![0.0; k];
    let mut scale = vec![0.0; k];
    let mut active = Vec::new();
    for j in 0..k {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / nf;
        let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / nf;
        shift[j] = mean;
        if var.sqrt() > 1e-12 {
            scale[j] = var.sqrt();
            active.push(j);
        }
    }
    let xs: Vec<Vec<f64>> = active
        .iter()
        .map(|&j| rows.iter().map(|r| (r[j] - shift[j]) / scale[j]).collect())
        .collect();

    let mut w = vec![0.0f64; active.len()];
    let mut resid = yc.clone();
    let objective = |w: &[f64], resid: &[f64]| -> f64 {
        resid.iter().map(|r| r * r).sum::<f64>() / (2.0 * nf)
            + lambda * w.iter().map(|v| v.abs()).sum::<f64>()
    };
    let mut prev_obj = objective(&w, &resid);
    let mut converged = false;
    for _ in 0..max_iter {
        let mut max_delta = 0.0f64;
        for (jj, xj) in xs.iter().enumerate() {
            let old = w[jj];
            // With unit-variance columns the coordinate update is a plain
            // soft threshold of the partial correlation.
            let rho = xj.iter().zip(&resid).map(|(x, r)| x * r).sum::<f64>() / nf + old;
            let new = soft_threshold(rho, lambda);
            if new != old {
                let delta = new - old;
                for (r, x) in resid.iter_mut().zip(xj) {
                    *r -= delta * x;
                }
                w[jj] = new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        let obj = objective(&w, &resid);
        assert!(
            obj <= prev_obj + 1e-9 * (1.0 + prev_obj.abs()),
            "coordinate descent objective increased: {prev_obj} -> {obj}"
        );
        prev_obj = obj;
        if max_delta < tol {
            converged = true;
            break;
        }
    }

    // De-standardize.
    let mut weights = vec![0.0f64; k];
    for (jj, &j) in active.iter().enumerate() {
        weights[j] = w[jj] / scale[j];
    }
    let bias = y_mean - weights.iter().zip(&shift).map(|(w, s)| w * s).sum::<f64>();
    Ok(Hyperplane {
        column_names: column_names.to_vec(),
        weights,
        bias,
        scaling: shift.into_iter().zip(scale).collect(),
        lambda,
        converged,
    })
}

/// Largest KKT violation of a fitted hyperplane on its training data, in the
/// standardized problem. At an exact optimum this is 0; after convergence at
/// tolerance `tol` it should stay within a small multiple of `tol`.
pub fn kkt_max_violation(rows: &[Vec<f64>], y: &[f64], h: &Hyperplane) -> f64 {
    let n = rows.len() as f64;
    let y_mean = y.iter().sum::<f64>() / n;
    let pred = h.predict(rows);
    let resid: Vec<f64> = y.iter().zip(&pred).map(|(a, p)| a - p).collect();
    let mut worst = 0.0f64;
    for j in 0..h.weights.len() {
        let (shift, scale) = h.scaling[j];
        if scale == 0.0 {
            continue;
        }
        let grad = -rows
            .iter()
            .zip(&resid)
            .map(|(r, res)| (r[j] - shift) / scale * res)
            .sum::<f64>()
            / n;
        let w_std = h.weights[j] * scale;
        let viol = if w_std != 0.0 {
            (grad + h.lambda * w_std.signum()).abs()
        } else {
            (grad.abs() - h.lambda).max(0.0)
        };
        worst = worst.max(viol);
    }
    let _ = y_mean;
    worst
}

/// Coefficient of determination: 1 - SS_res / SS_tot. Negative when the
/// predictor does worse than the mean.
pub fn r_squared(h: &Hyperplane, rows: &[Vec<f64>], y: &[f64]) -> Result<f64> {
    if y.len() < 2 {
        return Err(Error::Regress("R^2 needs at least two observations".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Regress("R^2 undefined for constant targets".into()));
    }
    let pred = h.predict(rows);
    let ss_res: f64 = y.iter().zip(&pred).map(|(a, p)| (a - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Cross-validation report: 10 repetitions of 5-fold CV, 50 fold scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub seed: u64,
    pub lambda: f64,
    pub per_fold_r2: Vec<f64>,
    pub median_r2: f64,
}

pub const CV_REPETITIONS: usize = 10;
pub const CV_FOLDS: usize = 5;

/// Deterministic Fisher-Yates shuffle driven by a seeded ChaCha12 stream.
fn shuffle(idx: &mut [usize], rng: &mut ChaCha12Rng) {
    for i in (1..idx.len()).rev() {
        // Lemire-style bounded draw; bias is negligible and the stream is
        // fixed, which is what reproducibility needs.
        let j = ((rng.next_u64() as u128 * (i as u128 + 1)) >> 64) as usize;
        idx.swap(i, j);
    }
}

/// Runs 10 repetitions of 5-fold cross validation and reports the 50 fold
/// scores and their exact median. Deterministic given the seed.
pub fn cross_validate(
    rows: &[Vec<f64>],
    y: &[f64],
    column_names: &[String],
    lambda: f64,
    seed: u64,
) -> Result<CvReport> {
    let n = rows.len();
    if n < 2 * CV_FOLDS {
        return Err(Error::Regress(format!(
            "need at least {} rows for {CV_FOLDS}-fold cross validation, got {n}",
            2 * CV_FOLDS
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut scores = Vec::with_capacity(CV_REPETITIONS * CV_FOLDS);
    for _ in 0..CV_REPETITIONS {
        let mut idx: Vec<usize> = (0..n).collect();
        shuffle(&mut idx, &mut rng);
        // Round-robin assignment keeps fold sizes within 1 of each other.
        let mut folds: Vec<Vec<usize>> = vec![Vec::new(); CV_FOLDS];
        for (i, &r) in idx.iter().enumerate() {
            folds[i % CV_FOLDS].push(r);
        }
        for test in &folds {
            let train: Vec<usize> = idx.iter().copied().filter(|r| !test.contains(r)).collect();
            let tr_rows: Vec<Vec<f64>> = train.iter().map(|&r| rows[r].clone()).collect();
            let tr_y: Vec<f64> = train.iter().map(|&r| y[r]).collect();
            let h = lasso_fit(
                &tr_rows,
                &tr_y,
                column_names,
                lambda,
                DEFAULT_TOL,
                DEFAULT_MAX_ITER,
            )?;
            let te_rows: Vec<Vec<f64>> = test.iter().map(|&r| rows[r].clone()).collect();
            let te_y: Vec<f64> = test.iter().map(|&r| y[r]).collect();
            scores.push(r_squared(&h, &te_rows, &te_y)?);
        }
    }
    let median = exact_median(&scores);
    Ok(CvReport {
        seed,
        lambda,
        per_fold_r2: scores,
        median_r2: median,
    })
}

fn exact_median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub const MODEL_FORMAT: &str = "property-model-v1";

/// The trained-model artifact: the hyperplane plus training metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub property: String,
    pub seed: u64,
    pub cv_median_r2: Option<f64>,
    pub hyperplane: Hyperplane,
}

pub fn write_model_json(model: &ModelFile, path: &std::path::Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(model)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_model_json(path: &std::path::Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path)?;
    let model: ModelFile = serde_json::from_str(&text)?;
    if model.format != MODEL_FORMAT {
        return Err(Error::Regress(format!(
            "unsupported model format {:?} (expected {MODEL_FORMAT:?})",
            model.format
        )));
    }
    if model.hyperplane.column_names.len() != model.hyperplane.weights.len() {
        return Err(Error::Regress("model column/weight length mismatch".into()));
    }
    Ok(model)
}

/// The default selection grid: 13 log-spaced points from 1e-4 to 1e1.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..13)
        .map(|k| 10f64.powf(-4.0 + 5.0 * k as f64 / 12.0))
        .collect()
}

/// Picks the grid lambda with the best mean CV R². Returns the winner and the
/// per-lambda mean scores.
pub fn select_lambda(
    rows: &[Vec<f64>],
    y: &[f64],
    column_names: &[String],
    grid: &[f64],
    seed: u64,
) -> Result<(f64, Vec<(f64, f64)>)> {
    if grid.is_empty() {
        return Err(Error::Regress("empty lambda grid".into()));
    }
    let mut scored = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let report = cross_validate(rows, y, column_names, lambda, seed)?;
        let mean = report.per_fold_r2.iter().sum::<f64>() / report.per_fold_r2.len() as f64;
        scored.push((lambda, mean));
    }
    let best = scored
        .iter()
        .copied()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap()
        .0;
    Ok((best, scored))
}
