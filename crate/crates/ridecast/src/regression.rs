//! Preprocessing and linear models: ordinary least squares, Ridge, Lasso,
//! ElasticNet (cyclic coordinate descent), plus constant baselines.
//!
//! All penalized objectives scale the loss as 1/(2n) so a given α means the
//! same thing across fold sizes:
//!
//! - Ridge: (1/2n)‖y − Xβ − b‖² + (α/2)‖β‖², closed form on centered data.
//! - Lasso / ElasticNet: (1/2n)‖y − Xβ − b‖² + α(l1·‖β‖₁ + (1−l1)/2·‖β‖²),
//!   minimized by cyclic coordinate descent with per-coordinate
//!   soft-thresholding. The intercept is never penalized.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RidecastError};
use crate::schema::{self, FeatureConfig};

/// Coordinate descent stops when no coefficient moved more than this in a
/// full sweep.
pub const CD_TOL: f64 = 1e-6;

/// Sweep budget before giving up and returning the best iterate flagged as
/// unconverged.
pub const CD_MAX_ITER: usize = 10_000;

/// Ridge jitter added to the normal equations when the plain OLS system is
/// singular (duplicated or constant columns).
pub const OLS_JITTER: f64 = 1e-10;

/// Median-imputation followed by z-score standardization, with all
/// statistics taken from the training rows handed to [`Preprocessor::fit`].
/// A feature with zero variance standardizes to 0 whatever the input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub medians: Vec<f64>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Preprocessor {
    pub fn fit(rows: &[Vec<Option<f64>>]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(RidecastError::InsufficientData(format!(
                "preprocessor needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(RidecastError::SchemaMismatch {
                expected: format!("{width} columns in every row"),
                actual: "ragged rows".into(),
            });
        }

        let mut medians = Vec::with_capacity(width);
        for j in 0..width {
            let mut present: Vec<f64> = rows.iter().filter_map(|r| r[j]).collect();
            present.sort_by(|a, b| a.partial_cmp(b).unwrap());
            medians.push(match present.len() {
                0 => 0.0,
                n if n % 2 == 1 => present[n / 2],
                n => (present[n / 2 - 1] + present[n / 2]) / 2.0,
            });
        }

        let n = rows.len() as f64;
        let mut means = vec![0.0; width];
        for row in rows {
            for j in 0..width {
                means[j] += row[j].unwrap_or(medians[j]);
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut stds = vec![0.0; width];
        for row in rows {
            for j in 0..width {
                let v = row[j].unwrap_or(medians[j]);
                stds[j] += (v - means[j]).powi(2);
            }
        }
        for s in &mut stds {
            *s = (*s / n).sqrt();
        }

        Ok(Preprocessor {
            medians,
            means,
            stds,
        })
    }

    /// Impute then standardize one row.
    pub fn transform(&self, row: &[Option<f64>]) -> Result<Vec<f64>> {
        if row.len() != self.medians.len() {
            return Err(RidecastError::SchemaMismatch {
                expected: format!("{} feature values", self.medians.len()),
                actual: format!("{}", row.len()),
            });
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(j, v)| {
                if self.stds[j] == 0.0 {
                    0.0
                } else {
                    (v.unwrap_or(self.medians[j]) - self.means[j]) / self.stds[j]
                }
            })
            .collect())
    }

    pub fn transform_matrix(&self, rows: &[Vec<Option<f64>>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }

    pub fn width(&self) -> usize {
        self.medians.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PenaltyKind {
    Ols,
    Ridge,
    Lasso,
    ElasticNet,
}

impl std::fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PenaltyKind::Ols => "ols",
            PenaltyKind::Ridge => "ridge",
            PenaltyKind::Lasso => "lasso",
            PenaltyKind::ElasticNet => "elasticnet",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub alpha: f64,
    pub l1_ratio: f64,
}

impl PenaltySpec {
    pub fn ols() -> Self {
        PenaltySpec {
            kind: PenaltyKind::Ols,
            alpha: 0.0,
            l1_ratio: 0.0,
        }
    }

    pub fn ridge(alpha: f64) -> Self {
        PenaltySpec {
            kind: PenaltyKind::Ridge,
            alpha,
            l1_ratio: 0.0,
        }
    }

    pub fn lasso(alpha: f64) -> Self {
        PenaltySpec {
            kind: PenaltyKind::Lasso,
            alpha,
            l1_ratio: 1.0,
        }
    }

    pub fn elasticnet(alpha: f64, l1_ratio: f64) -> Self {
        PenaltySpec {
            kind: PenaltyKind::ElasticNet,
            alpha,
            l1_ratio,
        }
    }
}

/// Raw output of one model fit in standardized feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn predict(&self, z: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(z)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }
}

fn check_shape(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.is_empty() || x.len() != y.len() {
        return Err(RidecastError::InvalidConfig(format!(
            "design matrix has {} rows but target has {}",
            x.len(),
            y.len()
        )));
    }
    let p = x[0].len();
    if x.iter().any(|r| r.len() != p) {
        return Err(RidecastError::InvalidConfig("ragged design matrix".into()));
    }
    Ok(p)
}

/// Column means and the centered design/target.
fn center(x: &[Vec<f64>], y: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>, f64) {
    let n = x.len();
    let p = x[0].len();
    let mut col_means = vec![0.0; p];
    for row in x {
        for j in 0..p {
            col_means[j] += row[j];
        }
    }
    for m in &mut col_means {
        *m /= n as f64;
    }
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let xc: Vec<Vec<f64>> = x
        .iter()
        .map(|row| row.iter().zip(&col_means).map(|(v, m)| v - m).collect())
        .collect();
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    (xc, col_means, yc, y_mean)
}

fn intercept_from(col_means: &[f64], y_mean: f64, beta: &[f64]) -> f64 {
    y_mean
        - col_means
            .iter()
            .zip(beta)
            .map(|(m, b)| m * b)
            .sum::<f64>()
}

/// Solve A·x = b by Gaussian elimination with partial pivoting. `None` when
/// a pivot degenerates relative to the matrix scale.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    for k in 0..n {
        let pivot_row = (k..n)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .unwrap();
        if a[pivot_row][k].abs() < 1e-12 * scale {
            return None;
        }
        a.swap(k, pivot_row);
        b.swap(k, pivot_row);
        for i in k + 1..n {
            let factor = a[i][k] / a[k][k];
            if factor == 0.0 {
                continue;
            }
            for j in k..n {
                a[i][j] -= factor * a[k][j];
            }
            b[i] -= factor * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let tail: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - tail) / a[k][k];
    }
    Some(x)
}

/// Gram matrix XᵀX/n and moment vector Xᵀy/n of centered data.
fn gram(xc: &[Vec<f64>], yc: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = xc.len() as f64;
    let p = xc[0].len();
    let mut a = vec![vec![0.0; p]; p];
    let mut v = vec![0.0; p];
    for (row, &yi) in xc.iter().zip(yc) {
        for j in 0..p {
            v[j] += row[j] * yi;
            for k in j..p {
                a[j][k] += row[j] * row[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            a[j][k] = a[k][j];
        }
    }
    for row in &mut a {
        for e in row.iter_mut() {
            *e /= n;
        }
    }
    for e in &mut v {
        *e /= n;
    }
    (a, v)
}

/// Ordinary least squares via the normal equations, falling back to a tiny
/// ridge jitter when the system is singular (duplicated or constant
/// columns).
pub fn fit_ols(x: &[Vec<f64>], y: &[f64]) -> Result<FitResult> {
    let p = check_shape(x, y)?;
    if x.len() <= p {
        return Err(RidecastError::InsufficientData(format!(
            "ordinary least squares needs more rows ({}) than columns ({p})",
            x.len()
        )));
    }
    let (xc, col_means, yc, y_mean) = center(x, y);
    let (a, v) = gram(&xc, &yc);

    let beta = solve_linear(a.clone(), v.clone()).or_else(|| {
        let mut jittered = a;
        for (j, row) in jittered.iter_mut().enumerate() {
            row[j] += OLS_JITTER;
        }
        solve_linear(jittered, v)
    });
    let beta = beta.ok_or_else(|| {
        RidecastError::SingularSystem(
            "normal equations stayed singular after ridge jitter".into(),
        )
    })?;

    let intercept = intercept_from(&col_means, y_mean, &beta);
    Ok(FitResult {
        coefficients: beta,
        intercept,
        converged: true,
        iterations: 1,
    })
}

/// Ridge regression, closed form on centered data:
/// (XᵀX/n + αI) β = Xᵀy/n.
pub fn fit_ridge(x: &[Vec<f64>], y: &[f64], alpha: f64) -> Result<FitResult> {
    check_shape(x, y)?;
    if alpha < 0.0 {
        return Err(RidecastError::InvalidConfig(format!(
            "ridge penalty must be non-negative, got {alpha}"
        )));
    }
    let (xc, col_means, yc, y_mean) = center(x, y);
    let (mut a, v) = gram(&xc, &yc);
    for (j, row) in a.iter_mut().enumerate() {
        row[j] += alpha;
    }
    let beta = solve_linear(a, v).ok_or_else(|| {
        RidecastError::SingularSystem("ridge system unexpectedly singular".into())
    })?;
    let intercept = intercept_from(&col_means, y_mean, &beta);
    Ok(FitResult {
        coefficients: beta,
        intercept,
        converged: true,
        iterations: 1,
    })
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn elasticnet_objective(residual: &[f64], beta: &[f64], alpha: f64, l1_ratio: f64) -> f64 {
    let n = residual.len() as f64;
    let sse: f64 = residual.iter().map(|r| r * r).sum();
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let l2: f64 = beta.iter().map(|b| b * b).sum();
    sse / (2.0 * n) + alpha * (l1_ratio * l1 + (1.0 - l1_ratio) / 2.0 * l2)
}

/// Cyclic coordinate descent for the ElasticNet objective. `tol` bounds the
/// largest coefficient move in the final sweep; on hitting `max_iter` the
/// best iterate is returned with `converged = false` rather than an error.
pub fn fit_elasticnet_with(
    x: &[Vec<f64>],
    y: &[f64],
    alpha: f64,
    l1_ratio: f64,
    tol: f64,
    max_iter: usize,
) -> Result<FitResult> {
    let p = check_shape(x, y)?;
    if alpha < 0.0 || !(0.0..=1.0).contains(&l1_ratio) {
        return Err(RidecastError::InvalidConfig(format!(
            "need alpha ≥ 0 and l1_ratio in [0,1], got alpha={alpha}, l1_ratio={l1_ratio}"
        )));
    }
    let n = x.len() as f64;
    let (xc, col_means, yc, y_mean) = center(x, y);

    // per-column squared norms of the centered design
    let col_sq: Vec<f64> = (0..p)
        .map(|j| xc.iter().map(|r| r[j] * r[j]).sum())
        .collect();

    let mut beta = vec![0.0; p];
    let mut residual = yc.clone();
    let mut iterations = 0;
    let mut converged = false;
    let mut objective = elasticnet_objective(&residual, &beta, alpha, l1_ratio);

    while iterations < max_iter {
        iterations += 1;
        let mut max_change = 0.0f64;
        for j in 0..p {
            if col_sq[j] <= 1e-12 {
                continue; // constant column: coefficient pinned at 0
            }
            let old = beta[j];
            // ρ_j: the j-th partial residual correlation with β_j added back
            let rho = xc
                .iter()
                .zip(&residual)
                .map(|(r, &res)| r[j] * res)
                .sum::<f64>()
                / n
                + col_sq[j] / n * old;
            let new = soft_threshold(rho, alpha * l1_ratio)
                / (col_sq[j] / n + alpha * (1.0 - l1_ratio));
            if new != old {
                for (row, res) in xc.iter().zip(residual.iter_mut()) {
                    *res += row[j] * (old - new);
                }
                beta[j] = new;
            }
            max_change = max_change.max((new - old).abs());
        }

        if cfg!(debug_assertions) {
            let next = elasticnet_objective(&residual, &beta, alpha, l1_ratio);
            debug_assert!(
                next <= objective + 1e-10 * objective.abs().max(1.0),
                "objective rose from {objective} to {next} on sweep {iterations}"
            );
            objective = next;
        }

        if max_change < tol {
            converged = true;
            break;
        }
    }

    let intercept = intercept_from(&col_means, y_mean, &beta);
    Ok(FitResult {
        coefficients: beta,
        intercept,
        converged,
        iterations,
    })
}

pub fn fit_elasticnet(x: &[Vec<f64>], y: &[f64], alpha: f64, l1_ratio: f64) -> Result<FitResult> {
    fit_elasticnet_with(x, y, alpha, l1_ratio, CD_TOL, CD_MAX_ITER)
}

pub fn fit_lasso(x: &[Vec<f64>], y: &[f64], alpha: f64) -> Result<FitResult> {
    fit_elasticnet(x, y, alpha, 1.0)
}

/// Dispatch on the penalty spec.
pub fn fit_spec(x: &[Vec<f64>], y: &[f64], spec: &PenaltySpec) -> Result<FitResult> {
    match spec.kind {
        PenaltyKind::Ols => fit_ols(x, y),
        PenaltyKind::Ridge => fit_ridge(x, y, spec.alpha),
        PenaltyKind::Lasso => fit_lasso(x, y, spec.alpha),
        PenaltyKind::ElasticNet => fit_elasticnet(x, y, spec.alpha, spec.l1_ratio),
    }
}

/// Mean absolute error in target units (minutes).
pub fn mae(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != actuals.len() {
        return Err(RidecastError::InvalidConfig(format!(
            "MAE needs matched non-empty series, got {} and {}",
            predictions.len(),
            actuals.len()
        )));
    }
    Ok(predictions
        .iter()
        .zip(actuals)
        .map(|(p, a)| (p - a).abs())
        .sum::<f64>()
        / predictions.len() as f64)
}

/// Coefficient of determination, 1 − SS_res/SS_tot.
pub fn r2(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    if predictions.len() != actuals.len() || actuals.len() < 2 {
        return Err(RidecastError::InvalidConfig(format!(
            "R² needs at least 2 matched observations, got {} and {}",
            predictions.len(),
            actuals.len()
        )));
    }
    let mean = actuals.iter().sum::<f64>() / actuals.len() as f64;
    let ss_tot: f64 = actuals.iter().map(|a| (a - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(RidecastError::ZeroVariance(
            "R² is undefined on constant actuals".into(),
        ));
    }
    let ss_res: f64 = predictions
        .iter()
        .zip(actuals)
        .map(|(p, a)| (p - a).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Constant predictors fit on a training target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub mean: f64,
    pub median: f64,
}

pub fn baselines(y_train: &[f64]) -> Result<Baselines> {
    if y_train.is_empty() {
        return Err(RidecastError::EmptyInput("baseline target".into()));
    }
    let mean = y_train.iter().sum::<f64>() / y_train.len() as f64;
    let mut sorted = y_train.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
    };
    Ok(Baselines { mean, median })
}

/// A fully assembled predictor: preprocessor plus linear coefficients in
/// standardized space, tagged with the schema it was trained under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedLinearModel {
    pub schema_version: String,
    pub config: FeatureConfig,
    pub feature_names: Vec<String>,
    pub preprocessor: Preprocessor,
    pub penalty: PenaltySpec,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl TrainedLinearModel {
    pub fn assemble(
        config: FeatureConfig,
        feature_names: Vec<String>,
        preprocessor: Preprocessor,
        penalty: PenaltySpec,
        fit: FitResult,
    ) -> Self {
        TrainedLinearModel {
            schema_version: schema::SCHEMA_VERSION.to_string(),
            config,
            feature_names,
            preprocessor,
            penalty,
            coefficients: fit.coefficients,
            intercept: fit.intercept,
            converged: fit.converged,
            iterations: fit.iterations,
        }
    }

    /// Predicted moving time in minutes for one raw feature row.
    pub fn predict(&self, row: &[Option<f64>]) -> Result<f64> {
        if row.len() != self.feature_names.len() {
            return Err(RidecastError::SchemaMismatch {
                expected: format!("{} features", self.feature_names.len()),
                actual: format!("{}", row.len()),
            });
        }
        let z = self.preprocessor.transform(row)?;
        Ok(self.predict_standardized(&z))
    }

    pub fn predict_standardized(&self, z: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(z)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    pub fn to_json_file(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, serde_json::to_vec_pretty(self)?)?)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let model: TrainedLinearModel = serde_json::from_slice(&std::fs::read(path)?)?;
        if model.schema_version != schema::SCHEMA_VERSION {
            return Err(RidecastError::SchemaMismatch {
                expected: schema::SCHEMA_VERSION.to_string(),
                actual: model.schema_version,
            });
        }
        Ok(model)
    }
}

/// Fit a model on an entire dataset: preprocessor on all rows, then the
/// requested penalty on the standardized matrix.
pub fn train_full(dataset: &crate::dataset::Dataset, spec: &PenaltySpec) -> Result<TrainedLinearModel> {
    let raw: Vec<Vec<Option<f64>>> = dataset.rows.iter().map(|r| r.values.clone()).collect();
    let preprocessor = Preprocessor::fit(&raw)?;
    let x = preprocessor.transform_matrix(&raw)?;
    let y = dataset.targets();
    let fit = fit_spec(&x, &y, spec)?;
    Ok(TrainedLinearModel::assemble(
        dataset.config,
        dataset.schema.clone(),
        preprocessor,
        *spec,
        fit,
    ))
}
