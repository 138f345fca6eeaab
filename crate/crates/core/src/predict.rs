//! Ridge-penalised logistic regression, one model per imputed draw, with
//! predictions averaged over draws.
//!
//! The objective is the summed log-loss plus `λ‖w‖²/2`; the intercept is not
//! penalised.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::ImputationResult;
use crate::error::{Error, Result};
use crate::metrics::auc_score;
use crate::numeric::linalg::mirror_upper;
use crate::numeric::{solve_symmetric, DenseMatrix};

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticSpec {
    #[serde(default = "default_grid")]
    pub penalty_grid: Vec<f64>,
    #[serde(default)]
    pub fixed_penalty: Option<f64>,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    /// Bound on the Euclidean norm of the gradient of the mean (per-row)
    /// objective at convergence.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_true")]
    pub fit_intercept: bool,
}

fn default_grid() -> Vec<f64> {
    vec![0.1, 1.0, 10.0, 100.0]
}

fn default_iterations() -> usize {
    100
}

fn default_tolerance() -> f64 {
    1e-8
}

fn default_true() -> bool {
    true
}

impl Default for LogisticSpec {
    fn default() -> Self {
        Self {
            penalty_grid: default_grid(),
            fixed_penalty: None,
            max_iterations: default_iterations(),
            tolerance: default_tolerance(),
            fit_intercept: true,
        }
    }
}

impl LogisticSpec {
    pub fn fixed(penalty: f64) -> Self {
        Self {
            fixed_penalty: Some(penalty),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .penalty_grid
            .iter()
            .chain(&self.fixed_penalty)
            .any(|&p| !(p > 0.0 && p.is_finite()))
        {
            return Err(Error::Config(
                "penalties must be positive and finite".into(),
            ));
        }
        if self.max_iterations == 0 || !(self.tolerance > 0.0) {
            return Err(Error::Config(
                "solver needs iterations and a positive tolerance".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl DrawModel {
    pub fn zeros(n_features: usize) -> Self {
        Self {
            coefficients: vec![0.0; n_features],
            intercept: 0.0,
            iterations: 0,
            gradient_norm: 0.0,
        }
    }

    pub fn linear_predictor(&self, x: &DenseMatrix, row: usize) -> f64 {
        self.intercept
            + x.row(row)
                .iter()
                .zip(&self.coefficients)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn predict(&self, x: &DenseMatrix) -> Vec<f64> {
        (0..x.rows())
            .map(|i| sigmoid(self.linear_predictor(x, i)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    version: u32,
    pub penalty: f64,
    pub feature_names: Vec<String>,
    pub draws: Vec<DrawModel>,
    /// Tuning AUC per candidate penalty when a tuning set was used.
    pub tuning: Vec<(f64, Option<f64>)>,
}

impl FittedModel {
    pub fn new(penalty: f64, draws: Vec<DrawModel>) -> Result<Self> {
        let width = draws
            .first()
            .map(|d| d.coefficients.len())
            .ok_or_else(|| Error::Config("model needs a draw".into()))?;
        if draws.iter().any(|d| d.coefficients.len() != width) {
            return Err(Error::Schema("draws differ in feature count".into()));
        }
        Ok(Self {
            version: FORMAT_VERSION,
            penalty,
            feature_names: (0..width).map(|j| format!("f{j}")).collect(),
            draws,
            tuning: Vec::new(),
        })
    }

    pub fn n_features(&self) -> usize {
        self.draws[0].coefficients.len()
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features() {
            return Err(Error::Schema(format!(
                "{} feature names for {} features",
                names.len(),
                self.n_features()
            )));
        }
        self.feature_names = names;
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        if model.version != FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "model format version {} is not supported",
                model.version
            )));
        }
        Ok(model)
    }

    /// Mean over draws of each draw model's sigmoid output. Draw counts must
    /// match, or either side may have a single draw (broadcast).
    pub fn predict(&self, data: &ImputationResult) -> Result<Vec<f64>> {
        if data.n_features() != self.n_features() {
            return Err(Error::Schema(format!(
                "model expects {} features, data has {}",
                self.n_features(),
                data.n_features()
            )));
        }
        let m = self.draws.len();
        let d = data.n_draws();
        let pairs: Vec<(usize, usize)> = if m == d {
            (0..m).map(|k| (k, k)).collect()
        } else if d == 1 {
            (0..m).map(|k| (k, 0)).collect()
        } else if m == 1 {
            (0..d).map(|k| (0, k)).collect()
        } else {
            return Err(Error::Schema(format!("model has {m} draws, data has {d}")));
        };
        let per: Vec<Vec<f64>> = pairs
            .par_iter()
            .map(|&(k, t)| self.draws[k].predict(&data.features(t)))
            .collect();
        let n = data.n_rows();
        let scale = 1.0 / per.len() as f64;
        Ok((0..n)
            .map(|i| per.iter().map(|p| p[i]).sum::<f64>() * scale)
            .collect())
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Penalised objective at `(intercept, w)`.
pub fn penalised_loss(x: &DenseMatrix, y: &[bool], intercept: f64, w: &[f64], penalty: f64) -> f64 {
    let model = DrawModel {
        coefficients: w.to_vec(),
        intercept,
        iterations: 0,
        gradient_norm: 0.0,
    };
    let loss: f64 = (0..x.rows())
        .map(|i| {
            let eta = model.linear_predictor(x, i);
            softplus(eta) - if y[i] { eta } else { 0.0 }
        })
        .sum();
    loss + 0.5 * penalty * w.iter().map(|v| v * v).sum::<f64>()
}

/// Gradient `[∂/∂intercept, ∂/∂w…]` of [`penalised_loss`].
pub fn penalised_gradient(
    x: &DenseMatrix,
    y: &[bool],
    intercept: f64,
    w: &[f64],
    penalty: f64,
) -> Vec<f64> {
    let p = w.len();
    let mut g = vec![0.0; p + 1];
    for i in 0..x.rows() {
        let row = x.row(i);
        let eta = intercept + row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
        let r = sigmoid(eta) - y[i] as u8 as f64;
        g[0] += r;
        for (gj, xj) in g[1..].iter_mut().zip(row) {
            *gj += r * xj;
        }
    }
    for (gj, wj) in g[1..].iter_mut().zip(w) {
        *gj += penalty * wj;
    }
    g
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Damped Newton minimisation from `start` (zeros when `None`).
pub fn fit_logistic(
    x: &DenseMatrix,
    y: &[bool],
    penalty: f64,
    spec: &LogisticSpec,
    start: Option<&DrawModel>,
) -> Result<DrawModel> {
    let n = x.rows();
    let p = x.cols();
    if y.len() != n {
        return Err(Error::Schema(
            "outcome length differs from feature rows".into(),
        ));
    }
    let positives = y.iter().filter(|&&v| v).count();
    if positives == 0 || positives == n {
        return Err(Error::Precondition(
            "training outcome has a single class".into(),
        ));
    }
    let mut b = start.map_or(0.0, |s| s.intercept);
    let mut w = start.map_or_else(|| vec![0.0; p], |s| s.coefficients.clone());
    if w.len() != p {
        return Err(Error::Schema(
            "start point has the wrong feature count".into(),
        ));
    }
    let offset = spec.fit_intercept as usize;
    let width = p + offset;
    let mut loss = penalised_loss(x, y, b, &w, penalty);
    let mut grad_norm = f64::INFINITY;

    for iteration in 0..=spec.max_iterations {
        let full = penalised_gradient(x, y, b, &w, penalty);
        let grad: Vec<f64> = if spec.fit_intercept {
            full
        } else {
            full[1..].to_vec()
        };
        grad_norm = norm(&grad) / n as f64;
        if grad_norm <= spec.tolerance {
            return Ok(DrawModel {
                coefficients: w,
                intercept: b,
                iterations: iteration,
                gradient_norm: grad_norm,
            });
        }
        if iteration == spec.max_iterations {
            break;
        }
        // Hessian over [intercept?, w]: Σ s_i z_i z_iᵀ + λ on w.
        let mut h = vec![0.0; width * width];
        let mut z = vec![0.0; width];
        for i in 0..n {
            let row = x.row(i);
            let eta = b + row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
            let pr = sigmoid(eta);
            let s = pr * (1.0 - pr);
            if offset == 1 {
                z[0] = 1.0;
            }
            z[offset..].copy_from_slice(row);
            for a in 0..width {
                let za = s * z[a];
                for c in a..width {
                    h[a * width + c] += za * z[c];
                }
            }
        }
        for j in 0..p {
            h[(offset + j) * width + offset + j] += penalty;
        }
        mirror_upper(&mut h, width);
        let step = solve_symmetric(&h, &grad, 0.0)?;
        let slope: f64 = -step.iter().zip(&grad).map(|(a, c)| a * c).sum::<f64>();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let nb = if offset == 1 { b - t * step[0] } else { b };
            let nw: Vec<f64> = w
                .iter()
                .zip(&step[offset..])
                .map(|(wj, sj)| wj - t * sj)
                .collect();
            let nl = penalised_loss(x, y, nb, &nw, penalty);
            if nl <= loss + 1e-4 * t * slope || (nl <= loss && t < 1e-6) {
                b = nb;
                w = nw;
                loss = nl;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No representable descent left: accept if already at the
            // floating-point floor of the objective.
            if grad_norm <= spec.tolerance.sqrt() {
                return Ok(DrawModel {
                    coefficients: w,
                    intercept: b,
                    iterations: iteration,
                    gradient_norm: grad_norm,
                });
            }
            break;
        }
    }
    Err(Error::Convergence {
        iterations: spec.max_iterations,
        gradient_norm: grad_norm,
    })
}

fn fit_draws(
    data: &ImputationResult,
    y: &[bool],
    penalty: f64,
    spec: &LogisticSpec,
) -> Result<Vec<DrawModel>> {
    (0..data.n_draws())
        .into_par_iter()
        .map(|k| fit_logistic(&data.features(k), y, penalty, spec, None))
        .collect()
}

/// Fits one model per draw. With a tuning set, the penalty maximising the
/// tuning AUC of the averaged prediction is chosen (earlier grid entries win
/// ties); otherwise the fixed penalty is used.
pub fn train(
    data: &ImputationResult,
    outcome: &[bool],
    spec: &LogisticSpec,
    tune: Option<(&ImputationResult, &[bool])>,
) -> Result<FittedModel> {
    spec.validate()?;
    if outcome.len() != data.n_rows() {
        return Err(Error::Schema(
            "outcome length differs from training rows".into(),
        ));
    }
    let Some((tune_data, tune_outcome)) = tune.filter(|_| !spec.penalty_grid.is_empty()) else {
        let penalty = spec
            .fixed_penalty
            .ok_or_else(|| Error::Config("no tuning set and no fixed penalty".into()))?;
        return FittedModel::new(penalty, fit_draws(data, outcome, penalty, spec)?);
    };
    let mut best: Option<(f64, f64, Vec<DrawModel>)> = None;
    let mut tuning = Vec::new();
    let mut last_err = None;
    for &penalty in &spec.penalty_grid {
        let draws = match fit_draws(data, outcome, penalty, spec) {
            Ok(d) => d,
            Err(e) => {
                tuning.push((penalty, None));
                last_err = Some(e);
                continue;
            }
        };
        let candidate = FittedModel::new(penalty, draws.clone())?;
        let score = auc_score(&candidate.predict(tune_data)?, tune_outcome);
        tuning.push((penalty, score));
        let score = score
            .ok_or_else(|| Error::Undefined("tuning AUC needs both outcome classes".into()))?;
        if best.as_ref().is_none_or(|(_, s, _)| score > *s) {
            best = Some((penalty, score, draws));
        }
    }
    let (penalty, _, draws) =
        best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Config("empty penalty grid".into())))?;
    let mut model = FittedModel::new(penalty, draws)?;
    model.tuning = tuning;
    Ok(model)
}
