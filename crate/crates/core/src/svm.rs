//! Cost-sensitive 2nu-SVM with an RBF kernel.
//!
//! Training solves the dual quadratic program
//!
//! ```text
//! maximize  -1/2 sum_ij a_i a_j y_i y_j k(x_i, x_j)
//! subject to 0 <= a_i <= C_i,  sum_i a_i y_i = 0,  sum_i a_i = nu
//! ```
//!
//! with per-class caps `C_i = w_plus / n` for positives and
//! `(1 - w_plus) / n` for negatives. The class-wise error bounds
//! `(nu_plus, nu_minus)` map onto `(nu, w_plus)` via [`map_nu`]; each class
//! then carries exactly `nu / 2` of dual mass, which is what makes
//! `nu_plus` an upper bound on the fraction of positive margin errors and a
//! lower bound on the fraction of positive support vectors (mirrored for
//! the negative class).
//!
//! The solver performs most-violating-pair coordinate updates restricted to
//! same-class pairs: moving mass between two points of one class preserves
//! both linear constraints, so no projection step is ever needed.

use crate::audio_ingest::Label;
use crate::error::{Error, Result};
use crate::jsonio;
use crate::linalg::{squared_distance, Matrix};
use serde::{Deserialize, Serialize};

/// Hyper-parameters of one 2nu-SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmHyper {
    /// Bound on the positive-class margin-error fraction, in (0, 1].
    pub nu_plus: f64,
    /// Bound on the negative-class margin-error fraction, in (0, 1].
    pub nu_minus: f64,
    /// RBF kernel width: k(a, b) = exp(-gamma ||a - b||^2).
    pub gamma: f64,
    /// KKT violation below which the solver stops (default 1e-6).
    pub tolerance: f64,
    /// Maximum number of sweeps (default 10_000).
    pub max_passes: usize,
}

impl SvmHyper {
    pub fn new(nu_plus: f64, nu_minus: f64, gamma: f64) -> Self {
        SvmHyper {
            nu_plus,
            nu_minus,
            gamma,
            tolerance: 1e-6,
            max_passes: 10_000,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("nu_plus", self.nu_plus), ("nu_minus", self.nu_minus)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in (0, 1], got {v}"
                )));
            }
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.tolerance > 0.0) || self.max_passes == 0 {
            return Err(Error::InvalidConfig(
                "tolerance must be positive and max_passes at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// The RBF gamma grid used to build model libraries: odd powers of two
/// from 2^-5 to 2^5.
pub fn default_gamma_grid() -> Vec<f64> {
    [-5i32, -3, -1, 1, 3, 5].iter().map(|&e| 2f64.powi(e)).collect()
}

/// The nu grid used for both nu_plus and nu_minus.
pub fn default_nu_grid() -> Vec<f64> {
    vec![
        1e-5, 3e-5, 1e-4, 3e-4, 0.001, 0.003, 0.01, 0.03, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7,
        0.8, 0.9, 1.0,
    ]
}

/// A trained 2nu-SVM: support vectors, dual coefficients, bias and margin
/// offset.
#[derive(Debug, Clone)]
pub struct SvmModel {
    pub support_vectors: Matrix,
    pub alphas: Vec<f64>,
    /// +1 / -1 per support vector.
    pub labels: Vec<f64>,
    pub bias: f64,
    /// Margin offset; interior support vectors satisfy y f(x) = rho.
    pub rho: f64,
    pub hyper: SvmHyper,
    /// Set when the recovered margin offset collapsed to zero (degenerate
    /// grid corner); the model still scores, but the margin is meaningless.
    pub rho_degenerate: bool,
}

/// RBF kernel exp(-gamma ||a - b||^2).
pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "rbf_kernel",
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok((-gamma * squared_distance(a, b)).exp())
}

/// Maps the per-class bounds (nu_plus, nu_minus) to the aggregate dual
/// parameters (nu, w_plus):
///
/// ```text
/// w_plus = nu_minus * n_minus / (nu_plus * n_plus + nu_minus * n_minus)
/// nu     = 2 * nu_plus * nu_minus * n_plus * n_minus
///          / (n * (nu_plus * n_plus + nu_minus * n_minus))
/// ```
///
/// Under this mapping each class holds nu/2 of dual mass against a cap of
/// `C_c * n_c`, and the ratio of the two is exactly nu_plus (resp.
/// nu_minus), which yields the class-wise margin-error and support-vector
/// bounds checked in the test suite.
pub fn map_nu(nu_plus: f64, nu_minus: f64, n_plus: usize, n_minus: usize) -> Result<(f64, f64)> {
    if n_plus == 0 || n_minus == 0 {
        return Err(Error::ClassAbsent {
            class: if n_plus == 0 { "positive" } else { "negative" },
        });
    }
    for (name, v) in [("nu_plus", nu_plus), ("nu_minus", nu_minus)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "{name} must lie in (0, 1], got {v}"
            )));
        }
    }
    let (np, nm) = (n_plus as f64, n_minus as f64);
    let n = np + nm;
    let denom = nu_plus * np + nu_minus * nm;
    let w_plus = nu_minus * nm / denom;
    let nu = 2.0 * nu_plus * nu_minus * np * nm / (n * denom);
    Ok((nu, w_plus))
}

/// Trains a 2nu-SVM on the given rows.
pub fn train_2nu(features: &Matrix, labels: &[Label], hyper: &SvmHyper) -> Result<SvmModel> {
    hyper.validate()?;
    let n = features.rows();
    if n == 0 {
        return Err(Error::EmptyInput { context: "svm train" });
    }
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            context: "svm train labels",
            left: n,
            right: labels.len(),
        });
    }
    if !features.all_finite() {
        return Err(Error::NonFinite {
            context: "svm training features".into(),
        });
    }
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let pos_idx: Vec<usize> = (0..n).filter(|&i| y[i] > 0.0).collect();
    let neg_idx: Vec<usize> = (0..n).filter(|&i| y[i] < 0.0).collect();
    let (n_pos, n_neg) = (pos_idx.len(), neg_idx.len());
    let (nu, w_plus) = map_nu(hyper.nu_plus, hyper.nu_minus, n_pos, n_neg)?;

    let cap_pos = w_plus / n as f64;
    let cap_neg = (1.0 - w_plus) / n as f64;
    let cap: Vec<f64> = (0..n)
        .map(|i| if y[i] > 0.0 { cap_pos } else { cap_neg })
        .collect();

    // Per-class uniform start: each class carries exactly nu/2, and
    // nu / (2 n_c) <= C_c holds whenever nu_plus, nu_minus <= 1, so the
    // start is feasible without projection.
    let mut alpha = vec![0.0; n];
    for &i in &pos_idx {
        alpha[i] = nu / (2.0 * n_pos as f64);
    }
    for &i in &neg_idx {
        alpha[i] = nu / (2.0 * n_neg as f64);
    }

    // Full Gram matrix; training sets here stay small enough.
    let gram: Vec<f64> = {
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            k[i * n + i] = 1.0;
            for j in 0..i {
                let v = (-hyper.gamma * squared_distance(features.row(i), features.row(j))).exp();
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    };

    // f_tilde[k] = sum_j alpha_j y_j K_jk (the score without bias)
    let mut f_tilde = vec![0.0; n];
    for k in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            s += alpha[j] * y[j] * gram[j * n + k];
        }
        f_tilde[k] = s;
    }

    // Most violating pair within one class: raising alpha where
    // g = y * f_tilde is smallest and lowering it where g is largest
    // improves the objective while preserving both constraints.
    let select = |class: &[usize], alpha: &[f64], f_tilde: &[f64]| -> Option<(usize, usize, f64)> {
        let mut up: Option<(usize, f64)> = None;
        let mut down: Option<(usize, f64)> = None;
        for &i in class {
            let g = y[i] * f_tilde[i];
            if alpha[i] < cap[i] && up.map_or(true, |(_, best)| g < best) {
                up = Some((i, g));
            }
            if alpha[i] > 0.0 && down.map_or(true, |(_, best)| g > best) {
                down = Some((i, g));
            }
        }
        match (up, down) {
            (Some((i, gi)), Some((j, gj))) if i != j => Some((i, j, gj - gi)),
            _ => None,
        }
    };

    // Scores f_tilde are bounded by sum(alpha) = nu, so the KKT violation
    // lives on the nu scale; the stopping threshold must scale with it or
    // small-nu problems would stop far from the optimum.
    let tol = hyper.tolerance * nu;
    let mut last_violation = f64::INFINITY;
    let mut converged = false;
    'sweeps: for _pass in 0..hyper.max_passes {
        for _ in 0..n.max(2) {
            let mut round_violation = 0.0f64;
            let mut moved = false;
            for class in [&pos_idx, &neg_idx] {
                if let Some((i, j, violation)) = select(class, &alpha, &f_tilde) {
                    round_violation = round_violation.max(violation);
                    if violation <= tol {
                        continue;
                    }
                    let eta = gram[i * n + i] - 2.0 * gram[i * n + j] + gram[j * n + j];
                    let step_max = (cap[i] - alpha[i]).min(alpha[j]);
                    let step = if eta > 1e-14 {
                        (violation / eta).min(step_max)
                    } else {
                        step_max
                    };
                    if step <= 0.0 {
                        continue;
                    }
                    alpha[i] += step;
                    alpha[j] -= step;
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                    }
                    let yc = y[i];
                    for k in 0..n {
                        f_tilde[k] += step * yc * (gram[i * n + k] - gram[j * n + k]);
                    }
                    moved = true;
                }
            }
            last_violation = round_violation;
            if round_violation <= tol {
                converged = true;
                break 'sweeps;
            }
            if !moved {
                break;
            }
        }
    }
    if !converged && last_violation > tol {
        return Err(Error::SvmNonConvergence {
            kkt_violation: last_violation,
            passes: hyper.max_passes,
        });
    }

    // Recover bias and margin offset. Interior support vectors of class c
    // pin u_c exactly (u_+ = rho - b, u_- = -(rho + b)); otherwise the KKT
    // conditions bracket u_c between the bound-constrained scores.
    let u_for_class = |class: &[usize], positive: bool| -> f64 {
        let guard = |c: f64| c * 1e-8;
        let interior: Vec<f64> = class
            .iter()
            .filter(|&&i| alpha[i] > guard(cap[i]) && alpha[i] < cap[i] - guard(cap[i]))
            .map(|&i| f_tilde[i])
            .collect();
        if !interior.is_empty() {
            return interior.iter().sum::<f64>() / interior.len() as f64;
        }
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for &i in class {
            let at_cap = alpha[i] >= cap[i] - guard(cap[i]);
            let at_zero = alpha[i] <= guard(cap[i]);
            // positives: u <= f for alpha = 0, u >= f at the cap
            // negatives: u >= f for alpha = 0, u <= f at the cap
            if positive {
                if at_cap {
                    lo = lo.max(f_tilde[i]);
                } else if at_zero {
                    hi = hi.min(f_tilde[i]);
                }
            } else if at_cap {
                hi = hi.min(f_tilde[i]);
            } else if at_zero {
                lo = lo.max(f_tilde[i]);
            }
        }
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        }
    };
    let u_pos = u_for_class(&pos_idx, true);
    let u_neg = u_for_class(&neg_idx, false);
    let bias = -0.5 * (u_pos + u_neg);
    let rho_raw = 0.5 * (u_pos - u_neg);
    let rho_degenerate = rho_raw <= 1e-12;
    let rho = rho_raw.max(0.0);

    // Keep only rows with nonzero dual coefficient.
    let sv_idx: Vec<usize> = (0..n).filter(|&i| alpha[i] > 0.0).collect();
    let support_vectors = features.select_rows(&sv_idx);
    let alphas: Vec<f64> = sv_idx.iter().map(|&i| alpha[i]).collect();
    let sv_labels: Vec<f64> = sv_idx.iter().map(|&i| y[i]).collect();

    Ok(SvmModel {
        support_vectors,
        alphas,
        labels: sv_labels,
        bias,
        rho,
        hyper: hyper.clone(),
        rho_degenerate,
    })
}

impl SvmModel {
    /// Classification score f(x) = sum_i a_i y_i k(x_i, x) + b.
    pub fn decision_score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.support_vectors.cols() {
            return Err(Error::DimensionMismatch {
                context: "decision_score",
                expected: self.support_vectors.cols(),
                actual: x.len(),
            });
        }
        let mut s = self.bias;
        for (i, sv) in self.support_vectors.iter_rows().enumerate() {
            s += self.alphas[i]
                * self.labels[i]
                * (-self.hyper.gamma * squared_distance(sv, x)).exp();
        }
        Ok(s)
    }

    /// Predicts +1 iff the decision score reaches the threshold.
    pub fn predict(&self, x: &[f64], threshold: f64) -> Result<Label> {
        Ok(if self.decision_score(x)? >= threshold {
            Label::Positive
        } else {
            Label::Negative
        })
    }

    /// Dual objective -1/2 sum_ij a_i a_j y_i y_j k(x_i, x_j) at the
    /// stored coefficients.
    pub fn dual_objective(&self) -> f64 {
        let m = self.alphas.len();
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                let k = (-self.hyper.gamma
                    * squared_distance(self.support_vectors.row(i), self.support_vectors.row(j)))
                .exp();
                s += self.alphas[i] * self.alphas[j] * self.labels[i] * self.labels[j] * k;
            }
        }
        -0.5 * s
    }

    /// Sum of dual coefficients (equals nu at a feasible solution).
    pub fn alpha_sum(&self) -> f64 {
        self.alphas.iter().sum()
    }

    /// Sum of y-weighted dual coefficients (zero at a feasible solution).
    pub fn alpha_label_sum(&self) -> f64 {
        self.alphas.iter().zip(&self.labels).map(|(a, y)| a * y).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = SvmModelJson {
            hyper: self.hyper.clone(),
            rows: self.support_vectors.rows(),
            cols: self.support_vectors.cols(),
            support_vectors: self.support_vectors.data().to_vec(),
            alphas: self.alphas.clone(),
            labels: self.labels.clone(),
            bias: vec![self.bias],
            rho: vec![self.rho],
            rho_degenerate: self.rho_degenerate,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<SvmModel> {
        let doc: SvmModelJson = serde_json::from_str(text)?;
        let support_vectors = Matrix::from_flat(doc.rows, doc.cols, doc.support_vectors)?;
        if doc.alphas.len() != doc.rows || doc.labels.len() != doc.rows {
            return Err(Error::LengthMismatch {
                context: "svm model coefficients",
                left: doc.rows,
                right: doc.alphas.len().min(doc.labels.len()),
            });
        }
        let scalar = |v: &[f64], name: &str| -> Result<f64> {
            v.first().copied().ok_or_else(|| {
                Error::InvalidConfig(format!("svm model json: missing {name}"))
            })
        };
        Ok(SvmModel {
            support_vectors,
            alphas: doc.alphas,
            labels: doc.labels,
            bias: scalar(&doc.bias, "bias")?,
            rho: scalar(&doc.rho, "rho")?,
            hyper: doc.hyper,
            rho_degenerate: doc.rho_degenerate,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SvmModelJson {
    hyper: SvmHyper,
    rows: usize,
    cols: usize,
    #[serde(with = "jsonio::f64_flat")]
    support_vectors: Vec<f64>,
    #[serde(with = "jsonio::f64_vec")]
    alphas: Vec<f64>,
    #[serde(with = "jsonio::f64_vec")]
    labels: Vec<f64>,
    #[serde(with = "jsonio::f64_vec")]
    bias: Vec<f64>,
    #[serde(with = "jsonio::f64_vec")]
    rho: Vec<f64>,
    rho_degenerate: bool,
}
