use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cumulative logit model: `P(Y <= j | x) = sigmoid(theta_j - x . beta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClmModel {
    /// Strictly increasing, length J - 1.
    pub thresholds: Vec<f64>,
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub covariates: Vec<String>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl ClmModel {
    pub fn n_categories(&self) -> usize {
        self.thresholds.len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() {
            return Err(Error::invalid("model needs at least one threshold"));
        }
        if self.thresholds.iter().chain(&self.coefficients).any(|v| !v.is_finite()) {
            return Err(Error::invalid("model parameters must be finite"));
        }
        if self.thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("thresholds must be strictly increasing"));
        }
        if !self.covariates.is_empty() && self.covariates.len() != self.coefficients.len() {
            return Err(Error::invalid("covariate names do not match coefficients"));
        }
        Ok(())
    }

    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum()
    }
}

/// Category probabilities for linear predictor `eta`.
pub fn category_probabilities(thresholds: &[f64], eta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(thresholds.len() + 1);
    let mut prev = 0.0;
    for &t in thresholds {
        let c = sigmoid(t - eta);
        out.push(c - prev);
        prev = c;
    }
    out.push(1.0 - prev);
    out
}

/// Probabilities over categories `1..=J` and the expected category.
pub fn clm_expected(model: &ClmModel, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    if x.len() != model.coefficients.len() {
        return Err(Error::invalid(format!(
            "{} covariates for {} coefficients",
            x.len(),
            model.coefficients.len()
        )));
    }
    let p = category_probabilities(&model.thresholds, model.linear_predictor(x));
    let e = p.iter().enumerate().map(|(j, pj)| (j + 1) as f64 * pj).sum();
    Ok((p, e))
}

/// Unconstrained parameters: `tau_1 = theta_1`, `tau_j = ln(theta_j - theta_{j-1})`,
/// followed by `beta`.
fn thresholds_from(tau: &[f64]) -> Vec<f64> {
    let mut th = Vec::with_capacity(tau.len());
    for (j, &t) in tau.iter().enumerate() {
        th.push(if j == 0 { t } else { th[j - 1] + t.exp() });
    }
    th
}

pub struct ClmData<'a> {
    pub x: &'a DMatrix<f64>,
    /// Categories `1..=J`.
    pub y: &'a [usize],
    pub n_categories: usize,
}

/// Log-likelihood, gradient and Hessian in the unconstrained parameters.
pub fn log_likelihood(data: &ClmData<'_>, params: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
    let nt = data.n_categories - 1;
    let m = data.x.ncols();
    let dim = nt + m;
    let theta = thresholds_from(&params[..nt]);
    let beta = &params[nt..];

    let mut ll = 0.0;
    let mut g = DVector::zeros(dim);
    let mut h = DMatrix::zeros(dim, dim);
    let mut da = DVector::zeros(dim);
    let mut db = DVector::zeros(dim);
    for (i, &y) in data.y.iter().enumerate() {
        let row = data.x.row(i);
        let eta: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
        // Upper (a) and lower (b) cumulative arguments of the observed category.
        let upper = (y <= nt).then(|| theta[y - 1] - eta);
        let lower = (y >= 2).then(|| theta[y - 2] - eta);
        let (fa, ga, ha) = upper.map_or((1.0, 0.0, 0.0), |a| {
            let s = sigmoid(a);
            let f = s * (1.0 - s);
            (s, f, f * (1.0 - 2.0 * s))
        });
        let (fb, gb, hb) = lower.map_or((0.0, 0.0, 0.0), |b| {
            let s = sigmoid(b);
            let f = s * (1.0 - s);
            (s, f, f * (1.0 - 2.0 * s))
        });
        // 1 - F(b) is better conditioned than F(a) - F(b) when a is infinite.
        let p = if upper.is_none() {
            sigmoid(-lower.unwrap())
        } else if lower.is_none() {
            fa
        } else {
            fa - fb
        };
        let p = p.max(f64::MIN_POSITIVE);
        ll += p.ln();

        let la = ga / p;
        let lb = -gb / p;
        let laa = ha / p - la * la;
        let lbb = -hb / p - lb * lb;
        let lab = -la * lb;

        da.fill(0.0);
        db.fill(0.0);
        if upper.is_some() {
            da[y - 1] = 1.0;
        }
        if lower.is_some() {
            db[y - 2] = 1.0;
        }
        for (k, &xk) in row.iter().enumerate() {
            if upper.is_some() {
                da[nt + k] = -xk;
            }
            if lower.is_some() {
                db[nt + k] = -xk;
            }
        }
        g.axpy(la, &da, 1.0);
        g.axpy(lb, &db, 1.0);
        h.ger(laa, &da, &da, 1.0);
        h.ger(lbb, &db, &db, 1.0);
        h.ger(lab, &da, &db, 1.0);
        h.ger(lab, &db, &da, 1.0);
    }

    // Chain rule from theta to tau: d theta_j / d tau_1 = 1,
    // d theta_j / d tau_k = exp(tau_k) for 2 <= k <= j.
    let mut jac = DMatrix::<f64>::identity(dim, dim);
    for j in 0..nt {
        for k in 1..=j {
            jac[(j, k)] = params[k].exp();
        }
        jac[(j, 0)] = 1.0;
    }
    let g_theta = g.clone();
    let g_tau = jac.transpose() * &g_theta;
    let mut h_tau = jac.transpose() * &h * &jac;
    for k in 1..nt {
        let tail: f64 = g_theta.rows(k, nt - k).sum();
        h_tau[(k, k)] += params[k].exp() * tail;
    }
    (ll, g_tau, h_tau)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClmFitOptions {
    pub max_iter: usize,
    pub gradient_tol: f64,
}

impl Default for ClmFitOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            gradient_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClmFit {
    pub model: ClmModel,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Log-likelihood after each accepted step, starting value first.
    pub trace: Vec<f64>,
}

/// Minimum per-observation curvature of the negative log-likelihood at an
/// accepted optimum.
const SEPARATION_CURVATURE: f64 = 1e-7;

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximum-likelihood fit by damped Newton iteration with step halving.
pub fn fit_clm(x: &DMatrix<f64>, y: &[usize], n_categories: usize, options: ClmFitOptions) -> Result<ClmFit> {
    let (n, m) = x.shape();
    if y.len() != n {
        return Err(Error::invalid(format!("{} responses for {n} rows", y.len())));
    }
    if n_categories < 2 {
        return Err(Error::invalid("need at least two response categories"));
    }
    if let Some(bad) = y.iter().find(|&&v| v < 1 || v > n_categories) {
        return Err(Error::invalid(format!("response {bad} outside 1..={n_categories}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("covariates must be finite"));
    }
    let mut counts = vec![0usize; n_categories];
    for &v in y {
        counts[v - 1] += 1;
    }
    if let Some(j) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InsufficientData(format!("category {} is never observed", j + 1)));
    }
    if n <= m + n_categories - 1 {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {} parameters",
            m + n_categories - 1
        )));
    }

    let nt = n_categories - 1;
    let mut params = vec![0.0; nt + m];
    let mut cum = 0usize;
    let mut prev = 0.0;
    for j in 0..nt {
        cum += counts[j];
        let p = cum as f64 / n as f64;
        let th = (p / (1.0 - p)).ln();
        params[j] = if j == 0 { th } else { (th - prev).ln() };
        prev = th;
    }

    let data = ClmData { x, y, n_categories };
    let (mut ll, mut g, mut h) = log_likelihood(&data, &params);
    let mut trace = vec![ll];
    let mut iterations = 0;
    while inf_norm(&g) >= options.gradient_tol {
        if iterations == options.max_iter {
            return Err(Error::NotConverged {
                iterations,
                gradient_norm: inf_norm(&g),
            });
        }
        iterations += 1;
        let dir = newton_direction(&h, &g);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = params.iter().zip(dir.iter()).map(|(p, d)| p + step * d).collect();
            let (ll_new, g_new, h_new) = log_likelihood(&data, &cand);
            // Near the optimum the change in likelihood drops below its
            // rounding noise; a shrinking gradient then decides.
            let noise = 64.0 * f64::EPSILON * ll.abs();
            let ascent = ll_new > ll || (ll_new >= ll - noise && inf_norm(&g_new) < inf_norm(&g));
            if ll_new.is_finite() && ascent {
                params = cand;
                ll = ll_new.max(ll);
                g = g_new;
                h = h_new;
                trace.push(ll);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::NotConverged {
                iterations,
                gradient_norm: inf_norm(&g),
            });
        }
    }
    // Under separation the gradient fades while parameters diverge; the
    // curvature vanishes with it, so no finite maximum exists.
    let min_curvature = (-&h).symmetric_eigenvalues().min();
    if !(min_curvature > SEPARATION_CURVATURE * n as f64) {
        return Err(Error::NotConverged {
            iterations,
            gradient_norm: inf_norm(&g),
        });
    }
    let model = ClmModel {
        thresholds: thresholds_from(&params[..nt]),
        coefficients: params[nt..].to_vec(),
        covariates: Vec::new(),
    };
    Ok(ClmFit {
        model,
        log_likelihood: ll,
        iterations,
        gradient_norm: inf_norm(&g),
        trace,
    })
}

/// Solves `(-H + mu I) d = g`, raising `mu` until `-H + mu I` is positive definite.
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let neg = -h;
    let scale = neg.diagonal().iter().fold(1e-12f64, |m, v| m.max(v.abs()));
    let mut mu = 0.0;
    loop {
        let mut a = neg.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += mu;
        }
        if let Some(ch) = a.cholesky() {
            return ch.solve(g);
        }
        mu = if mu == 0.0 { 1e-8 * scale } else { mu * 10.0 };
    }
}
