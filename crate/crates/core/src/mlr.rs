//! Weighted multinomial logistic regression with `NoScore` as the reference
//! category.
//!
//! The objective is the weighted negative log-likelihood plus a ridge term,
//! `-sum_i w_i log p_{y_i}(x_i) + (l2/2) |theta|^2`, minimized by damped
//! Newton steps with an Armijo backtracking line search, starting from zero.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::{DriveOutcome, ProbVector, NUM_OUTCOMES};
use crate::error::{Error, Result};
use crate::features::{DesignMatrix, FeatureRecipe};
use crate::ingest::GameState;

/// Outcomes with their own coefficient row, in order.
pub const NON_REFERENCE: [DriveOutcome; 4] = [
    DriveOutcome::Touchdown,
    DriveOutcome::FieldGoal,
    DriveOutcome::OppSafety,
    DriveOutcome::OppTouchdown,
];

pub const REFERENCE: DriveOutcome = DriveOutcome::NoScore;

const NUM_FREE: usize = NUM_OUTCOMES - 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlrConfig {
    pub l2: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MlrConfig {
    fn default() -> Self {
        MlrConfig {
            l2: 1e-6,
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub iterations: usize,
    pub grad_norm: f64,
    pub objective: f64,
}

/// Fitted coefficients, one row per non-reference outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlrSolution {
    pub coefficients: Vec<Vec<f64>>,
    pub convergence: Convergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlrModel {
    pub reference: DriveOutcome,
    pub recipe: FeatureRecipe,
    pub l2: f64,
    pub coefficients: Vec<Vec<f64>>,
    pub convergence: Option<Convergence>,
}

fn outcome_column(k: usize) -> usize {
    NON_REFERENCE[k].index()
}

/// Log-probabilities of the five outcomes given the four free logits.
fn log_probs(free: &[f64; NUM_FREE]) -> [f64; NUM_OUTCOMES] {
    let mut z = [0.0; NUM_OUTCOMES];
    for (k, &v) in free.iter().enumerate() {
        z[outcome_column(k)] = v;
    }
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    z.map(|v| v - lse)
}

fn to_prob_vector(free: &[f64; NUM_FREE]) -> ProbVector {
    let mut z = [0.0; NUM_OUTCOMES];
    for (k, &v) in free.iter().enumerate() {
        z[outcome_column(k)] = v;
    }
    ProbVector::softmax(&z)
}

impl MlrModel {
    pub fn new(recipe: FeatureRecipe, l2: f64, solution: MlrSolution) -> Result<Self> {
        let p = recipe.num_columns();
        if solution.coefficients.len() != NUM_FREE || solution.coefficients.iter().any(|r| r.len() != p) {
            return Err(Error::RecipeMismatch(format!(
                "coefficients do not match a {p}-column recipe"
            )));
        }
        Ok(MlrModel {
            reference: REFERENCE,
            recipe,
            l2,
            coefficients: solution.coefficients,
            convergence: Some(solution.convergence),
        })
    }

    /// Model with hand-set coefficients.
    pub fn from_coefficients(recipe: FeatureRecipe, coefficients: Vec<Vec<f64>>) -> Result<Self> {
        let mut m = Self::new(
            recipe,
            0.0,
            MlrSolution {
                coefficients,
                convergence: Convergence {
                    iterations: 0,
                    grad_norm: f64::NAN,
                    objective: f64::NAN,
                },
            },
        )?;
        m.convergence = None;
        Ok(m)
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<ProbVector> {
        if row.len() != self.recipe.num_columns() {
            return Err(Error::RecipeMismatch(format!(
                "row has {} columns, model expects {}",
                row.len(),
                self.recipe.num_columns()
            )));
        }
        let mut free = [0.0; NUM_FREE];
        for (k, beta) in self.coefficients.iter().enumerate() {
            free[k] = beta.iter().zip(row).map(|(b, x)| b * x).sum();
        }
        Ok(to_prob_vector(&free))
    }

    pub fn predict_probs(&self, x: &GameState) -> Result<ProbVector> {
        self.predict_row(&self.recipe.row(x)?)
    }

    /// Fit on a dataset's plays and weights, with the given recipe.
    pub fn fit(
        recipe: FeatureRecipe,
        states: &[&GameState],
        outcomes: &[DriveOutcome],
        weights: &[f64],
        cfg: &MlrConfig,
    ) -> Result<Self> {
        let x = recipe.design(states.iter().copied())?;
        let solution = fit_weighted_multinomial_logit(&x, outcomes, weights, cfg.l2, cfg.tol, cfg.max_iter)?;
        MlrModel::new(recipe, cfg.l2, solution)
    }
}

/// Working problem with zero-weight rows removed.
struct Problem {
    x: DMatrix<f64>,
    y: Vec<usize>,
    w: DVector<f64>,
    l2: f64,
}

impl Problem {
    fn new(design: &DesignMatrix, y: &[DriveOutcome], w: &[f64], l2: f64) -> Result<Self> {
        let n = design.nrows;
        if y.len() != n || w.len() != n {
            return Err(Error::Data(format!(
                "design has {n} rows but {} outcomes and {} weights",
                y.len(),
                w.len()
            )));
        }
        if w.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::Data("weights must be finite and non-negative".into()));
        }
        if !(l2 >= 0.0 && l2.is_finite()) {
            return Err(Error::Config(format!("l2 penalty must be >= 0, got {l2}")));
        }
        let keep: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
        if keep.is_empty() {
            return Err(Error::Data("all weights are zero".into()));
        }
        let p = design.ncols();
        let x = DMatrix::from_fn(keep.len(), p, |r, c| design.row(keep[r])[c]);
        Ok(Problem {
            x,
            y: keep.iter().map(|&i| y[i].index()).collect(),
            w: DVector::from_iterator(keep.len(), keep.iter().map(|&i| w[i])),
            l2,
        })
    }

    fn p(&self) -> usize {
        self.x.ncols()
    }

    /// theta is stacked by outcome: [beta_TD; beta_FG; beta_OS; beta_OTD].
    fn logits(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let b = DMatrix::from_column_slice(self.p(), NUM_FREE, theta.as_slice());
        &self.x * b
    }

    fn objective(&self, theta: &DVector<f64>) -> f64 {
        let z = self.logits(theta);
        let mut f = 0.0;
        for i in 0..self.x.nrows() {
            let free = [z[(i, 0)], z[(i, 1)], z[(i, 2)], z[(i, 3)]];
            f -= self.w[i] * log_probs(&free)[self.y[i]];
        }
        f + 0.5 * self.l2 * theta.norm_squared()
    }

    /// Objective, gradient and the matrix of free-outcome probabilities.
    fn evaluate(&self, theta: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = self.x.nrows();
        let z = self.logits(theta);
        let mut probs = DMatrix::zeros(n, NUM_FREE);
        let mut resid = DMatrix::zeros(n, NUM_FREE);
        let mut f = 0.0;
        for i in 0..n {
            let free = [z[(i, 0)], z[(i, 1)], z[(i, 2)], z[(i, 3)]];
            let lp = log_probs(&free);
            f -= self.w[i] * lp[self.y[i]];
            for k in 0..NUM_FREE {
                let pk = lp[outcome_column(k)].exp();
                probs[(i, k)] = pk;
                let yk = if self.y[i] == outcome_column(k) { 1.0 } else { 0.0 };
                resid[(i, k)] = self.w[i] * (pk - yk);
            }
        }
        let g = self.x.transpose() * resid;
        let mut grad = DVector::from_column_slice(g.as_slice());
        grad.axpy(self.l2, theta, 1.0);
        (f + 0.5 * self.l2 * theta.norm_squared(), grad, probs)
    }

    fn hessian(&self, probs: &DMatrix<f64>) -> DMatrix<f64> {
        let p = self.p();
        let n = self.x.nrows();
        let mut h = DMatrix::zeros(p * NUM_FREE, p * NUM_FREE);
        let xt = self.x.transpose();
        for k in 0..NUM_FREE {
            for l in k..NUM_FREE {
                let mut scaled = self.x.clone();
                for i in 0..n {
                    let c = self.w[i] * probs[(i, k)] * (if k == l { 1.0 } else { 0.0 } - probs[(i, l)]);
                    scaled.row_mut(i).scale_mut(c);
                }
                let block = &xt * scaled;
                h.view_mut((k * p, l * p), (p, p)).copy_from(&block);
                if k != l {
                    h.view_mut((l * p, k * p), (p, p)).copy_from(&block.transpose());
                }
            }
        }
        for d in 0..p * NUM_FREE {
            h[(d, d)] += self.l2;
        }
        h
    }

    fn check_rank(&self) -> Result<()> {
        let mut xs = self.x.clone();
        for i in 0..xs.nrows() {
            xs.row_mut(i).scale_mut(self.w[i].sqrt());
        }
        let gram = xs.transpose() * &xs;
        let eig = gram.symmetric_eigenvalues();
        let max = eig.iter().copied().fold(0.0, f64::max);
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let ratio = if max > 0.0 { min / max } else { 0.0 };
        if ratio < 1e-12 {
            return Err(Error::RankDeficient { ratio });
        }
        Ok(())
    }
}

/// Objective and gradient of the penalized weighted multinomial logloss at
/// `theta` (stacked by non-reference outcome). Zero-weight rows are ignored.
pub fn objective_and_gradient(
    x: &DesignMatrix,
    y: &[DriveOutcome],
    w: &[f64],
    l2: f64,
    theta: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let prob = Problem::new(x, y, w, l2)?;
    if theta.len() != prob.p() * NUM_FREE {
        return Err(Error::Data(format!(
            "theta has {} entries, expected {}",
            theta.len(),
            prob.p() * NUM_FREE
        )));
    }
    let (f, g, _) = prob.evaluate(&DVector::from_column_slice(theta));
    Ok((f, g.as_slice().to_vec()))
}

/// Minimize the penalized weighted multinomial logloss.
///
/// Converged means the gradient max-norm is at most `tol`. The objective
/// never increases between iterations.
pub fn fit_weighted_multinomial_logit(
    x: &DesignMatrix,
    y: &[DriveOutcome],
    w: &[f64],
    l2: f64,
    tol: f64,
    max_iter: usize,
) -> Result<MlrSolution> {
    fit_traced(x, y, w, l2, tol, max_iter).map(|(s, _)| s)
}

/// As [`fit_weighted_multinomial_logit`], also returning the objective at
/// every iterate.
pub fn fit_traced(
    x: &DesignMatrix,
    y: &[DriveOutcome],
    w: &[f64],
    l2: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(MlrSolution, Vec<f64>)> {
    let prob = Problem::new(x, y, w, l2)?;
    if l2 == 0.0 {
        prob.check_rank()?;
    }
    let dim = prob.p() * NUM_FREE;
    let mut theta = DVector::zeros(dim);
    let mut trace = Vec::new();
    let (mut f, mut g, mut probs) = prob.evaluate(&theta);
    trace.push(f);
    let mut iterations = 0;
    loop {
        let gnorm = g.amax();
        if gnorm <= tol {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::NonConvergence {
                iterations,
                grad_norm: gnorm,
            });
        }
        iterations += 1;
        let h = prob.hessian(&probs);
        let direction = newton_direction(h, &g)?;
        let slope = g.dot(&direction);
        // Once the predicted decrease is below the resolution of f, objective
        // comparisons are noise; take the full Newton step if it shrinks the
        // gradient.
        if -slope <= 1e-13 * f.abs().max(1.0) {
            let trial = &theta + &direction;
            let (ft, gt, pt) = prob.evaluate(&trial);
            if gt.amax() < gnorm {
                theta = trial;
                (f, g, probs) = (ft, gt, pt);
                trace.push(f);
                continue;
            }
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &theta + step * &direction;
            let ft = prob.objective(&trial);
            if ft.is_finite() && ft <= f + 1e-4 * step * slope {
                accepted = Some(trial);
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some(next) => {
                theta = next;
                (f, g, probs) = prob.evaluate(&theta);
                trace.push(f);
            }
            None => {
                return Err(Error::NonConvergence {
                    iterations,
                    grad_norm: gnorm,
                });
            }
        }
    }
    let p = prob.p();
    let coefficients = (0..NUM_FREE)
        .map(|k| theta.as_slice()[k * p..(k + 1) * p].to_vec())
        .collect();
    Ok((
        MlrSolution {
            coefficients,
            convergence: Convergence {
                iterations,
                grad_norm: g.amax(),
                objective: f,
            },
        },
        trace,
    ))
}

/// Solve `H d = -g`, adding Levenberg damping if `H` is not numerically
/// positive definite.
fn newton_direction(h: DMatrix<f64>, g: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = (0..h.nrows()).map(|i| h[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut damping = 0.0;
    for _ in 0..30 {
        let mut hd = h.clone();
        for i in 0..hd.nrows() {
            hd[(i, i)] += damping;
        }
        if let Some(chol) = hd.cholesky() {
            return Ok(-chol.solve(g));
        }
        damping = if damping == 0.0 { scale * 1e-12 } else { damping * 10.0 };
    }
    Err(Error::NonConvergence {
        iterations: 0,
        grad_norm: g.amax(),
    })
}
