//! The shifted quartic merit function and M-eigenpair certification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::HierSymTensor;
use crate::{dot, inf_norm, norm};

/// `f_t(x, y) = 1/4 (x'x)^2 (y'y)^2 - 1/2 Axyxy - t/2 (x'x)(y'y)`.
///
/// `t = 0` is the unshifted problem. Every nonzero critical point is an
/// M-eigenpair with `lambda = (x'x)(y'y) - t`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedObjective<'a> {
    tensor: &'a HierSymTensor,
    shift: f64,
}

/// Value and gradient at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub grad_x: Vec<f64>,
    pub grad_y: Vec<f64>,
}

impl Evaluation {
    pub fn grad_norm(&self) -> f64 {
        (dot(&self.grad_x, &self.grad_x) + dot(&self.grad_y, &self.grad_y)).sqrt()
    }

    /// Gradient stacked as `(g_x, g_y)`.
    pub fn stacked(&self) -> Vec<f64> {
        let mut g = Vec::with_capacity(self.grad_x.len() + self.grad_y.len());
        g.extend_from_slice(&self.grad_x);
        g.extend_from_slice(&self.grad_y);
        g
    }
}

impl<'a> ShiftedObjective<'a> {
    pub fn new(tensor: &'a HierSymTensor, shift: f64) -> Result<Self> {
        if !(shift >= 0.0) || !shift.is_finite() {
            return Err(Error::Config(format!(
                "shift must be finite and >= 0, got {shift}"
            )));
        }
        Ok(Self { tensor, shift })
    }

    pub fn unshifted(tensor: &'a HierSymTensor) -> Self {
        Self { tensor, shift: 0.0 }
    }

    pub fn tensor(&self) -> &'a HierSymTensor {
        self.tensor
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Length of the stacked variable `z = (x, y)`.
    pub fn dim(&self) -> usize {
        self.tensor.m() + self.tensor.n()
    }

    fn check(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.tensor.m() || y.len() != self.tensor.n() {
            return Err(Error::Dimension(format!(
                "objective expects x in R^{} and y in R^{}, got {} and {}",
                self.tensor.m(),
                self.tensor.n(),
                x.len(),
                y.len()
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check(x, y)?;
        let xx = dot(x, x);
        let yy = dot(y, y);
        let axyxy = self.tensor.contract_scalar(x, y)?;
        Ok(0.25 * (xx * xx) * (yy * yy) - 0.5 * axyxy - 0.5 * self.shift * xx * yy)
    }

    /// `g_x = (x'x)(y'y)^2 x - A.yxy - t(y'y)x`, `g_y = (x'x)^2(y'y) y - Axyx. - t(x'x)y`.
    pub fn grad(&self, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let e = self.evaluate(x, y)?;
        Ok((e.grad_x, e.grad_y))
    }

    /// Value and gradient sharing one contraction pass.
    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<Evaluation> {
        self.check(x, y)?;
        Ok(self.evaluate_unchecked(x, y))
    }

    /// [`Self::evaluate`] on a stacked `z = (x, y)`.
    pub fn evaluate_z(&self, z: &[f64]) -> Result<Evaluation> {
        if z.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "expected z of length {}, got {}",
                self.dim(),
                z.len()
            )));
        }
        let (x, y) = z.split_at(self.tensor.m());
        Ok(self.evaluate_unchecked(x, y))
    }

    fn evaluate_unchecked(&self, x: &[f64], y: &[f64]) -> Evaluation {
        let t = self.shift;
        let xx = dot(x, x);
        let yy = dot(y, y);
        let (ax, ay) = self.tensor.contract_both_unchecked(x, y);
        let axyxy = dot(x, &ax);
        let value = 0.25 * (xx * xx) * (yy * yy) - 0.5 * axyxy - 0.5 * t * xx * yy;
        let cx = xx * yy * yy - t * yy;
        let cy = xx * xx * yy - t * xx;
        let grad_x = x.iter().zip(&ax).map(|(xi, ai)| cx * xi - ai).collect();
        let grad_y = y.iter().zip(&ay).map(|(yi, ai)| cy * yi - ai).collect();
        Evaluation {
            value,
            grad_x,
            grad_y,
        }
    }

    /// `lambda = (x'x)(y'y) - t` with normalized vectors and recomputed residuals.
    pub fn extract_eigenpair(&self, x: &[f64], y: &[f64]) -> Result<MEigenpair> {
        self.check(x, y)?;
        let nx = norm(x);
        let ny = norm(y);
        if !(nx > 0.0 && ny > 0.0) {
            return Err(Error::Degenerate(format!(
                "cannot extract an eigenpair from a zero block (|x| = {nx:e}, |y| = {ny:e})"
            )));
        }
        let lambda = dot(x, x) * dot(y, y) - self.shift;
        let u: Vec<f64> = x.iter().map(|v| v / nx).collect();
        let v: Vec<f64> = y.iter().map(|w| w / ny).collect();
        Ok(MEigenpair::new(self.tensor, lambda, u, v))
    }
}

/// `(lambda, x, y)` with unit `x`, `y` and the infinity-norm defects of
/// `A.yxy = lambda x` and `Axyx. = lambda y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MEigenpair {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub residual_x: f64,
    pub residual_y: f64,
}

impl MEigenpair {
    /// Builds a pair from unit vectors, fixing the sign so the first nonzero
    /// entry of `x` is positive, and computes residuals against `tensor`.
    pub fn new(tensor: &HierSymTensor, lambda: f64, mut x: Vec<f64>, mut y: Vec<f64>) -> Self {
        if x.iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0) {
            x.iter_mut().for_each(|v| *v = -*v);
            y.iter_mut().for_each(|v| *v = -*v);
        }
        let (residual_x, residual_y) = defects(tensor, lambda, &x, &y);
        Self {
            lambda,
            x,
            y,
            residual_x,
            residual_y,
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residual_x.max(self.residual_y)
    }

    /// The same vectors as an eigenpair of `-A`.
    pub fn negated(&self) -> Self {
        Self {
            lambda: -self.lambda,
            ..self.clone()
        }
    }
}

fn defects(tensor: &HierSymTensor, lambda: f64, x: &[f64], y: &[f64]) -> (f64, f64) {
    let (ax, ay) = tensor.contract_both_unchecked(x, y);
    let rx: Vec<f64> = ax.iter().zip(x).map(|(a, xi)| a - lambda * xi).collect();
    let ry: Vec<f64> = ay.iter().zip(y).map(|(a, yi)| a - lambda * yi).collect();
    (inf_norm(&rx), inf_norm(&ry))
}

/// Unit-norm slack accepted by [`verify_eigenpair`].
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// True iff both defects, recomputed against `tensor`, are at most `tol`.
pub fn verify_eigenpair(tensor: &HierSymTensor, pair: &MEigenpair, tol: f64) -> Result<bool> {
    if pair.x.len() != tensor.m() || pair.y.len() != tensor.n() {
        return Err(Error::Dimension(format!(
            "pair has |x| = {}, |y| = {} for an {}x{} tensor",
            pair.x.len(),
            pair.y.len(),
            tensor.m(),
            tensor.n()
        )));
    }
    let nx = norm(&pair.x);
    let ny = norm(&pair.y);
    if (nx - 1.0).abs() > UNIT_NORM_TOL || (ny - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::Precondition(format!(
            "eigenvectors must be unit norm, got |x| = {nx}, |y| = {ny}"
        )));
    }
    let (rx, ry) = defects(tensor, pair.lambda, &pair.x, &pair.y);
    Ok(rx <= tol && ry <= tol)
}

/// Brute-force maximum of `Axyxy` over the unit circles, for `m = n = 2`.
///
/// `x = (cos a, sin a)`, `y = (cos b, sin b)` are sampled on a `steps x steps`
/// grid over `[0, pi)^2` (the form is even in each vector), and the best grid
/// point is polished by a compass search.
pub fn grid_oracle(tensor: &HierSymTensor, steps: usize) -> Result<f64> {
    if tensor.m() != 2 || tensor.n() != 2 {
        return Err(Error::Dimension(format!(
            "grid oracle supports 2x2x2x2 tensors only, got {}x{}",
            tensor.m(),
            tensor.n()
        )));
    }
    if steps < GRID_MIN_STEPS {
        return Err(Error::Config(format!(
            "grid oracle needs at least {GRID_MIN_STEPS} steps, got {steps}"
        )));
    }
    let form = |a: f64, b: f64| {
        let x = [a.cos(), a.sin()];
        let y = [b.cos(), b.sin()];
        let (ax, _) = tensor.contract_both_unchecked(&x, &y);
        dot(&x, &ax)
    };
    let h = std::f64::consts::PI / steps as f64;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for p in 0..steps {
        let a = p as f64 * h;
        for q in 0..steps {
            let b = q as f64 * h;
            let v = form(a, b);
            if v > best.0 {
                best = (v, a, b);
            }
        }
    }
    let (mut val, mut a, mut b) = best;
    let mut step = h;
    while step > 1e-13 {
        let mut moved = false;
        for (da, db) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let v = form(a + da, b + db);
            if v > val {
                (val, a, b) = (v, a + da, b + db);
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok(val)
}

/// Smallest resolution accepted by [`grid_oracle`].
pub const GRID_MIN_STEPS: usize = 1000;

/// `min Axyxy` over the unit circles, via the oracle on `-A`.
pub fn grid_oracle_min(tensor: &HierSymTensor, steps: usize) -> Result<f64> {
    Ok(-grid_oracle(&tensor.negated(), steps)?)
}
