//! Memory gradient method for the (shifted) merit function.
//!
//! Each direction blends the scaled negative gradient with an average of the
//! last `N` directions,
//!
//! ```text
//! d_k = -gamma_k g_k + (1/N) sum_i beta_ki d_{k-i},   beta_ki = |g_k|^2 / phi_ki
//! phi_ki = (|g_k| |d_{k-i}| + g_k'd_{k-i} + m + n) / gamma_k
//! ```
//!
//! which guarantees `g_k'd_k <= -(gamma_k / 2) |g_k|^2`. Steps satisfy the weak
//! Wolfe conditions, and after each step the blocks are rescaled to equal norm
//! (the merit function is invariant under `(x, y) -> (s x, y / s)`).

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::objective::ShiftedObjective;
use crate::report::{IterationRecord, SolveReport, SolveStatus};
use crate::{dot, norm, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaScheme {
    /// `gamma_k = 1` (MGM-1).
    ConstantOne,
    /// Modified-secant sizing `w's / w'w`, floored back to 1 (MGM-2).
    ModifiedSecant,
}

/// Inner product used in the modified-secant correction coefficient
/// `theta = 6 (f_k - f_{k-1}) + 3 (g_k -/+ g_{k-1})'s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaVariant {
    /// `(g_k - g_{k-1})'s`.
    Printed,
    /// `(g_k + g_{k-1})'s`.
    Standard,
}

impl FromStr for ThetaVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(ThetaVariant::Printed),
            "standard" => Ok(ThetaVariant::Standard),
            other => Err(Error::Unknown {
                kind: "theta variant",
                name: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for GammaScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GammaScheme::ConstantOne => "constant_one",
            GammaScheme::ModifiedSecant => "modified_secant",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Memory depth `N`.
    pub memory: usize,
    pub gamma_scheme: GammaScheme,
    pub gamma_floor: f64,
    pub theta_variant: ThetaVariant,
    /// Gradient-norm tolerance.
    pub eps: f64,
    pub wolfe_rho: f64,
    pub wolfe_sigma: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub ls_max_bisections: usize,
    /// A stationary point whose eigenpair residual exceeds this is reported as
    /// degenerate instead of converged.
    pub certify_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            memory: 3,
            gamma_scheme: GammaScheme::ConstantOne,
            gamma_floor: 1e-15,
            theta_variant: ThetaVariant::Printed,
            eps: 1e-6,
            wolfe_rho: 0.1,
            wolfe_sigma: 0.5,
            max_iter: 2000,
            seed: 0,
            ls_max_bisections: 60,
            certify_tol: 1e-4,
        }
    }
}

impl SolverConfig {
    /// `gamma_k = 1`, `N = 3`.
    pub fn mgm1() -> Self {
        Self::default()
    }

    /// Modified-secant `gamma_k`, `N = 1`.
    pub fn mgm2() -> Self {
        Self {
            memory: 1,
            gamma_scheme: GammaScheme::ModifiedSecant,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_memory(mut self, memory: usize) -> Self {
        self.memory = memory;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 {
            return Err(Error::Config("memory depth N must be >= 1".into()));
        }
        if !(self.gamma_floor > 0.0) {
            return Err(Error::Config(format!(
                "gamma floor must be > 0, got {}",
                self.gamma_floor
            )));
        }
        if !(0.0 < self.wolfe_rho && self.wolfe_rho < self.wolfe_sigma && self.wolfe_sigma < 1.0) {
            return Err(Error::Config(format!(
                "Wolfe parameters must satisfy 0 < rho < sigma < 1, got rho={}, sigma={}",
                self.wolfe_rho, self.wolfe_sigma
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config(format!("eps must be > 0, got {}", self.eps)));
        }
        if self.max_iter == 0 || self.ls_max_bisections == 0 {
            return Err(Error::Config(
                "max_iter and ls_max_bisections must be >= 1".into(),
            ));
        }
        if !(self.certify_tol > 0.0) {
            return Err(Error::Config(format!(
                "certify_tol must be > 0, got {}",
                self.certify_tol
            )));
        }
        Ok(())
    }
}

/// The last `N` search directions, most recent first.
#[derive(Debug, Clone)]
pub struct DirectionMemory {
    depth: usize,
    dirs: VecDeque<Vec<f64>>,
}

impl DirectionMemory {
    pub fn new(depth: usize) -> Self {
        Self {
            depth,
            dirs: VecDeque::with_capacity(depth),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn push(&mut self, d: Vec<f64>) {
        if self.dirs.len() == self.depth {
            self.dirs.pop_back();
        }
        self.dirs.push_front(d);
    }

    /// `d_{k-1}, d_{k-2}, ...`
    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.dirs.iter().map(Vec::as_slice)
    }
}

pub fn gamma_constant(_k: usize) -> f64 {
    1.0
}

/// Modified-secant scaling for `k >= 1`.
///
/// With `s = z_k - z_{k-1}`, `dg = g_k - g_{k-1}` and auxiliary vector `s`,
/// `w = dg + theta / (s's) * s` and the result is `w's / w'w`, replaced by 1
/// when it falls below `gamma_floor` (or is undefined).
#[allow(clippy::too_many_arguments)]
pub fn gamma_secant(
    z_k: &[f64],
    z_prev: &[f64],
    g_k: &[f64],
    g_prev: &[f64],
    phi_k: f64,
    phi_prev: f64,
    gamma_floor: f64,
    variant: ThetaVariant,
) -> f64 {
    let s: Vec<f64> = z_k.iter().zip(z_prev).map(|(a, b)| a - b).collect();
    let ss = dot(&s, &s);
    if ss == 0.0 {
        return 1.0;
    }
    let dg: Vec<f64> = g_k.iter().zip(g_prev).map(|(a, b)| a - b).collect();
    let pairing: f64 = match variant {
        ThetaVariant::Printed => dot(&dg, &s),
        ThetaVariant::Standard => g_k
            .iter()
            .zip(g_prev)
            .zip(&s)
            .map(|((a, b), c)| (a + b) * c)
            .sum(),
    };
    let theta = 6.0 * (phi_k - phi_prev) + 3.0 * pairing;
    let c = theta / ss;
    let w: Vec<f64> = dg.iter().zip(&s).map(|(a, b)| a + c * b).collect();
    let gamma = dot(&w, &s) / dot(&w, &w);
    if gamma >= gamma_floor && gamma.is_finite() {
        gamma
    } else {
        1.0
    }
}

/// `(|g| |d| + g'd + m + n) / gamma`.
pub fn phi_rule(g: &[f64], d: &[f64], gamma: f64, m: usize, n: usize) -> f64 {
    (norm(g) * norm(d) + dot(g, d) + (m + n) as f64) / gamma
}

/// `|g|^2 / phi`, or 0 when `phi = 0`.
pub fn beta_rule(g: &[f64], phi: f64) -> f64 {
    if phi == 0.0 {
        0.0
    } else {
        dot(g, g) / phi
    }
}

/// `d = -gamma g + (1/N) sum_i beta_i d_{k-i}` over the stored directions.
pub fn build_direction(
    g: &[f64],
    memory: &DirectionMemory,
    gamma: f64,
    m: usize,
    n: usize,
) -> Result<Vec<f64>> {
    if !(gamma > 0.0) {
        return Err(Error::Config(format!("gamma must be > 0, got {gamma}")));
    }
    let mut d: Vec<f64> = g.iter().map(|v| -gamma * v).collect();
    let inv_n = 1.0 / memory.depth() as f64;
    for prev in memory.iter() {
        let beta = beta_rule(g, phi_rule(g, prev, gamma, m, n));
        let w = inv_n * beta;
        for (di, pi) in d.iter_mut().zip(prev) {
            *di += w * pi;
        }
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WolfeParams {
    pub rho: f64,
    pub sigma: f64,
    pub max_bisections: usize,
}

/// Doublings allowed while looking for an upper bracket (trial steps up to 2^60).
pub const MAX_DOUBLINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub phi: f64,
    pub slope: f64,
    pub evaluations: usize,
}

/// Weak Wolfe step by bracketing and bisection.
///
/// `line(alpha)` returns `(Phi(z + alpha d), g(z + alpha d)'d)`. Trials start at
/// 1, double until the sufficient-decrease condition fails or the curvature
/// condition holds, then bisect the bracket. The last trial evaluated is the
/// accepted one.
pub fn wolfe_search<F>(
    mut line: F,
    phi0: f64,
    slope0: f64,
    params: WolfeParams,
) -> Result<LineSearchOutcome>
where
    F: FnMut(f64) -> (f64, f64),
{
    if !(slope0 < 0.0) {
        return Err(Error::Precondition(format!(
            "search direction is not a descent direction (g'd = {slope0:e})"
        )));
    }
    let (rho, sigma) = (params.rho, params.sigma);
    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    let mut alpha = 1.0_f64;
    let mut doublings = 0;
    let mut bisections = 0;
    let mut evaluations = 0;
    loop {
        let (phi, slope) = line(alpha);
        evaluations += 1;
        let sufficient = phi.is_finite() && phi - phi0 <= rho * alpha * slope0;
        if !sufficient {
            hi = alpha;
        } else if !(slope >= sigma * slope0) {
            lo = alpha;
        } else {
            return Ok(LineSearchOutcome {
                alpha,
                phi,
                slope,
                evaluations,
            });
        }
        if hi.is_finite() {
            if bisections == params.max_bisections {
                break;
            }
            bisections += 1;
            alpha = 0.5 * (lo + hi);
        } else {
            if doublings == MAX_DOUBLINGS {
                break;
            }
            doublings += 1;
            alpha *= 2.0;
        }
    }
    Err(Error::LineSearch {
        lo,
        hi,
        alpha,
        evaluations,
    })
}

/// [`wolfe_search`] along `d` from `z` on a concrete objective; returns alpha.
pub fn wolfe_search_objective(
    obj: &ShiftedObjective<'_>,
    z: &[f64],
    d: &[f64],
    rho: f64,
    sigma: f64,
    max_bisections: usize,
) -> Result<f64> {
    let here = obj.evaluate_z(z)?;
    if d.len() != z.len() {
        return Err(Error::Dimension(format!(
            "direction has length {}, expected {}",
            d.len(),
            z.len()
        )));
    }
    let slope0 = dot(&here.stacked(), d);
    let params = WolfeParams {
        rho,
        sigma,
        max_bisections,
    };
    let out = wolfe_search(
        |alpha| {
            let trial = step(z, d, alpha);
            let e = obj.evaluate_z(&trial).expect("dimensions checked");
            (e.value, dot(&e.stacked(), d))
        },
        here.value,
        slope0,
        params,
    )?;
    Ok(out.alpha)
}

/// `z + alpha d`, componentwise.
pub fn step(z: &[f64], d: &[f64], alpha: f64) -> Vec<f64> {
    z.iter().zip(d).map(|(a, b)| a + alpha * b).collect()
}

/// Scales `x` by `s = sqrt(|y| / |x|)` and `y` by `1 / s` so both blocks have
/// norm `sqrt(|x| |y|)`.
pub fn rescale(z: &[f64], m: usize) -> Result<Vec<f64>> {
    if m == 0 || m >= z.len() {
        return Err(Error::Dimension(format!(
            "cannot split z of length {} at {m}",
            z.len()
        )));
    }
    let (x, y) = z.split_at(m);
    let nx = norm(x);
    let ny = norm(y);
    if !(nx > 0.0 && ny > 0.0) {
        return Err(Error::Degenerate(format!(
            "cannot rescale with a zero block (|x| = {nx:e}, |y| = {ny:e})"
        )));
    }
    let xi = (ny / nx).sqrt();
    let inv = 1.0 / xi;
    Ok(x.iter()
        .map(|v| xi * v)
        .chain(y.iter().map(|v| inv * v))
        .collect())
}

/// Standard normal `z_0` from `seed`, rescaled to equal block norms.
pub fn start_point(seed: u64, m: usize, n: usize) -> Vec<f64> {
    balanced_start(rng::normal_vector(seed, m + n), m)
}

/// Rescales a raw start to equal block norms when both blocks are nonzero.
pub fn balanced_start(z: Vec<f64>, m: usize) -> Vec<f64> {
    rescale(&z, m).unwrap_or(z)
}

/// Everything about one accepted step, for diagnostics and tests.
#[derive(Debug)]
pub struct StepEvent<'a> {
    pub k: usize,
    pub z: &'a [f64],
    pub phi: f64,
    pub g: &'a [f64],
    pub d: &'a [f64],
    pub gdot: f64,
    pub gamma: f64,
    pub alpha: f64,
    /// `z + alpha d` before rescaling.
    pub z_next: &'a [f64],
    pub phi_next: f64,
    pub g_next: &'a [f64],
    /// Rescaled iterate and its merit value; `None` on the terminating step.
    pub rescaled: Option<(&'a [f64], f64)>,
}

struct Point {
    z: Vec<f64>,
    value: f64,
    g: Vec<f64>,
}

impl Point {
    fn at(obj: &ShiftedObjective<'_>, z: Vec<f64>) -> Result<Self> {
        let e = obj.evaluate_z(&z)?;
        Ok(Self {
            value: e.value,
            g: e.stacked(),
            z,
        })
    }

    fn grad_norm(&self) -> f64 {
        norm(&self.g)
    }
}

/// Runs the memory gradient method from `z0` (or a seeded normal start).
pub fn solve(
    obj: &ShiftedObjective<'_>,
    cfg: &SolverConfig,
    z0: Option<&[f64]>,
) -> Result<SolveReport> {
    solve_observed(obj, cfg, z0, &mut |_| {})
}

/// [`solve`] with a callback invoked after every accepted step.
pub fn solve_observed(
    obj: &ShiftedObjective<'_>,
    cfg: &SolverConfig,
    z0: Option<&[f64]>,
    observer: &mut dyn FnMut(&StepEvent<'_>),
) -> Result<SolveReport> {
    cfg.validate()?;
    let started = Instant::now();
    let (m, n) = (obj.tensor().m(), obj.tensor().n());
    let z0 = match z0 {
        Some(z) if z.len() != m + n => {
            return Err(Error::Dimension(format!(
                "start point has length {}, expected {}",
                z.len(),
                m + n
            )))
        }
        Some(z) => z.to_vec(),
        None => start_point(cfg.seed, m, n),
    };
    let wolfe = WolfeParams {
        rho: cfg.wolfe_rho,
        sigma: cfg.wolfe_sigma,
        max_bisections: cfg.ls_max_bisections,
    };
    let shift = obj.shift();
    let mut trace = Vec::new();
    let mut cur = Point::at(obj, z0)?;

    if cur.grad_norm() <= cfg.eps {
        return Ok(finish(obj, cfg, cur.z, trace, None, started));
    }

    let mut memory = DirectionMemory::new(cfg.memory);
    let mut gamma = 1.0;
    let mut d: Vec<f64> = cur.g.iter().map(|v| -gamma * v).collect();

    for k in 0..cfg.max_iter {
        let gdot = dot(&cur.g, &d);
        let grad_norm = cur.grad_norm();
        let mut last: Option<Point> = None;
        let ls = wolfe_search(
            |alpha| {
                let trial = step(&cur.z, &d, alpha);
                let p = Point::at(obj, trial).expect("dimensions fixed");
                let out = (p.value, dot(&p.g, &d));
                last = Some(p);
                out
            },
            cur.value,
            gdot,
            wolfe,
        );
        let ls = match ls {
            Ok(ls) => ls,
            Err(e) => {
                // Close to a solution, f changes by less than its rounding error
                // and no step can pass the exact Armijo test. Accept the point if
                // it already certifies as an eigenpair.
                if certifies(obj, cfg, &cur.z) {
                    let msg = format!(
                        "iteration {k}: stopped at rounding floor (|g| = {grad_norm:e}): {e}"
                    );
                    return Ok(finish(obj, cfg, cur.z, trace, Some(msg), started));
                }
                let status = SolveStatus::LsFailure;
                let mut rep = failed(status, cur.z, trace, shift, started);
                rep.message = Some(format!("iteration {k}: {e}"));
                return Ok(rep);
            }
        };
        let next = last.expect("line search evaluated at least once");
        trace.push(IterationRecord {
            k,
            phi: cur.value,
            grad_norm,
            alpha: ls.alpha,
            gdot,
            gamma_k: gamma,
            t_shift: shift,
        });

        if next.grad_norm() <= cfg.eps {
            observer(&StepEvent {
                k,
                z: &cur.z,
                phi: cur.value,
                g: &cur.g,
                d: &d,
                gdot,
                gamma,
                alpha: ls.alpha,
                z_next: &next.z,
                phi_next: next.value,
                g_next: &next.g,
                rescaled: None,
            });
            return Ok(finish(obj, cfg, next.z, trace, None, started));
        }

        let (x, y) = next.z.split_at(m);
        if norm(x).min(norm(y)) < cfg.eps {
            let mut rep = failed(SolveStatus::Degenerate, next.z, trace, shift, started);
            rep.message = Some(format!(
                "iteration {k}: iterate collapsed onto a zero block"
            ));
            return Ok(rep);
        }
        let scaled = Point::at(obj, rescale(&next.z, m)?)?;
        observer(&StepEvent {
            k,
            z: &cur.z,
            phi: cur.value,
            g: &cur.g,
            d: &d,
            gdot,
            gamma,
            alpha: ls.alpha,
            z_next: &next.z,
            phi_next: next.value,
            g_next: &next.g,
            rescaled: Some((&scaled.z, scaled.value)),
        });

        gamma = match cfg.gamma_scheme {
            GammaScheme::ConstantOne => gamma_constant(k + 1),
            GammaScheme::ModifiedSecant => gamma_secant(
                &scaled.z,
                &cur.z,
                &scaled.g,
                &cur.g,
                scaled.value,
                cur.value,
                cfg.gamma_floor,
                cfg.theta_variant,
            ),
        };
        memory.push(d);
        d = build_direction(&scaled.g, &memory, gamma, m, n)?;
        cur = scaled;
    }

    let mut rep = failed(SolveStatus::MaxIter, cur.z, trace, shift, started);
    rep.message = Some(format!("no convergence within {} iterations", cfg.max_iter));
    Ok(rep)
}

fn failed(
    status: SolveStatus,
    z: Vec<f64>,
    trace: Vec<IterationRecord>,
    shift: f64,
    started: Instant,
) -> SolveReport {
    SolveReport {
        status,
        pair: None,
        iters: trace.len(),
        trace,
        wall_time: started.elapsed().as_secs_f64(),
        shift_t: shift,
        z,
        escalations: Vec::new(),
        message: None,
    }
}

fn certifies(obj: &ShiftedObjective<'_>, cfg: &SolverConfig, z: &[f64]) -> bool {
    let (x, y) = z.split_at(obj.tensor().m());
    norm(x).min(norm(y)) >= cfg.eps
        && obj
            .extract_eigenpair(x, y)
            .is_ok_and(|p| p.max_residual() <= cfg.certify_tol)
}

/// Classifies a stationary point: a near-zero block or an eigenpair that does
/// not certify means the method found the trivial critical point.
fn finish(
    obj: &ShiftedObjective<'_>,
    cfg: &SolverConfig,
    z: Vec<f64>,
    trace: Vec<IterationRecord>,
    message: Option<String>,
    started: Instant,
) -> SolveReport {
    let m = obj.tensor().m();
    let (x, y) = z.split_at(m);
    let shift = obj.shift();
    let smallest = norm(x).min(norm(y));
    if smallest < cfg.eps {
        let mut rep = failed(SolveStatus::Degenerate, z, trace, shift, started);
        rep.message = Some(format!(
            "stationary point with a zero block (min norm {smallest:e})"
        ));
        return rep;
    }
    let pair = obj
        .extract_eigenpair(x, y)
        .expect("blocks are nonzero and dimensions fixed");
    if pair.max_residual() > cfg.certify_tol {
        let mut rep = failed(SolveStatus::Degenerate, z, trace, shift, started);
        rep.message = Some(format!(
            "stationary point does not certify as an eigenpair (residual {:e}, min norm {smallest:e})",
            pair.max_residual()
        ));
        return rep;
    }
    SolveReport {
        status: SolveStatus::Converged,
        pair: Some(pair),
        iters: trace.len(),
        trace,
        wall_time: started.elapsed().as_secs_f64(),
        shift_t: shift,
        z,
        escalations: Vec::new(),
        message,
    }
}
