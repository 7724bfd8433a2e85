//! Shifted alternating power iteration, used as a baseline.
//!
//! ```text
//! x <- normalize(A.y x y + tau x)
//! y <- normalize(A x y x. + tau y)      (uses the new x)
//! lambda = Axyxy
//! ```
//!
//! stopping when `|lambda_{k+1} - lambda_k| <= eps` and the pair's residual is
//! at most `certify_tol`. With a large shift the Rayleigh value settles long
//! before the vectors do, so the first test alone stops too early.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::objective::MEigenpair;
use crate::report::{IterationRecord, SolveReport, SolveStatus};
use crate::tensor::HierSymTensor;
use crate::{dot, norm, rng};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig {
    pub tau: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub certify_tol: f64,
}

impl PowerConfig {
    /// Defaults with `tau` from [`default_tau`].
    pub fn for_tensor(tensor: &HierSymTensor) -> Self {
        Self {
            tau: default_tau(tensor),
            eps: 1e-6,
            max_iter: 2000,
            seed: 0,
            certify_tol: 1e-4,
        }
    }
}

/// Sum of absolute entries. A heuristic shift that in practice keeps the
/// Rayleigh values nondecreasing.
pub fn default_tau(tensor: &HierSymTensor) -> f64 {
    tensor.abs_sum()
}

fn normalized(v: Vec<f64>, what: &str, k: usize) -> Result<Vec<f64>> {
    let nv = norm(&v);
    if !(nv > 0.0) || !nv.is_finite() {
        return Err(Error::Breakdown(format!(
            "{what} vanished at iteration {k}; try a larger shift"
        )));
    }
    Ok(v.into_iter().map(|a| a / nv).collect())
}

/// Runs the iteration from `start = (x0, y0)` (or a seeded normal draw).
pub fn power_solve(
    tensor: &HierSymTensor,
    cfg: &PowerConfig,
    start: Option<&[f64]>,
) -> Result<SolveReport> {
    if !(cfg.tau >= 0.0) {
        return Err(Error::Config(format!("tau must be >= 0, got {}", cfg.tau)));
    }
    let started = Instant::now();
    let (m, n) = (tensor.m(), tensor.n());
    let z0 = match start {
        Some(z) if z.len() != m + n => {
            return Err(Error::Dimension(format!(
                "start has length {}, expected {}",
                z.len(),
                m + n
            )))
        }
        Some(z) => z.to_vec(),
        None => rng::normal_vector(cfg.seed, m + n),
    };
    let (x0, y0) = z0.split_at(m);
    let breakdown = |e: Error, trace: Vec<IterationRecord>, z: Vec<f64>| SolveReport {
        status: SolveStatus::Breakdown,
        pair: None,
        iters: trace.len(),
        trace,
        wall_time: started.elapsed().as_secs_f64(),
        shift_t: cfg.tau,
        z,
        escalations: Vec::new(),
        message: Some(e.to_string()),
    };
    let mut x = match normalized(x0.to_vec(), "x", 0) {
        Ok(v) => v,
        Err(e) => return Ok(breakdown(e, Vec::new(), z0)),
    };
    let mut y = match normalized(y0.to_vec(), "y", 0) {
        Ok(v) => v,
        Err(e) => return Ok(breakdown(e, Vec::new(), z0)),
    };
    let mut lambda = tensor.contract_scalar(&x, &y)?;
    let mut trace = Vec::new();

    for k in 0..cfg.max_iter {
        let (ax, _) = tensor.contract_both_unchecked(&x, &y);
        let nx = ax.iter().zip(&x).map(|(a, b)| a + cfg.tau * b).collect();
        let x_new = match normalized(nx, "x", k) {
            Ok(v) => v,
            Err(e) => return Ok(breakdown(e, trace, [x, y].concat())),
        };
        let (_, ay) = tensor.contract_both_unchecked(&x_new, &y);
        let ny = ay.iter().zip(&y).map(|(a, b)| a + cfg.tau * b).collect();
        let y_new = match normalized(ny, "y", k) {
            Ok(v) => v,
            Err(e) => return Ok(breakdown(e, trace, [x_new, y].concat())),
        };
        x = x_new;
        y = y_new;
        let (ax, _) = tensor.contract_both_unchecked(&x, &y);
        let next = dot(&x, &ax);
        let change = next - lambda;
        if change < 0.0 && change.abs() > 1e-12 * next.abs().max(1.0) {
            log::warn!(
                "power iteration {k}: Rayleigh value decreased by {:e}",
                -change
            );
        }
        trace.push(IterationRecord {
            k,
            phi: next,
            grad_norm: change.abs(),
            alpha: 1.0,
            gdot: 0.0,
            gamma_k: 0.0,
            t_shift: cfg.tau,
        });
        lambda = next;
        if change.abs() <= cfg.eps {
            let pair = MEigenpair::new(tensor, lambda, x.clone(), y.clone());
            if pair.max_residual() > cfg.certify_tol {
                continue;
            }
            return Ok(SolveReport {
                status: SolveStatus::Converged,
                pair: Some(pair),
                iters: trace.len(),
                trace,
                wall_time: started.elapsed().as_secs_f64(),
                shift_t: 0.0,
                z: [x, y].concat(),
                escalations: Vec::new(),
                message: None,
            });
        }
    }
    Ok(SolveReport {
        status: SolveStatus::MaxIter,
        pair: None,
        iters: trace.len(),
        trace,
        wall_time: started.elapsed().as_secs_f64(),
        shift_t: 0.0,
        z: [x, y].concat(),
        escalations: Vec::new(),
        message: Some(format!("no convergence within {} iterations", cfg.max_iter)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::verify_eigenpair;
    use crate::tensor::{fixture, FixtureName};

    #[test]
    fn default_tau_values() {
        let t = fixture(FixtureName::Ex41);
        assert_eq!(default_tau(&t), 47.0);
        assert_eq!(default_tau(&HierSymTensor::zeros(2, 2)), 0.0);
        assert_eq!(default_tau(&t.scaled(2.5)), 2.5 * 47.0);
    }

    #[test]
    fn rank_one_converges_immediately() {
        let u = [1.0, 2.0];
        let v = [0.5, -1.0, 0.0];
        let t = HierSymTensor::rank_one(&u, &v);
        let cfg = PowerConfig {
            tau: 0.0,
            eps: 1e-12,
            max_iter: 10,
            seed: 0,
            certify_tol: 1e-4,
        };
        let rep = power_solve(&t, &cfg, Some(&[0.3, 0.9, 1.0, 0.2, 0.0])).unwrap();
        assert!(rep.converged());
        assert!(rep.iters <= 3, "{}", rep.iters);
        assert!((rep.lambda().unwrap() - 5.0 * 1.25).abs() < 1e-12);
    }

    #[test]
    fn ex41_reaches_largest_value() {
        let t = fixture(FixtureName::Ex41);
        let best = (0..5)
            .map(|s| {
                power_solve(
                    &t,
                    &PowerConfig {
                        seed: s,
                        ..PowerConfig::for_tensor(&t)
                    },
                    None,
                )
                .unwrap()
            })
            .filter(|r| r.converged())
            .map(|r| r.lambda().unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((best - 13.8616).abs() < 1e-3, "{best}");
    }

    #[test]
    fn converged_output_certifies_and_stays_normalized() {
        let t = fixture(FixtureName::Ex43);
        let rep = power_solve(&t, &PowerConfig::for_tensor(&t), None).unwrap();
        assert!(rep.converged());
        let pair = rep.pair.as_ref().unwrap();
        assert!((norm(&pair.x) - 1.0).abs() < 1e-14);
        assert!((norm(&pair.y) - 1.0).abs() < 1e-14);
        assert!(verify_eigenpair(&t, pair, 1e-4).unwrap());
    }

    #[test]
    fn rayleigh_values_do_not_decrease_with_default_tau() {
        let t = fixture(FixtureName::Ex43);
        let rep = power_solve(
            &t,
            &PowerConfig {
                seed: 4,
                ..PowerConfig::for_tensor(&t)
            },
            None,
        )
        .unwrap();
        for w in rep.trace.windows(2) {
            assert!(w[1].phi >= w[0].phi - 1e-12);
        }
    }

    #[test]
    fn zero_tensor_breaks_down() {
        let t = HierSymTensor::zeros(2, 2);
        let cfg = PowerConfig {
            tau: 0.0,
            eps: 1e-6,
            max_iter: 10,
            seed: 1,
            certify_tol: 1e-4,
        };
        let rep = power_solve(&t, &cfg, None).unwrap();
        assert_eq!(rep.status, SolveStatus::Breakdown);
        assert!(rep.message.unwrap().contains("larger shift"));
    }
}
