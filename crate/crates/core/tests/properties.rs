use meig::mgm::rescale;
use meig::objective::{grid_oracle, grid_oracle_min};
use meig::profile::{compute_profile, Metric, RunRecord};
use meig::shift::drive;
use meig::tensor::{symmetrize, validate_symmetry, Array4};
use meig::{DriverConfig, HierSymTensor, ShiftedObjective, SolveStatus, SolverConfig};
use proptest::prelude::*;

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=4, 1usize..=4)
}

fn raw(m: usize, n: usize) -> impl Strategy<Value = Array4> {
    prop::collection::vec(-5.0f64..5.0, m * n * m * n)
        .prop_map(move |d| Array4::from_vec(m, n, d).unwrap())
}

fn vector(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, len)
}

/// Random symmetric tensor with matching `x` and `y`.
fn problem() -> impl Strategy<Value = (HierSymTensor, Vec<f64>, Vec<f64>)> {
    dims().prop_flat_map(|(m, n)| {
        (
            raw(m, n).prop_map(|r| symmetrize(&r).unwrap()),
            vector(m),
            vector(n),
        )
    })
}

fn brute(t: &HierSymTensor, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let (m, n) = (t.m(), t.n());
    let mut ax = vec![0.0; m];
    let mut ay = vec![0.0; n];
    let mut scale = 0.0;
    for i in 0..m {
        for j in 0..n {
            for k in 0..m {
                for l in 0..n {
                    let a = t.get(i, j, k, l);
                    ax[i] += a * y[j] * x[k] * y[l];
                    ay[l] += a * x[i] * y[j] * x[k];
                    scale += (a * x[i] * y[j] * x[k] * y[l]).abs() + (a * y[j] * x[k] * y[l]).abs();
                }
            }
        }
    }
    (ax, ay, scale)
}

fn close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
    (a - b).abs() <= rel * scale.max(a.abs()).max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn symmetry_identity((t, x, y) in problem()) {
        let ax = t.contract_x(&x, &y).unwrap();
        let ay = t.contract_y(&x, &y).unwrap();
        let s = t.contract_scalar(&x, &y).unwrap();
        let (_, _, scale) = brute(&t, &x, &y);
        let xa: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        let ya: f64 = y.iter().zip(&ay).map(|(a, b)| a * b).sum();
        prop_assert!(close(xa, s, 1e-12, scale));
        prop_assert!(close(ya, s, 1e-12, scale));
    }

    #[test]
    fn bilinear_homogeneity((t, x, y) in problem(), c in -3.0f64..3.0) {
        let base = t.contract_x(&x, &y).unwrap();
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        let cy: Vec<f64> = y.iter().map(|v| c * v).collect();
        let sx = t.contract_x(&cx, &y).unwrap();
        let sy = t.contract_x(&x, &cy).unwrap();
        let (_, _, scale) = brute(&t, &x, &y);
        for i in 0..base.len() {
            prop_assert!(close(sx[i], c * base[i], 1e-12, c.abs() * scale));
            prop_assert!(close(sy[i], c * c * base[i], 1e-12, c * c * scale));
        }
    }

    #[test]
    fn contractions_match_quadruple_loop((t, x, y) in problem()) {
        let (bx, by, scale) = brute(&t, &x, &y);
        let (ax, ay) = t.contract_both(&x, &y).unwrap();
        for (a, b) in ax.iter().zip(&bx) {
            prop_assert!((a - b).abs() <= 1e-13 * scale.max(f64::MIN_POSITIVE));
        }
        for (a, b) in ay.iter().zip(&by) {
            prop_assert!((a - b).abs() <= 1e-13 * scale.max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn symmetrize_is_linear_idempotent_projection(
        (r, s) in dims().prop_flat_map(|(m, n)| (raw(m, n), raw(m, n))),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let (m, n) = (r.m(), r.n());
        let comb: Vec<f64> = r.as_slice().iter().zip(s.as_slice()).map(|(p, q)| a * p + b * q).collect();
        let lhs = symmetrize(&Array4::from_vec(m, n, comb).unwrap()).unwrap();
        let sr = symmetrize(&r).unwrap();
        let ss = symmetrize(&s).unwrap();
        for (idx, v) in lhs.entries().iter().enumerate() {
            let rhs = a * sr.entries()[idx] + b * ss.entries()[idx];
            prop_assert!((v - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
        prop_assert!(validate_symmetry(&sr.to_raw()).max_violation == 0.0);
        prop_assert_eq!(symmetrize(&sr.to_raw()).unwrap(), sr);
    }

    #[test]
    fn gradient_matches_central_differences(
        (t, x, y) in problem(),
        shift in prop_oneof![Just(0.0), 0.0f64..20.0],
    ) {
        let z: Vec<f64> = x.iter().chain(&y).copied().collect();
        let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let z: Vec<f64> = if r > 3.0 { z.iter().map(|v| v * 3.0 / r).collect() } else { z };
        let obj = ShiftedObjective::new(&t, shift).unwrap();
        let m = t.m();
        let g = obj.evaluate_z(&z).unwrap().stacked();
        let h = 1e-6;
        let mut err = 0.0_f64;
        for i in 0..z.len() {
            let (mut zp, mut zm) = (z.clone(), z.clone());
            zp[i] += h;
            zm[i] -= h;
            let fp = obj.eval(&zp[..m], &zp[m..]).unwrap();
            let fm = obj.eval(&zm[..m], &zm[m..]).unwrap();
            err += ((fp - fm) / (2.0 * h) - g[i]).powi(2);
        }
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(err.sqrt() <= 1e-6 * gn.max(1.0), "error {} vs |g| {}", err.sqrt(), gn);
    }

    #[test]
    fn unshifted_value_is_scale_invariant((t, x, y) in problem(), xi in prop_oneof![-4.0f64..-0.25, 0.25f64..4.0]) {
        let obj = ShiftedObjective::unshifted(&t);
        let f = obj.eval(&x, &y).unwrap();
        let sx: Vec<f64> = x.iter().map(|v| v * xi).collect();
        let sy: Vec<f64> = y.iter().map(|v| v / xi).collect();
        let g = obj.eval(&sx, &sy).unwrap();
        let (_, _, scale) = brute(&t, &x, &y);
        let quartic = x.iter().map(|v| v * v).sum::<f64>().powi(2) * y.iter().map(|v| v * v).sum::<f64>().powi(2);
        prop_assert!(close(f, g, 1e-10, scale + quartic));
        let z: Vec<f64> = x.iter().chain(&y).copied().collect();
        if x.iter().any(|v| *v != 0.0) && y.iter().any(|v| *v != 0.0) {
            let zr = rescale(&z, t.m()).unwrap();
            let fr = obj.eval(&zr[..t.m()], &zr[t.m()..]).unwrap();
            prop_assert!(close(f, fr, 1e-10, scale + quartic));
        }
    }

    #[test]
    fn critical_points_are_eigenpairs(u in vector(3), v in vector(2), a in 0.3f64..3.0) {
        let nu = u.iter().map(|p| p * p).sum::<f64>().sqrt();
        let nv = v.iter().map(|p| p * p).sum::<f64>().sqrt();
        prop_assume!(nu > 0.1 && nv > 0.1);
        let u: Vec<f64> = u.iter().map(|p| p / nu).collect();
        let v: Vec<f64> = v.iter().map(|p| p / nv).collect();
        let t = HierSymTensor::rank_one(&u, &v);
        let x: Vec<f64> = u.iter().map(|p| p * a).collect();
        let y: Vec<f64> = v.iter().map(|p| p / a).collect();
        let obj = ShiftedObjective::unshifted(&t);
        let g = obj.evaluate(&x, &y).unwrap().stacked();
        if g.iter().all(|c| c.abs() <= 1e-8) {
            let pair = obj.extract_eigenpair(&x, &y).unwrap();
            prop_assert!(pair.max_residual() <= 1e-6);
        }
    }

    #[test]
    fn profile_endpoint_counts_solved(costs in prop::collection::vec((1usize..50, any::<bool>()), 2..30)) {
        let records: Vec<RunRecord> = costs
            .iter()
            .enumerate()
            .map(|(i, &(iters, ok))| RunRecord {
                problem_id: format!("p{}", i / 2),
                method_id: if i % 2 == 0 { "A".into() } else { "B".into() },
                m: 2,
                n: 2,
                trial: 0,
                status: if ok { SolveStatus::Converged } else { SolveStatus::MaxIter },
                iters,
                time_s: 0.0,
                lambda: None,
            })
            .collect();
        let table = compute_profile(&records, Metric::Iter).unwrap();
        let tau_max = table.ratios.iter().flatten().copied().filter(|r| r.is_finite()).fold(1.0, f64::max);
        for (y, method) in table.methods.iter().enumerate() {
            let solved = records.iter().filter(|r| &r.method_id == method && r.solved()).count();
            prop_assert_eq!(table.phi(y, tau_max), solved as f64 / table.problems.len() as f64);
            for w in table.curves[y].points.windows(2) {
                prop_assert!(w[0].1 <= w[1].1);
            }
        }
    }
}

proptest! {
    // Each case runs two 1000 x 1000 grid searches.
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn value_respects_lower_bound(entries in prop::collection::vec(-3.0f64..3.0, 16), x in vector(2), y in vector(2)) {
        let t = symmetrize(&Array4::from_vec(2, 2, entries).unwrap()).unwrap();
        let c = grid_oracle(&t, 1000).unwrap().abs().max(grid_oracle_min(&t, 1000).unwrap().abs());
        let f = ShiftedObjective::unshifted(&t).eval(&x, &y).unwrap();
        prop_assert!(f >= -0.25 * c * c - 1e-9 * (1.0 + c * c), "f {} bound {}", f, -0.25 * c * c);
    }
}

#[test]
fn large_shift_makes_objective_negative_at_result() {
    let t = meig::tensor::fixture(meig::tensor::FixtureName::RankOneNeg);
    let rep = drive(&t, &DriverConfig::with_inner(SolverConfig::mgm2()), None).unwrap();
    assert!(rep.converged());
    assert!(rep.shift_t > 0.0);
    let obj = ShiftedObjective::new(&t, rep.shift_t).unwrap();
    let (x, y) = rep.z.split_at(t.m());
    assert!(obj.eval(x, y).unwrap() < 0.0);
}

#[test]
fn escalation_shifts_strictly_increase() {
    let t = meig::tensor::fixture(meig::tensor::FixtureName::RankOneNeg);
    let mut cfg = DriverConfig {
        max_escalations: 4,
        ..DriverConfig::default()
    };
    cfg.inner.max_iter = 1;
    let rep = drive(&t, &cfg, None).unwrap();
    let ts: Vec<f64> = rep.escalations.iter().map(|e| e.t).collect();
    assert_eq!(ts, vec![1.0, 10.0, 100.0, 1000.0]);
}
