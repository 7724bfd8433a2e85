//! Fourth-order tensors with hierarchical (elasticity-type) symmetry.
//!
//! A tensor `A` in `R^{m x n x m x n}` is hierarchically symmetric when
//! `a_ijkl = a_kjil = a_ilkj = a_klij` for all indices. Entries are stored
//! dense and row-major over `(i, j, k, l)`; all indices are 0-based in the API
//! and 1-based in files and CLI output.

mod fixtures;
mod io;

pub use fixtures::{fixture, FixtureName, FIXTURE_NAMES};
pub use io::{load, load_with_info, store, LoadInfo, TensorFormat};

use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::rng;

/// Absolute tolerance used by [`validate_symmetry`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Absolute tolerance accepted when loading a dense tensor from text.
pub const LOAD_SYMMETRY_TOL: f64 = 1e-9;

/// The four index tuples related by hierarchical symmetry.
#[inline]
pub fn orbit(i: usize, j: usize, k: usize, l: usize) -> [(usize, usize, usize, usize); 4] {
    [(i, j, k, l), (k, j, i, l), (i, l, k, j), (k, l, i, j)]
}

#[inline]
fn offset(m: usize, n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * m + k) * n + l
}

/// Unvalidated `m x n x m x n` array.
#[derive(Debug, Clone, PartialEq)]
pub struct Array4 {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl Array4 {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            data: vec![0.0; m * n * m * n],
        }
    }

    pub fn from_vec(m: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Dimension(format!(
                "dimensions must be positive, got m={m}, n={n}"
            )));
        }
        if data.len() != m * n * m * n {
            return Err(Error::Dimension(format!(
                "expected {} entries for an {m}x{n}x{m}x{n} array, got {}",
                m * n * m * n,
                data.len()
            )));
        }
        Ok(Self { m, n, data })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[offset(self.m, self.n, i, j, k, l)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, value: f64) {
        let o = offset(self.m, self.n, i, j, k, l);
        self.data[o] = value;
    }

    /// Sets every member of the symmetry orbit of `(i, j, k, l)`.
    pub fn set_orbit(&mut self, i: usize, j: usize, k: usize, l: usize, value: f64) {
        for (a, b, c, d) in orbit(i, j, k, l) {
            self.set(a, b, c, d, value);
        }
    }

    fn indices(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> {
        let (m, n) = (self.m, self.n);
        (0..m).flat_map(move |i| {
            (0..n).flat_map(move |j| (0..m).flat_map(move |k| (0..n).map(move |l| (i, j, k, l))))
        })
    }
}

/// Outcome of a symmetry check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryCheck {
    pub symmetric: bool,
    pub max_violation: f64,
}

/// Checks every orbit for equal values within [`SYMMETRY_TOL`].
pub fn validate_symmetry(raw: &Array4) -> SymmetryCheck {
    let mut worst = 0.0_f64;
    for (i, j, k, l) in raw.indices() {
        let base = raw.get(i, j, k, l);
        for (a, b, c, d) in orbit(i, j, k, l).into_iter().skip(1) {
            let diff = (raw.get(a, b, c, d) - base).abs();
            // NaN compares false; treat it as an infinite violation.
            worst = if diff.is_nan() {
                f64::INFINITY
            } else {
                worst.max(diff)
            };
        }
    }
    SymmetryCheck {
        symmetric: worst <= SYMMETRY_TOL,
        max_violation: worst,
    }
}

/// Projects onto the symmetry class: each entry becomes the mean of its orbit.
///
/// Orbit members are summed pairwise as `(a + b) + (c + d)`, which makes the
/// result bit-identical across the orbit, leaves symmetric input unchanged,
/// and makes the projection exactly idempotent.
pub fn symmetrize(raw: &Array4) -> Result<HierSymTensor> {
    if let Some(pos) = raw.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::Value(format!(
            "non-finite entry {} at flat offset {pos}",
            raw.data[pos]
        )));
    }
    let mut out = vec![0.0; raw.data.len()];
    for (i, j, k, l) in raw.indices() {
        let [p, q, r, s] = orbit(i, j, k, l).map(|(a, b, c, d)| raw.get(a, b, c, d));
        out[offset(raw.m, raw.n, i, j, k, l)] = ((p + q) + (r + s)) * 0.25;
    }
    Ok(HierSymTensor {
        m: raw.m,
        n: raw.n,
        data: out,
    })
}

/// Distribution descriptor for random tensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub m: usize,
    pub n: usize,
    pub low: f64,
    pub high: f64,
    pub seed: u64,
}

/// Where a tensor's entries come from.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorSource {
    Dense(Array4),
    /// 1-based `(i, j, k, l, value)` entries; unlisted entries are zero.
    Sparse {
        m: usize,
        n: usize,
        entries: Vec<(usize, usize, usize, usize, f64)>,
    },
    Generator(GeneratorSpec),
}

impl TensorSource {
    /// Materializes the tensor. Dense input must already be symmetric within
    /// [`LOAD_SYMMETRY_TOL`]; sparse entries are expanded over their orbit.
    pub fn build(&self) -> Result<(HierSymTensor, f64)> {
        match self {
            TensorSource::Dense(raw) => {
                let check = validate_symmetry(raw);
                if !(check.max_violation <= LOAD_SYMMETRY_TOL) {
                    return Err(Error::Validation {
                        violation: check.max_violation,
                        tolerance: LOAD_SYMMETRY_TOL,
                    });
                }
                Ok((symmetrize(raw)?, check.max_violation))
            }
            TensorSource::Sparse { m, n, entries } => {
                let raw = expand_sparse(*m, *n, entries)?;
                let check = validate_symmetry(&raw);
                Ok((symmetrize(&raw)?, check.max_violation))
            }
            TensorSource::Generator(spec) => Ok((generate_random(spec)?, 0.0)),
        }
    }
}

pub(crate) fn expand_sparse(
    m: usize,
    n: usize,
    entries: &[(usize, usize, usize, usize, f64)],
) -> Result<Array4> {
    let mut raw = Array4::from_vec(m, n, vec![0.0; m * n * m * n])?;
    for (pos, &(i, j, k, l, v)) in entries.iter().enumerate() {
        let in_range = |idx: usize, dim: usize| (1..=dim).contains(&idx);
        if !(in_range(i, m) && in_range(j, n) && in_range(k, m) && in_range(l, n)) {
            return Err(Error::Parse {
                context: format!("sparse[{pos}]"),
                message: format!(
                    "index ({i},{j},{k},{l}) out of range for m={m}, n={n} (indices are 1-based)"
                ),
            });
        }
        raw.set_orbit(i - 1, j - 1, k - 1, l - 1, v);
    }
    Ok(raw)
}

/// Samples i.i.d. `U(low, high)` entries from a seeded generator, then symmetrizes.
pub fn generate_random(spec: &GeneratorSpec) -> Result<HierSymTensor> {
    if !(spec.low < spec.high) || !spec.low.is_finite() || !spec.high.is_finite() {
        return Err(Error::Config(format!(
            "generator bounds must satisfy low < high, got ({}, {})",
            spec.low, spec.high
        )));
    }
    if spec.m == 0 || spec.n == 0 {
        return Err(Error::Dimension(format!(
            "dimensions must be positive, got m={}, n={}",
            spec.m, spec.n
        )));
    }
    let dist = Uniform::new(spec.low, spec.high).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = rng::seeded(spec.seed);
    let len = spec.m * spec.n * spec.m * spec.n;
    let data = (0..len).map(|_| dist.sample(&mut rng)).collect();
    symmetrize(&Array4::from_vec(spec.m, spec.n, data)?)
}

/// Dense hierarchically symmetric tensor; immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HierSymTensor {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl HierSymTensor {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            data: vec![0.0; m * n * m * n],
        }
    }

    /// Accepts `raw` if every orbit agrees within `tol`, then symmetrizes it.
    pub fn from_raw_checked(raw: &Array4, tol: f64) -> Result<Self> {
        let check = validate_symmetry(raw);
        if !(check.max_violation <= tol) {
            return Err(Error::Validation {
                violation: check.max_violation,
                tolerance: tol,
            });
        }
        symmetrize(raw)
    }

    /// `a_ijkl = u_i v_j u_k v_l`.
    pub fn rank_one(u: &[f64], v: &[f64]) -> Self {
        let (m, n) = (u.len(), v.len());
        let mut data = Vec::with_capacity(m * n * m * n);
        for &ui in u {
            for &vj in v {
                for &uk in u {
                    for &vl in v {
                        data.push(ui * vj * uk * vl);
                    }
                }
            }
        }
        Self { m, n, data }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[offset(self.m, self.n, i, j, k, l)]
    }

    /// Row-major entries over `(i, j, k, l)`.
    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn to_raw(&self) -> Array4 {
        Array4 {
            m: self.m,
            n: self.n,
            data: self.data.clone(),
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            m: self.m,
            n: self.n,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    /// Sum of absolute entries.
    pub fn abs_sum(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    fn check_dims(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.m || y.len() != self.n {
            return Err(Error::Dimension(format!(
                "tensor is {m}x{n}x{m}x{n} but x has length {} and y has length {}",
                x.len(),
                y.len(),
                m = self.m,
                n = self.n
            )));
        }
        Ok(())
    }

    /// `B_ijk = sum_l a_ijkl y_l`, laid out as `[i][j][k]`.
    fn partial_y(&self, y: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `(A.yxy)_i = sum_jkl a_ijkl y_j x_k y_l`.
    pub fn contract_x(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(x, y)?;
        Ok(self.contract_both_unchecked(x, y).0)
    }

    /// `(Axyx.)_l = sum_ijk a_ijkl x_i y_j x_k`.
    pub fn contract_y(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(x, y)?;
        Ok(self.contract_both_unchecked(x, y).1)
    }

    /// The biquadratic form `Axyxy`.
    pub fn contract_scalar(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let ax = self.contract_x(x, y)?;
        Ok(crate::dot(x, &ax))
    }

    /// Both vector contractions from a single pass over the entries.
    pub fn contract_both(&self, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_dims(x, y)?;
        Ok(self.contract_both_unchecked(x, y))
    }

    // With B_ijk = sum_l a_ijkl y_l, symmetry a_ijkl = a_ilkj gives
    // (Axyx.)_l = sum_ik x_i x_k B_ilk, so one pass yields both contractions.
    pub(crate) fn contract_both_unchecked(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let b = self.partial_y(y);
        let mut ax = vec![0.0; m];
        let mut ay = vec![0.0; n];
        for i in 0..m {
            let mut acc_i = 0.0;
            for j in 0..n {
                let row = &b[(i * n + j) * m..(i * n + j + 1) * m];
                let bx: f64 = row.iter().zip(x).map(|(p, q)| p * q).sum();
                acc_i += y[j] * bx;
                ay[j] += x[i] * bx;
            }
            ax[i] = acc_i;
        }
        (ax, ay)
    }
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;

    fn brute_x(t: &HierSymTensor, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; t.m()];
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..t.n() {
                for k in 0..t.m() {
                    for l in 0..t.n() {
                        *o += t.get(i, j, k, l) * y[j] * x[k] * y[l];
                    }
                }
            }
        }
        out
    }

    fn brute_y(t: &HierSymTensor, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; t.n()];
        for (l, o) in out.iter_mut().enumerate() {
            for i in 0..t.m() {
                for j in 0..t.n() {
                    for k in 0..t.m() {
                        *o += t.get(i, j, k, l) * x[i] * y[j] * x[k];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn ex41_is_symmetric() {
        let t = fixture(FixtureName::Ex41);
        let check = validate_symmetry(&t.to_raw());
        assert!(check.symmetric);
        assert_eq!(check.max_violation, 0.0);
    }

    #[test]
    fn zero_array_is_symmetric() {
        let check = validate_symmetry(&Array4::zeros(2, 2));
        assert!(check.symmetric);
        assert_eq!(check.max_violation, 0.0);
    }

    #[test]
    fn broken_orbit_is_detected() {
        let mut raw = Array4::zeros(2, 2);
        raw.set(0, 0, 0, 0, 1.0);
        raw.set(0, 1, 0, 0, 1.0);
        raw.set(0, 0, 0, 1, 0.0);
        let check = validate_symmetry(&raw);
        assert!(!check.symmetric);
        assert_eq!(check.max_violation, 1.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        assert!(matches!(
            Array4::from_vec(2, 2, vec![0.0; 15]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            Array4::from_vec(0, 2, vec![]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn symmetrize_fixes_symmetric_input() {
        let t = fixture(FixtureName::Ex41);
        assert_eq!(symmetrize(&t.to_raw()).unwrap(), t);
    }

    #[test]
    fn symmetrize_averages_a_full_orbit() {
        // (1,1,2,2) has four distinct orbit members.
        let mut raw = Array4::zeros(2, 2);
        raw.set(0, 0, 1, 1, 4.0);
        let t = symmetrize(&raw).unwrap();
        for (a, b, c, d) in orbit(0, 0, 1, 1) {
            assert_eq!(t.get(a, b, c, d), 1.0);
        }
    }

    #[test]
    fn symmetrize_averages_a_folded_orbit() {
        // (1,1,1,2) folds onto two distinct positions, each counted twice.
        let mut raw = Array4::zeros(2, 2);
        raw.set(0, 0, 0, 1, 4.0);
        let t = symmetrize(&raw).unwrap();
        assert_eq!(t.get(0, 0, 0, 1), 2.0);
        assert_eq!(t.get(0, 1, 0, 0), 2.0);
    }

    #[test]
    fn symmetrize_rejects_non_finite() {
        let mut raw = Array4::zeros(2, 2);
        raw.set(1, 0, 1, 0, f64::NAN);
        assert!(matches!(symmetrize(&raw), Err(Error::Value(_))));
    }

    #[test]
    fn ex41_contractions_by_hand() {
        let t = fixture(FixtureName::Ex41);
        let e1 = [1.0, 0.0];
        assert_eq!(t.contract_x(&e1, &e1).unwrap(), vec![2.0, 6.0]);
        assert_eq!(t.contract_y(&e1, &e1).unwrap(), vec![2.0, 3.0]);
        assert_eq!(t.contract_scalar(&e1, &e1).unwrap(), 2.0);
    }

    #[test]
    fn zero_tensor_contracts_to_zero() {
        let t = HierSymTensor::zeros(3, 2);
        let (x, y) = ([0.3, -1.0, 2.0], [1.5, 0.7]);
        assert_eq!(t.contract_x(&x, &y).unwrap(), vec![0.0; 3]);
        assert_eq!(t.contract_y(&x, &y).unwrap(), vec![0.0; 2]);
        assert_eq!(t.contract_scalar(&x, &y).unwrap(), 0.0);
    }

    #[test]
    fn rank_one_closed_forms() {
        let u = [0.5, -1.0, 2.0];
        let v = [1.5, 0.25];
        let t = HierSymTensor::rank_one(&u, &v);
        let x = [0.2, 0.3, -0.7];
        let y = [-1.1, 0.4];
        let ux = crate::dot(&u, &x);
        let vy = crate::dot(&v, &y);

        let ax = t.contract_x(&x, &y).unwrap();
        let want_x: Vec<f64> = u.iter().map(|ui| ui * vy * vy * ux).collect();
        let oracle_x = brute_x(&t, &x, &y);
        let ay = t.contract_y(&x, &y).unwrap();
        let want_y: Vec<f64> = v.iter().map(|vi| vi * ux * ux * vy).collect();
        let oracle_y = brute_y(&t, &x, &y);
        for i in 0..3 {
            assert!((ax[i] - want_x[i]).abs() < 1e-13);
            assert!((oracle_x[i] - want_x[i]).abs() < 1e-13);
        }
        for l in 0..2 {
            assert!((ay[l] - want_y[l]).abs() < 1e-13);
            assert!((oracle_y[l] - want_y[l]).abs() < 1e-13);
        }

        let nu = crate::norm(&u);
        let nv = crate::norm(&v);
        let un: Vec<f64> = u.iter().map(|a| a / nu).collect();
        let vn: Vec<f64> = v.iter().map(|a| a / nv).collect();
        let s = t.contract_scalar(&un, &vn).unwrap();
        let want = nu * nu * nv * nv;
        assert!((s - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn contraction_dimension_errors() {
        let t = fixture(FixtureName::Ex41);
        assert!(matches!(
            t.contract_x(&[1.0], &[1.0, 0.0]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            t.contract_y(&[1.0, 0.0], &[1.0]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            t.contract_scalar(&[1.0, 0.0, 0.0], &[1.0, 0.0]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn generator_rejects_inverted_bounds() {
        let spec = GeneratorSpec {
            m: 2,
            n: 2,
            low: 5.0,
            high: 0.0,
            seed: 1,
        };
        assert!(matches!(generate_random(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn generator_stays_in_interval_and_is_deterministic() {
        let spec = GeneratorSpec {
            m: 5,
            n: 5,
            low: 0.0,
            high: 1.0,
            seed: 11,
        };
        let a = generate_random(&spec).unwrap();
        assert!(a.entries().iter().all(|&v| v > 0.0 && v < 1.0));
        assert_eq!(a, generate_random(&spec).unwrap());
        let b = generate_random(&GeneratorSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn generator_output_is_symmetric_rectangular() {
        let spec = GeneratorSpec {
            m: 12,
            n: 18,
            low: -5.0,
            high: 5.0,
            seed: 3,
        };
        let t = generate_random(&spec).unwrap();
        assert_eq!(validate_symmetry(&t.to_raw()).max_violation, 0.0);
    }

    #[test]
    fn abs_sum_of_ex41() {
        assert_eq!(fixture(FixtureName::Ex41).abs_sum(), 47.0);
        assert_eq!(HierSymTensor::zeros(2, 3).abs_sum(), 0.0);
    }
}
