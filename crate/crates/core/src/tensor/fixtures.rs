//! Published test tensors.

use std::fmt;
use std::str::FromStr;

use super::{symmetrize, validate_symmetry, Array4, HierSymTensor};
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixtureName {
    /// 2x2x2x2 tensor with nine listed nonzeros; largest M-eigenvalue 13.8616.
    Ex41,
    /// 3x3x3x3 elasticity-type tensor (see [`ex42`] for how its entries are read).
    Ex42,
    /// 3x3x3x3 tensor printed as nine 3x3 slices; largest M-eigenvalue 2.3227.
    Ex43,
    /// 2x2x2x2 with `a_1111 = -1`, no positive M-eigenvalue.
    RankOneNeg,
}

pub const FIXTURE_NAMES: [&str; 4] = ["ex41", "ex42", "ex43", "rank_one_neg"];

impl FixtureName {
    pub fn as_str(self) -> &'static str {
        match self {
            FixtureName::Ex41 => "ex41",
            FixtureName::Ex42 => "ex42",
            FixtureName::Ex43 => "ex43",
            FixtureName::RankOneNeg => "rank_one_neg",
        }
    }
}

impl fmt::Display for FixtureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FixtureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ex41" => Ok(FixtureName::Ex41),
            "ex42" => Ok(FixtureName::Ex42),
            "ex43" => Ok(FixtureName::Ex43),
            "rank_one_neg" => Ok(FixtureName::RankOneNeg),
            other => Err(Error::Unknown {
                kind: "fixture",
                name: other.to_string(),
            }),
        }
    }
}

pub fn fixture(name: FixtureName) -> HierSymTensor {
    match name {
        FixtureName::Ex41 => ex41(),
        FixtureName::Ex42 => ex42(),
        FixtureName::Ex43 => ex43(),
        FixtureName::RankOneNeg => rank_one_neg(),
    }
}

fn from_assignments(m: usize, n: usize, entries: &[(&str, f64)]) -> Array4 {
    let mut raw = Array4::zeros(m, n);
    for &(idx, v) in entries {
        let d: Vec<usize> = idx.bytes().map(|b| usize::from(b - b'1')).collect();
        raw.set(d[0], d[1], d[2], d[3], v);
    }
    raw
}

fn ex41() -> HierSymTensor {
    let raw = from_assignments(
        2,
        2,
        &[
            ("1111", 2.0),
            ("1211", 3.0),
            ("2111", 6.0),
            ("1121", 6.0),
            ("1112", 3.0),
            ("1212", 2.0),
            ("2212", 10.0),
            ("1222", 10.0),
            ("2222", 5.0),
        ],
    );
    HierSymTensor::from_raw_checked(&raw, 0.0).expect("listed entries form complete orbits")
}

/// The printed entry list assigns some indices twice with different values
/// (`a_2233`, `a_2323`, `a_1331`). Assignments are applied literally in the
/// printed order, the later binding wins, and the result is projected onto the
/// symmetry class by orbit averaging.
fn ex42() -> HierSymTensor {
    let raw = from_assignments(
        3,
        3,
        &[
            ("2222", 196.6),
            ("1111", 196.6),
            ("3311", 83.2),
            ("2233", 83.2),
            ("2323", 54.7),
            ("2322", 54.7),
            ("3131", 54.7),
            ("1331", 54.7),
            ("2233", -31.7),
            ("2323", -31.7),
            ("1213", 31.7),
            ("2131", 31.7),
            ("3333", 110.0),
            ("2121", 64.4),
            ("2321", -25.3),
            ("1232", -25.3),
            ("1331", 25.3),
            ("3112", 44.8),
            ("1321", 44.8),
            ("2132", -35.84),
            ("1223", -35.84),
            ("1122", 132.2),
        ],
    );
    symmetrize(&raw).expect("finite entries")
}

type Slice = ((usize, usize), [[f64; 3]; 3]);

#[rustfmt::skip]
const EX43_SLICES: [Slice; 9] = [
    ((1, 1), [[-0.9727, 0.3169, -0.3437], [-0.6332, -0.7866, 0.4257], [-0.3350, -0.9896, -0.4323]]),
    ((2, 1), [[-0.6332, -0.7866, 0.4257], [0.7387, 0.6873, -0.3248], [-0.7986, -0.5988, -0.9485]]),
    ((3, 1), [[-0.3350, -0.9896, -0.4323], [-0.7986, -0.5988, -0.9485], [0.5853, 0.5921, 0.6301]]),
    ((1, 2), [[0.3169, 0.6158, -0.0184], [-0.7866, 0.0160, 0.0085], [-0.9896, -0.6663, 0.2559]]),
    ((2, 2), [[-0.7866, 0.0160, 0.0085], [0.6873, 0.5160, -0.0216], [-0.5988, 0.0411, 0.9857]]),
    ((3, 2), [[-0.9896, -0.6663, 0.2559], [-0.5988, 0.0411, 0.9857], [0.5921, -0.2907, -0.3881]]),
    ((1, 3), [[-0.3437, -0.0184, 0.5649], [0.4257, 0.0085, -0.1439], [-0.4323, 0.2559, 0.6162]]),
    ((2, 3), [[0.4257, 0.0085, -0.1439], [-0.3248, -0.0216, -0.0037], [-0.9485, 0.9857, -0.7734]]),
    ((3, 3), [[-0.4323, 0.2559, 0.6162], [-0.9485, 0.9857, -0.7734], [0.6301, -0.3881, -0.8526]]),
];

/// Slices `A(:, :, k, l)` taken verbatim; rows are `i`, columns `j`.
pub(crate) fn ex43_raw() -> Array4 {
    let mut raw = Array4::zeros(3, 3);
    for ((k, l), slice) in EX43_SLICES {
        for (i, row) in slice.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                raw.set(i, j, k - 1, l - 1, v);
            }
        }
    }
    raw
}

fn ex43() -> HierSymTensor {
    let raw = ex43_raw();
    let check = validate_symmetry(&raw);
    assert!(
        check.max_violation <= 1e-3,
        "printed slices violate symmetry by {}",
        check.max_violation
    );
    symmetrize(&raw).expect("finite entries")
}

fn rank_one_neg() -> HierSymTensor {
    let mut raw = Array4::zeros(2, 2);
    raw.set(0, 0, 0, 0, -1.0);
    symmetrize(&raw).expect("finite entries")
}
