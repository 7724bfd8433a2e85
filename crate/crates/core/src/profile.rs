//! Dolan–Moré performance profiles.
//!
//! For problem `w` and method `y` with cost `b_wy`, the ratio is
//! `r_wy = b_wy / min_y b_wy` over the methods that solved `w`, and
//! `phi_y(tau) = |{w : r_wy <= tau}| / n_w`. Unsolved runs get `r = inf`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::SolveStatus;

/// One (problem, method, trial) outcome as stored in the run CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem_id: String,
    pub method_id: String,
    pub m: usize,
    pub n: usize,
    pub trial: usize,
    pub status: SolveStatus,
    pub iters: usize,
    pub time_s: f64,
    pub lambda: Option<f64>,
}

impl RunRecord {
    pub fn solved(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    fn problem_key(&self) -> (String, usize) {
        (self.problem_id.clone(), self.trial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Iter,
    Time,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iter" => Ok(Metric::Iter),
            "time" => Ok(Metric::Time),
            other => Err(Error::Unknown {
                kind: "metric",
                name: other.to_string(),
            }),
        }
    }
}

impl Metric {
    /// Positive cost of a run. Zero-iteration runs count as one iteration and
    /// times are floored at a nanosecond so every ratio is defined.
    fn cost(self, rec: &RunRecord) -> f64 {
        match self {
            Metric::Iter => rec.iters.max(1) as f64,
            Metric::Time => rec.time_s.max(1e-9),
        }
    }
}

pub fn write_records_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: std::io::Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

/// Step curve `phi_y` sampled at its breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub method: String,
    /// `(tau, phi(tau))`, tau ascending from 1.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileTable {
    pub methods: Vec<String>,
    /// `problem_id/trial` labels.
    pub problems: Vec<String>,
    /// `ratios[w][y]`; `f64::INFINITY` for unsolved runs.
    pub ratios: Vec<Vec<f64>>,
    pub curves: Vec<ProfileCurve>,
}

impl ProfileTable {
    /// `phi_y(tau)` for method index `y`.
    pub fn phi(&self, y: usize, tau: f64) -> f64 {
        let hits = self.ratios.iter().filter(|row| row[y] <= tau).count();
        hits as f64 / self.problems.len() as f64
    }

    /// CSV with columns `method_id,tau,phi`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method_id", "tau", "phi"])?;
        for c in &self.curves {
            for &(tau, phi) in &c.points {
                w.write_record([c.method.clone(), tau.to_string(), phi.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn compute_profile(records: &[RunRecord], metric: Metric) -> Result<ProfileTable> {
    if records.is_empty() {
        return Err(Error::Value("no run records to profile".into()));
    }
    let mut methods: Vec<String> = records.iter().map(|r| r.method_id.clone()).collect();
    methods.sort();
    methods.dedup();
    let method_idx: BTreeMap<&str, usize> = methods
        .iter()
        .enumerate()
        .map(|(i, m)| (m.as_str(), i))
        .collect();

    let mut costs: BTreeMap<(String, usize), Vec<Option<f64>>> = BTreeMap::new();
    for r in records {
        let row = costs
            .entry(r.problem_key())
            .or_insert_with(|| vec![None; methods.len()]);
        let y = method_idx[r.method_id.as_str()];
        if row[y].is_some() {
            return Err(Error::Value(format!(
                "duplicate record for problem {} trial {} method {}",
                r.problem_id, r.trial, r.method_id
            )));
        }
        row[y] = Some(if r.solved() {
            metric.cost(r)
        } else {
            f64::INFINITY
        });
    }

    let mut problems = Vec::with_capacity(costs.len());
    let mut ratios = Vec::with_capacity(costs.len());
    for ((pid, trial), row) in costs {
        problems.push(format!("{pid}/{trial}"));
        // A method with no record for this problem counts as a failure.
        let b: Vec<f64> = row
            .into_iter()
            .map(|c| c.unwrap_or(f64::INFINITY))
            .collect();
        let best = b.iter().copied().fold(f64::INFINITY, f64::min);
        ratios.push(
            b.iter()
                .map(|&v| {
                    if v.is_finite() {
                        v / best
                    } else {
                        f64::INFINITY
                    }
                })
                .collect::<Vec<f64>>(),
        );
    }

    let mut table = ProfileTable {
        methods,
        problems,
        ratios,
        curves: Vec::new(),
    };
    let mut breaks: Vec<f64> = table
        .ratios
        .iter()
        .flatten()
        .copied()
        .filter(|r| r.is_finite())
        .chain(std::iter::once(1.0))
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    table.curves = (0..table.methods.len())
        .map(|y| ProfileCurve {
            method: table.methods[y].clone(),
            points: breaks.iter().map(|&tau| (tau, table.phi(y, tau))).collect(),
        })
        .collect();
    Ok(table)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Self-contained SVG step plot of every curve.
pub fn render_svg(table: &ProfileTable) -> Result<String> {
    if table.curves.is_empty() || table.curves.iter().any(|c| c.points.is_empty()) {
        return Err(Error::Value("profile has no curve samples to plot".into()));
    }
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 150.0, 20.0, 50.0);
    let tau_max = table
        .curves
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.0))
        .fold(1.0_f64, f64::max);
    let tau_hi = if tau_max > 1.0 { tau_max } else { 2.0 };
    let px = |tau: f64| left + (tau - 1.0) / (tau_hi - 1.0) * (w - left - right);
    let py = |phi: f64| top + (1.0 - phi) * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{:.2},{:.2} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
        left,
        top,
        h - bottom,
        w - right
    );
    for i in 0..=4 {
        let phi = i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{phi:.2}</text>"#,
            left - 6.0,
            py(phi) + 4.0
        );
        let tau = 1.0 + (tau_hi - 1.0) * phi;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{tau:.2}</text>"#,
            px(tau),
            h - bottom + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">tau</text>"#,
        left + (w - left - right) / 2.0,
        h - 10.0
    );
    for (idx, c) in table.curves.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut d = format!("M{:.2},{:.2}", px(c.points[0].0), py(c.points[0].1));
        for win in c.points.windows(2) {
            let _ = write!(d, " H{:.2} V{:.2}", px(win[1].0), py(win[1].1));
        }
        let _ = write!(d, " H{:.2}", px(tau_hi));
        let _ = writeln!(
            s,
            r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="2"/>"#
        );
        let ly = top + 16.0 * idx as f64 + 10.0;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            w - right + 10.0,
            w - right + 30.0,
            w - right + 36.0,
            ly + 4.0,
            escape(&c.method)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Writes [`render_svg`] output; no file is created when rendering fails.
pub fn emit_profile_svg(table: &ProfileTable, path: impl AsRef<Path>) -> Result<()> {
    let svg = render_svg(table)?;
    fs::write(path, svg)?;
    Ok(())
}
