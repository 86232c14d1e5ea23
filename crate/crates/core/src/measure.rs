//! Surface observables and growth-exponent fits.

use serde::{Deserialize, Serialize};
use std::io::{self, Write};

use crate::lattice::HeightMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeasureError {
    #[error("fit window [{t_min}, {t_max}] holds {found} usable records, need at least {needed}")]
    TooFewPoints { t_min: u64, t_max: u64, found: usize, needed: usize },
    #[error("record at t = {t} has non-positive t or W2 and cannot enter a log fit")]
    NonPositive { t: u64 },
    #[error("malformed measurement csv at line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

/// Central moments of a height distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    /// `m3 / m2^{3/2}`, `None` when `m2 = 0`.
    pub skewness: Option<f64>,
    /// `m4 / m2² − 3`, `None` when `m2 = 0`.
    pub kurtosis: Option<f64>,
}

pub fn height_moments(heights: &HeightMap) -> Moments {
    let hs = heights.as_slice();
    let n = hs.len() as f64;
    // integer offset first keeps the deviations small
    let h0 = hs[0];
    let shifted_mean = hs.iter().map(|&h| (h - h0) as f64).sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &h in hs {
        let d = (h - h0) as f64 - shifted_mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skewness, kurtosis) = if m2 > 0.0 {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2) - 3.0))
    } else {
        (None, None)
    };
    Moments { mean: h0 as f64 + shifted_mean, m2, m3, m4, skewness, kurtosis }
}

/// Squared interface width `W² = ⟨(h − h̄)²⟩`.
pub fn roughness_sq(heights: &HeightMap) -> f64 {
    height_moments(heights).m2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub t: u64,
    pub w2: f64,
    pub mean_h: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
}

impl MeasurementRecord {
    pub fn from_heights(t: u64, heights: &HeightMap) -> Self {
        let m = height_moments(heights);
        MeasurementRecord {
            t,
            w2: m.m2,
            mean_h: m.mean,
            skewness: m.skewness,
            kurtosis: m.kurtosis,
        }
    }
}

/// Receives records as they are measured.
pub trait RecordSink {
    fn accept(&mut self, record: &MeasurementRecord) -> io::Result<()>;
}

impl RecordSink for Vec<MeasurementRecord> {
    fn accept(&mut self, record: &MeasurementRecord) -> io::Result<()> {
        self.push(*record);
        Ok(())
    }
}

pub struct NullSink;

impl RecordSink for NullSink {
    fn accept(&mut self, _: &MeasurementRecord) -> io::Result<()> {
        Ok(())
    }
}

pub const CSV_HEADER: &str = "t,W2,mean_h,skew,kurt";

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| x.to_string())
}

pub fn csv_line(r: &MeasurementRecord) -> String {
    format!("{},{},{},{},{}", r.t, r.w2, r.mean_h, fmt_opt(r.skewness), fmt_opt(r.kurtosis))
}

/// Streams records as CSV. Optional `# key=value` comment lines precede the
/// header.
pub struct CsvSink<O: Write> {
    out: O,
}

impl<O: Write> CsvSink<O> {
    pub fn new(mut out: O, comments: &[String]) -> io::Result<Self> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "{CSV_HEADER}")?;
        Ok(CsvSink { out })
    }

    pub fn into_inner(mut self) -> io::Result<O> {
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<O: Write> RecordSink for CsvSink<O> {
    fn accept(&mut self, record: &MeasurementRecord) -> io::Result<()> {
        writeln!(self.out, "{}", csv_line(record))
    }
}

pub fn parse_csv(text: &str) -> Result<Vec<MeasurementRecord>, MeasureError> {
    let mut out = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != CSV_HEADER {
                return Err(MeasureError::Csv { line: i + 1, reason: format!("header {line:?}") });
            }
            seen_header = true;
            continue;
        }
        let bad = |reason: String| MeasureError::Csv { line: i + 1, reason };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(bad(format!("{} columns", cols.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
        let opt = |s: &str| num(s).map(|v| if v.is_nan() { None } else { Some(v) });
        out.push(MeasurementRecord {
            t: cols[0].parse().map_err(|e| bad(format!("{:?}: {e}", cols[0])))?,
            w2: num(cols[1])?,
            mean_h: num(cols[2])?,
            skewness: opt(cols[3])?,
            kurtosis: opt(cols[4])?,
        });
    }
    Ok(out)
}

/// Ordinary least squares `y = intercept + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r2: f64,
    pub points: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    // constant data (up to rounding) is fitted perfectly: r² = 1
    let scale = ys.iter().map(|y| y * y).sum::<f64>();
    let r2 = if syy > 1e-20 * scale { (1.0 - ssr / syy).clamp(0.0, 1.0) } else { 1.0 };
    let stderr = if xs.len() > 2 && sxx > 0.0 { (ssr / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    LinearFit { slope, intercept, stderr, r2, points: xs.len() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: f64,
    pub stderr: f64,
    pub window: (u64, u64),
    pub r2: f64,
    pub points: usize,
}

pub const MIN_FIT_POINTS: usize = 5;

fn window_records(
    records: &[MeasurementRecord],
    window: (u64, u64),
) -> Result<Vec<&MeasurementRecord>, MeasureError> {
    let sel: Vec<_> = records.iter().filter(|r| r.t >= window.0 && r.t <= window.1).collect();
    if sel.len() < MIN_FIT_POINTS {
        return Err(MeasureError::TooFewPoints {
            t_min: window.0,
            t_max: window.1,
            found: sel.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    Ok(sel)
}

/// `β` as the slope of `ln W` against `ln t` (half the slope of `ln W²`).
pub fn growth_exponent_fit(
    records: &[MeasurementRecord],
    window: (u64, u64),
) -> Result<FitResult, MeasureError> {
    let sel = window_records(records, window)?;
    if let Some(r) = sel.iter().find(|r| r.t == 0 || !(r.w2 > 0.0)) {
        return Err(MeasureError::NonPositive { t: r.t });
    }
    let xs: Vec<f64> = sel.iter().map(|r| (r.t as f64).ln()).collect();
    let ys: Vec<f64> = sel.iter().map(|r| 0.5 * r.w2.ln()).collect();
    let fit = linear_fit(&xs, &ys);
    Ok(FitResult {
        beta: fit.slope,
        stderr: fit.stderr,
        window: (sel[0].t, sel[sel.len() - 1].t),
        r2: fit.r2,
        points: fit.points,
    })
}

/// `W²` against `ln t`, the logarithmic-growth hypothesis.
pub fn log_growth_fit(
    records: &[MeasurementRecord],
    window: (u64, u64),
) -> Result<LinearFit, MeasureError> {
    let sel = window_records(records, window)?;
    if let Some(r) = sel.iter().find(|r| r.t == 0) {
        return Err(MeasureError::NonPositive { t: r.t });
    }
    let xs: Vec<f64> = sel.iter().map(|r| (r.t as f64).ln()).collect();
    let ys: Vec<f64> = sel.iter().map(|r| r.w2).collect();
    Ok(linear_fit(&xs, &ys))
}

/// Pointwise average over runs sampled on the same schedule.
pub fn average_records(runs: &[Vec<MeasurementRecord>]) -> Vec<MeasurementRecord> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    let n = runs.len() as f64;
    first
        .iter()
        .enumerate()
        .map(|(i, r0)| {
            let col = runs.iter().map(|run| &run[i]);
            debug_assert!(col.clone().all(|r| r.t == r0.t));
            let avg = |f: &dyn Fn(&MeasurementRecord) -> Option<f64>| {
                col.clone().map(f).sum::<Option<f64>>().map(|s| s / n)
            };
            MeasurementRecord {
                t: r0.t,
                w2: avg(&|r| Some(r.w2)).unwrap_or(f64::NAN),
                mean_h: avg(&|r| Some(r.mean_h)).unwrap_or(f64::NAN),
                skewness: avg(&|r| r.skewness),
                kurtosis: avg(&|r| r.kurtosis),
            }
        })
        .collect()
}

/// Roughly geometric integer times in `[1, t_max]`, `points_per_decade` per
/// factor of ten; where the geometric step is below one the sequence walks
/// consecutive integers instead, and `t_max` is always last.
pub fn log_schedule(t_max: u64, points_per_decade: u32) -> Vec<u64> {
    let t_max = t_max.max(1);
    let ppd = points_per_decade.max(1) as f64;
    let mut out = vec![1u64];
    let mut i = 1u32;
    loop {
        let prev = *out.last().expect("non-empty");
        if prev >= t_max {
            break;
        }
        let geometric = 10f64.powf(i as f64 / ppd).round() as u64;
        out.push(geometric.max(prev + 1).min(t_max));
        i += 1;
    }
    out
}
