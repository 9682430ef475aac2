//! Log-log rate fits over sweep summaries.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sweep::SweepSummary;
use super::CliError;

const BOOTSTRAP_RESAMPLES: usize = 2000;
const BOOTSTRAP_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    T,
    N,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::T => "T",
            Axis::N => "N",
        })
    }
}

impl std::str::FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "T" | "t" => Ok(Axis::T),
            "N" | "n" => Ok(Axis::N),
            other => Err(format!("axis must be T or N, got {other:?}")),
        }
    }
}

/// The parts of a sweep point a slope fit uses.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopePoint {
    pub workers: usize,
    pub iterations: u64,
    pub mean: f64,
    /// Per-seed statistic values, resampled for the confidence interval.
    pub values: Vec<f64>,
    pub certified: bool,
}

pub fn slope_points(summary: &SweepSummary) -> Vec<SlopePoint> {
    summary
        .points
        .iter()
        .map(|p| SlopePoint {
            workers: p.workers,
            iterations: p.iterations,
            mean: p.mean,
            values: p.values.clone(),
            certified: p.certified(),
        })
        .collect()
}

/// Reads `N`, `T`, `mean`, `certified` and `seed_values` from a `summary.csv`.
pub fn read_slope_points(path: &Path) -> Result<Vec<SlopePoint>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_slope_points(&text)
}

pub fn parse_slope_points(text: &str) -> Result<Vec<SlopePoint>, CliError> {
    let bad = CliError::Summary;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("empty summary".into()))?
        .split(',')
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| bad(format!("summary lacks column {name}")))
    };
    let (c_n, c_t, c_mean, c_cert, c_vals) = (
        col("N")?,
        col("T")?,
        col("mean")?,
        col("certified")?,
        col("seed_values")?,
    );
    let mut points = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let lineno = i + 2;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != header.len() {
            return Err(bad(format!(
                "line {lineno} has {} fields, expected {}",
                f.len(),
                header.len()
            )));
        }
        let err = |e: &dyn fmt::Display| bad(format!("line {lineno}: {e}"));
        let values = f[c_vals]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|e| err(&e)))
            .collect::<Result<Vec<_>, _>>()?;
        points.push(SlopePoint {
            workers: f[c_n].parse().map_err(|e| err(&e))?,
            iterations: f[c_t].parse().map_err(|e| err(&e))?,
            mean: f[c_mean].parse().map_err(|e| err(&e))?,
            values,
            certified: f[c_cert] == "true",
        });
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub axis: Axis,
    /// Value of the other axis, shared by every point of the fit.
    pub fixed: u64,
    pub slope: f64,
    pub intercept: f64,
    /// 95% bootstrap interval from resampling seeds within each point.
    pub ci: (f64, f64),
    pub points: usize,
}

impl SlopeFit {
    pub fn to_kv(&self) -> String {
        let fixed = match self.axis {
            Axis::T => "N",
            Axis::N => "T",
        };
        let mut s = String::new();
        let _ = writeln!(s, "{fixed} = {}", self.fixed);
        let _ = writeln!(s, "points = {}", self.points);
        let _ = writeln!(s, "slope = {:.6}", self.slope);
        let _ = writeln!(s, "ci95_low = {:.6}", self.ci.0);
        let _ = writeln!(s, "ci95_high = {:.6}", self.ci.1);
        s
    }
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fits `log(statistic)` against `log(axis)` separately for each value of the other axis.
///
/// Every group needs at least 3 distinct axis values, one point each, all certified.
pub fn fit_rate_slope(points: &[SlopePoint], axis: Axis) -> Result<Vec<SlopeFit>, CliError> {
    let key = |p: &SlopePoint| match axis {
        Axis::T => (p.workers as u64, p.iterations),
        Axis::N => (p.iterations, p.workers as u64),
    };
    let mut groups: Vec<u64> = points.iter().map(|p| key(p).0).collect();
    groups.sort_unstable();
    groups.dedup();
    let mut fits = Vec::new();
    for fixed in groups {
        let mut group: Vec<&SlopePoint> = points.iter().filter(|p| key(p).0 == fixed).collect();
        group.sort_by_key(|p| key(p).1);
        if group.windows(2).any(|w| key(w[0]).1 == key(w[1]).1) {
            return Err(CliError::Slope(format!(
                "several points share {axis} = {} at fixed value {fixed}",
                key(group[0]).1
            )));
        }
        if group.len() < 3 {
            continue;
        }
        if let Some(p) = group.iter().find(|p| !p.certified) {
            return Err(CliError::Slope(format!(
                "point at {axis} = {} is not bound-certified",
                key(p).1
            )));
        }
        if let Some(p) = group.iter().find(|p| !(p.mean > 0.0)) {
            return Err(CliError::Slope(format!(
                "non-positive statistic at {axis} = {}",
                key(p).1
            )));
        }
        let x: Vec<f64> = group.iter().map(|p| (key(p).1 as f64).ln()).collect();
        let y: Vec<f64> = group.iter().map(|p| p.mean.ln()).collect();
        let (slope, intercept) = least_squares(&x, &y);
        fits.push(SlopeFit {
            axis,
            fixed,
            slope,
            intercept,
            ci: bootstrap_ci(&x, &group),
            points: group.len(),
        });
    }
    if fits.is_empty() {
        return Err(CliError::Slope(format!(
            "no group has 3 or more points along {axis}"
        )));
    }
    Ok(fits)
}

fn bootstrap_ci(x: &[f64], group: &[&SlopePoint]) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut y = vec![0.0; group.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for (yi, p) in y.iter_mut().zip(group) {
            let m = if p.values.is_empty() {
                p.mean
            } else {
                let k = p.values.len();
                (0..k)
                    .map(|_| p.values[rng.random_range(0..k)])
                    .sum::<f64>()
                    / k as f64
            };
            *yi = m.ln();
        }
        let s = least_squares(x, &y).0;
        if s.is_finite() {
            slopes.push(s);
        }
    }
    if slopes.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    slopes.sort_by(f64::total_cmp);
    let at = |q: f64| slopes[((slopes.len() - 1) as f64 * q).round() as usize];
    (at(0.025), at(0.975))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(n: usize, t: u64, values: Vec<f64>) -> SlopePoint {
        SlopePoint {
            workers: n,
            iterations: t,
            mean: values.iter().sum::<f64>() / values.len() as f64,
            values,
            certified: true,
        }
    }

    #[test]
    fn exact_power_law() {
        let pts: Vec<_> = [1024u64, 4096, 16384, 65536]
            .iter()
            .map(|&t| point(4, t, vec![3.0 / (t as f64).sqrt(); 4]))
            .collect();
        let fit = &fit_rate_slope(&pts, Axis::T).unwrap()[0];
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.ci.0 + 0.5).abs() < 1e-12 && (fit.ci.1 + 0.5).abs() < 1e-12);
    }

    #[test]
    fn flat_statistic() {
        let pts: Vec<_> = [1, 2, 4, 8]
            .iter()
            .map(|&n| point(n, 4096, vec![0.3, 0.3]))
            .collect();
        let fit = &fit_rate_slope(&pts, Axis::N).unwrap()[0];
        assert!(fit.slope.abs() < 1e-12);
        assert_eq!(fit.fixed, 4096);
    }

    #[test]
    fn needs_three_points() {
        let pts = vec![point(4, 10, vec![1.0]), point(4, 20, vec![0.5])];
        assert!(matches!(
            fit_rate_slope(&pts, Axis::T),
            Err(CliError::Slope(_))
        ));
        let mut pts = vec![
            point(4, 10, vec![1.0]),
            point(4, 20, vec![0.5]),
            point(4, 40, vec![0.2]),
        ];
        pts[1].certified = false;
        assert!(fit_rate_slope(&pts, Axis::T).is_err());
    }

    #[test]
    fn noisy_ci_brackets_slope() {
        let pts: Vec<_> = [100u64, 1000, 10000]
            .iter()
            .map(|&t| {
                let c = 1.0 / (t as f64).sqrt();
                point(2, t, vec![0.8 * c, 1.0 * c, 1.2 * c, 0.9 * c])
            })
            .collect();
        let fit = &fit_rate_slope(&pts, Axis::T).unwrap()[0];
        assert!(fit.ci.0 <= fit.slope && fit.slope <= fit.ci.1);
        assert!(fit.ci.1 - fit.ci.0 > 0.0);
    }

    #[test]
    fn parses_summary_columns() {
        let text = "point,N,T,mean,certified,seed_values\n0,4,100,0.5,true,0.4;0.6\n";
        let pts = parse_slope_points(text).unwrap();
        assert_eq!(pts, vec![point(4, 100, vec![0.4, 0.6])]);
        assert!(parse_slope_points("point,N\n").is_err());
    }
}
