use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear control curve over time, held constant outside its
/// breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakpointFunction {
    points: Vec<(f64, f64)>,
}

impl BreakpointFunction {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("breakpoint function"));
        }
        for (i, &(t, v)) in points.iter().enumerate() {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::invalid("bpf.time", format!("point {i}: {t}")));
            }
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid("bpf.factor", format!("point {i}: {v} must be > 0")));
            }
            if i > 0 && t <= points[i - 1].0 {
                return Err(Error::invalid("bpf.time", "times must be strictly increasing"));
            }
        }
        Ok(Self { points })
    }

    pub fn constant(factor: f64) -> Result<Self> {
        Self::new(vec![(0.0, factor)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Fails when a breakpoint lies beyond the end of a clip of `duration_s`.
    pub fn check_within(&self, duration_s: f64) -> Result<()> {
        let last = self.points.last().map_or(0.0, |p| p.0);
        if last > duration_s + 1e-9 {
            return Err(Error::invalid(
                "bpf.time",
                format!("breakpoint at {last} s beyond clip duration {duration_s} s"),
            ));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let p = &self.points;
        if t <= p[0].0 {
            return p[0].1;
        }
        let last = p[p.len() - 1];
        if t >= last.0 {
            return last.1;
        }
        let i = p.partition_point(|q| q.0 <= t);
        let (t0, v0) = p[i - 1];
        let (t1, v1) = p[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    pub fn is_identity(&self) -> bool {
        self.points.iter().all(|p| p.1 == 1.0)
    }

    /// Exact integral over `[0, end]` of the piecewise-linear curve.
    pub fn integral(&self, end: f64) -> f64 {
        let mut knots = vec![0.0];
        knots.extend(self.points.iter().map(|p| p.0).filter(|&t| t > 0.0 && t < end));
        knots.push(end);
        knots
            .windows(2)
            .map(|w| 0.5 * (self.eval(w[0]) + self.eval(w[1])) * (w[1] - w[0]))
            .sum()
    }

    /// Applies `f` to every factor.
    pub fn map_factors(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.points.iter().map(|&(t, v)| (t, f(v))).collect())
    }

    /// Two-column `time_s factor` text; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::parse(format!("bpf line {}", n + 1), e.to_string()))
            };
            match cols.as_slice() {
                [t, v] => points.push((parse(t)?, parse(v)?)),
                _ => {
                    return Err(Error::parse(
                        format!("bpf line {}", n + 1),
                        "expected two columns",
                    ))
                }
            }
        }
        Self::new(points)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}
