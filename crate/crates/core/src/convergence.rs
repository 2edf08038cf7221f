//! Refinement records, log-log rate fits and the CSV report.

use std::io::Write;

use crate::error::{Error, Result};

/// Fit residual above which the coarsest level is treated as pre-asymptotic.
pub const PREASYMPTOTIC_RESIDUAL: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub h: f64,
    pub delta: f64,
    pub m: usize,
    pub dofs: usize,
    pub l2: f64,
    pub h1: f64,
    pub assembly_ms: f64,
    pub solve_ms: f64,
}

/// Least-squares line `log e = slope·log h + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Euclidean norm of the residuals in natural-log units.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn fit_rate(h: &[f64], errors: &[f64]) -> Result<LineFit> {
    if h.len() != errors.len() || h.len() < 2 {
        return Err(Error::InvalidInput("rate fit needs at least two (h, error) pairs".into()));
    }
    if h.iter().chain(errors).any(|v| !(*v >= 0.0) || !v.is_finite()) || h.contains(&0.0) {
        return Err(Error::InvalidInput("rate fit needs positive h and non-negative finite errors".into()));
    }
    // exact zeros are clamped so that the logarithm stays finite
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("rate fit needs at least two distinct h values".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>().sqrt();
    Ok(LineFit { slope, intercept, residual, points: h.len() })
}

/// Fit over all levels and, when at least three remain, without the coarsest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub all: LineFit,
    pub without_coarsest: Option<LineFit>,
}

impl RateFit {
    /// `h` sorted descending; the first entry is the coarsest level.
    pub fn new(h: &[f64], errors: &[f64]) -> Result<Self> {
        let all = fit_rate(h, errors)?;
        let without_coarsest = if h.len() >= 4 { Some(fit_rate(&h[1..], &errors[1..])?) } else { None };
        Ok(Self { all, without_coarsest })
    }

    /// The all-level fit, or the trimmed one when the full fit is poor.
    pub fn selected(&self) -> LineFit {
        match self.without_coarsest {
            Some(t) if self.all.residual > PREASYMPTOTIC_RESIDUAL => t,
            _ => self.all,
        }
    }

    pub fn slope(&self) -> f64 {
        self.selected().slope
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Sorted by `h`, coarsest first.
    pub records: Vec<ErrorRecord>,
    pub l2: Option<RateFit>,
    pub h1: Option<RateFit>,
}

impl ConvergenceReport {
    /// Slopes are fitted when at least three levels are present.
    pub fn new(mut records: Vec<ErrorRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidInput("convergence report needs at least one record".into()));
        }
        records.sort_by(|a, b| b.h.total_cmp(&a.h));
        let (l2, h1) = if records.len() >= 3 {
            let h: Vec<f64> = records.iter().map(|r| r.h).collect();
            let l2: Vec<f64> = records.iter().map(|r| r.l2).collect();
            let h1: Vec<f64> = records.iter().map(|r| r.h1).collect();
            (Some(RateFit::new(&h, &l2)?), Some(RateFit::new(&h, &h1)?))
        } else {
            (None, None)
        };
        Ok(Self { records, l2, h1 })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "h,delta,m,dofs,l2,h1,assembly_ms,solve_ms")?;
        for r in &self.records {
            writeln!(out, "{},{},{},{},{:e},{:e},{:.3},{:.3}", r.h, r.delta, r.m, r.dofs, r.l2, r.h1, r.assembly_ms, r.solve_ms)?;
        }
        for (name, fit) in [("l2", &self.l2), ("h1", &self.h1)] {
            let Some(fit) = fit else { continue };
            writeln!(out, "# {name}_slope={:.6} residual={:.6} levels={}", fit.all.slope, fit.all.residual, fit.all.points)?;
            if let Some(t) = fit.without_coarsest {
                writeln!(out, "# {name}_slope_without_coarsest={:.6} residual={:.6} levels={}", t.slope, t.residual, t.points)?;
            }
            writeln!(out, "# {name}_slope_selected={:.6}", fit.slope())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ladder() -> Vec<f64> {
        (4..8).map(|k| 1.0 / (1u32 << k) as f64).collect()
    }

    #[test]
    fn exact_power_laws() {
        let h = ladder();
        for p in [0.0, 1.0, 2.0] {
            let e: Vec<f64> = h.iter().map(|x| 3.0 * x.powf(p)).collect();
            let f = fit_rate(&h, &e).unwrap();
            assert!((f.slope - p).abs() < 1e-12, "{p}: {}", f.slope);
            assert!(f.residual < 1e-12);
        }
    }

    #[test]
    fn coarsest_dropped_only_for_poor_fits() {
        let h = ladder();
        let clean: Vec<f64> = h.iter().map(|x| x * x).collect();
        assert_eq!(RateFit::new(&h, &clean).unwrap().selected().points, 4);
        let mut bent = clean.clone();
        bent[0] *= 0.3;
        let fit = RateFit::new(&h, &bent).unwrap();
        assert!(fit.all.residual > PREASYMPTOTIC_RESIDUAL);
        assert_eq!(fit.selected().points, 3);
        assert!((fit.slope() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn report_sorts_and_serializes() {
        let recs: Vec<ErrorRecord> = ladder()
            .into_iter()
            .rev()
            .map(|h| ErrorRecord {
                h,
                delta: 2.0 * h,
                m: 2,
                dofs: (1.0 / h) as usize - 1,
                l2: h * h,
                h1: h,
                assembly_ms: 0.0,
                solve_ms: 0.0,
            })
            .collect();
        let rep = ConvergenceReport::new(recs).unwrap();
        assert_eq!(rep.records[0].h, 0.0625);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("h,delta,m,dofs,l2,h1,assembly_ms,solve_ms\n0.0625,0.125,2,15,"));
        assert!(text.contains("# l2_slope=2.000000"));
        assert!(ConvergenceReport::new(vec![]).is_err());
        assert!(fit_rate(&[0.1], &[1.0]).is_err());
    }
}
