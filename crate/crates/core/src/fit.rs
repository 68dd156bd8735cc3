//! Ordinary least-squares line fits.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rsquared: f64,
}

/// Fits y = slope·x + intercept. Needs at least two distinct x values.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rsquared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LineFit {
        slope,
        intercept,
        rsquared,
    })
}

/// Samples below this are treated as roundoff and dropped from log fits.
pub const LOG_FLOOR: f64 = 1e-14;
pub const MIN_FIT_NODES: usize = 20;

/// Fits log(y) against x over nodes with x in [lo, hi] and y > `LOG_FLOOR`.
pub fn fit_log_window(x: &[f64], y: &[f64], lo: f64, hi: f64) -> Result<LineFit> {
    let (mut xs, mut ls) = (Vec::new(), Vec::new());
    for (a, b) in x.iter().zip(y) {
        if *a >= lo && *a <= hi && *b > LOG_FLOOR {
            xs.push(*a);
            ls.push(b.ln());
        }
    }
    if xs.len() < MIN_FIT_NODES {
        return Err(Error::FitTooNoisy {
            usable: xs.len(),
            required: MIN_FIT_NODES,
        });
    }
    fit_line(&xs, &ls).ok_or(Error::FitTooNoisy {
        usable: xs.len(),
        required: MIN_FIT_NODES,
    })
}
