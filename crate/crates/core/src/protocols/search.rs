//! Peak location, power-law fits and rank correlation.

use serde::Serialize;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Largest number of coarse samples a peak scan may take.
pub const MAX_COARSE_POINTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub time: f64,
    pub value: f64,
}

/// Golden-section maximization of a unimodal `f` on `[a, b]`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Peak {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= tol * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        Peak { time: c, value: fc }
    } else {
        Peak { time: d, value: fd }
    }
}

/// Local maxima of the coarse scan refined by golden section.
pub const REFINED_CANDIDATES: usize = 32;

/// Coarse scan of `[lo, hi]` with spacing at most `step`; the best coarse local
/// maxima are refined by golden section and the largest result is returned.
pub fn find_peak<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, step: f64) -> Peak {
    let span = hi - lo;
    let n = if step > 0.0 && step.is_finite() {
        ((span / step).ceil() as usize + 1).clamp(3, MAX_COARSE_POINTS)
    } else {
        3
    };
    let h = span / (n - 1) as f64;
    let values: Vec<f64> = (0..n).map(|i| f(lo + h * i as f64)).collect();
    let mut maxima: Vec<usize> = (0..n)
        .filter(|&i| {
            (i == 0 || values[i] >= values[i - 1]) && (i + 1 == n || values[i] >= values[i + 1])
        })
        .collect();
    maxima.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    maxima.truncate(REFINED_CANDIDATES);

    let mut best = Peak {
        time: lo + h * maxima[0] as f64,
        value: values[maxima[0]],
    };
    for &i in &maxima {
        let a = lo + h * i.saturating_sub(1) as f64;
        let b = lo + h * (i + 1).min(n - 1) as f64;
        let refined = golden_section_max(&mut f, a, b, 1e-13);
        if refined.value > best.value {
            best = refined;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    /// Slope of ln(error) against ln(ratio).
    pub exponent: f64,
    pub prefactor: f64,
    /// Root-mean-square residual in ln(error).
    pub residual: f64,
    /// Number of points with positive error that entered the fit.
    pub points: usize,
}

/// Least-squares fit of y = c·x^k in log–log space over points with x, y > 0.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Option<PowerLawFit> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let k = sxy / sxx;
    let c = my - k * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - c - k * p.0).powi(2)).sum();
    Some(PowerLawFit {
        exponent: k,
        prefactor: c.exp(),
        residual: (rss / nf).sqrt(),
        points: n,
    })
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties. NaN for fewer than
/// two points or constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n < 2 {
        return f64::NAN;
    }
    let (rx, ry) = (ranks(&x[..n]), ranks(&y[..n]));
    let m = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (a, b) = (rx[i] - m, ry[i] - m);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    sxy / (sxx * syy).sqrt()
}
