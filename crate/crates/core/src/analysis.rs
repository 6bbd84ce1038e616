//! Shape diagnostics for pulses.

use serde::Serialize;

use crate::grid::PulseSignal;

/// Differences smaller than this fraction of the peak intensity count as flat.
pub const FLAT_TOL: f64 = 1e-9;

/// Relative prominence above which a local maximum counts as a visible hump.
pub const PROMINENCE_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeReport {
    /// Sign changes of the discrete derivative of the smoothed `|xi|^2`.
    pub sign_changes: usize,
    pub unimodal: bool,
    pub peak_time: f64,
    pub peak_intensity: f64,
    /// Local maxima with prominence above `PROMINENCE_TOL` of the peak.
    pub prominent_peaks: usize,
    /// Largest intensity of any local maximum other than the main peak,
    /// relative to the peak.
    pub ripple: f64,
}

/// Three-point moving average (one grid cell either side); endpoints kept.
pub fn smooth(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 3 {
        return values.to_vec();
    }
    let mut out = values.to_vec();
    for k in 1..n - 1 {
        out[k] = (values[k - 1] + values[k] + values[k + 1]) / 3.0;
    }
    out
}

/// Sign changes of `values[k+1] - values[k]`, ignoring steps below
/// `FLAT_TOL * max|values|`.
pub fn derivative_sign_changes(values: &[f64]) -> usize {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let floor = FLAT_TOL * scale;
    let mut last = 0.0_f64;
    let mut changes = 0;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        if d.abs() <= floor {
            continue;
        }
        if last != 0.0 && d.signum() != last {
            changes += 1;
        }
        last = d.signum();
    }
    changes
}

/// Indices of strict local maxima (plateaus count once, at their left edge).
fn local_maxima(v: &[f64]) -> Vec<usize> {
    let n = v.len();
    let mut out = Vec::new();
    let mut k = 1;
    while k + 1 < n {
        if v[k] > v[k - 1] {
            let mut j = k;
            while j + 1 < n && v[j + 1] == v[k] {
                j += 1;
            }
            if j + 1 < n && v[j + 1] < v[k] {
                out.push(k);
            }
            k = j + 1;
        } else {
            k += 1;
        }
    }
    out
}

/// Topographic prominence of the local maximum at `k`.
fn prominence(v: &[f64], k: usize) -> f64 {
    let h = v[k];
    let mut left = h;
    for j in (0..k).rev() {
        if v[j] > h {
            break;
        }
        left = left.min(v[j]);
    }
    let mut right = h;
    for &x in &v[k + 1..] {
        if x > h {
            break;
        }
        right = right.min(x);
    }
    h - left.max(right)
}

/// Local maxima of `values` whose prominence is at least `rel` times the
/// largest value.
pub fn prominent_peaks(values: &[f64], rel: f64) -> usize {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(*v));
    local_maxima(values).into_iter().filter(|&k| prominence(values, k) >= rel * scale).count()
}

pub fn shape_report(pulse: &PulseSignal) -> ShapeReport {
    let intensity = pulse.intensity();
    let smoothed = smooth(&intensity);
    let sign_changes = derivative_sign_changes(&smoothed);
    let (k, peak) = intensity
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if *v > acc.1 { (k, *v) } else { acc });
    let ripple = local_maxima(&smoothed)
        .into_iter()
        .filter(|&j| j.abs_diff(k) > 1)
        .map(|j| smoothed[j])
        .fold(0.0_f64, f64::max)
        / peak.max(f64::MIN_POSITIVE);
    ShapeReport {
        sign_changes,
        unimodal: sign_changes == 1,
        peak_time: pulse.grid.time(k),
        peak_intensity: peak,
        prominent_peaks: prominent_peaks(&smoothed, PROMINENCE_TOL),
        ripple,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use num_complex::Complex64 as C64;

    #[test]
    fn gaussian_is_unimodal() {
        let g = TimeGrid::new(-10.0, 0.0, 1000).unwrap();
        let p = PulseSignal::from_fn(g, |t| C64::new((-(t + 3.0) * (t + 3.0)).exp(), 0.0));
        let r = shape_report(&p);
        assert!(r.unimodal);
        assert!((r.peak_time + 3.0).abs() < 1e-9);
        assert_eq!(r.prominent_peaks, 1);
        assert_eq!(r.ripple, 0.0);
    }

    #[test]
    fn small_ripple_is_counted_but_not_prominent() {
        let g = TimeGrid::new(-10.0, 0.0, 2000).unwrap();
        let p = PulseSignal::from_fn(g, |t| {
            C64::new((-(t + 3.0).powi(2)).exp() + 0.05 * (-(t + 8.0).powi(2) * 4.0).exp(), 0.0)
        });
        let r = shape_report(&p);
        assert_eq!(r.sign_changes, 3);
        assert!(!r.unimodal);
        assert_eq!(r.prominent_peaks, 1);
        assert!(r.ripple > 0.002 && r.ripple < 0.004, "{r:?}");
    }

    #[test]
    fn prominence_of_nested_peaks() {
        let v = [0.0, 5.0, 1.0, 3.0, 2.0, 10.0, 0.0];
        assert_eq!(local_maxima(&v), vec![1, 3, 5]);
        assert_eq!(prominence(&v, 1), 4.0);
        assert_eq!(prominence(&v, 3), 1.0);
        assert_eq!(prominence(&v, 5), 10.0);
        assert_eq!(prominent_peaks(&v, 0.2), 2);
    }

    #[test]
    fn two_humps_and_monotone_are_not() {
        let g = TimeGrid::new(-10.0, 0.0, 1000).unwrap();
        let two = PulseSignal::from_fn(g, |t| C64::new((-(t + 3.0).powi(2)).exp() + (-(t + 7.0).powi(2)).exp(), 0.0));
        assert_eq!(shape_report(&two).sign_changes, 3);
        assert_eq!(shape_report(&two).prominent_peaks, 2);
        assert!((shape_report(&two).ripple - 1.0).abs() < 1e-3);
        let rising = PulseSignal::from_fn(g, |t| C64::new(0.0, (0.5 * t).exp()));
        assert_eq!(shape_report(&rising).sign_changes, 0);
        assert!(!shape_report(&rising).unimodal);
    }

    #[test]
    fn single_cell_wiggle_is_smoothed_away() {
        let mut v: Vec<f64> = (0..50).map(|k| (k as f64).min(30.0 - (k as f64 - 30.0).max(0.0))).collect();
        v[10] -= 1.6;
        assert_eq!(derivative_sign_changes(&v), 3);
        assert_eq!(derivative_sign_changes(&smooth(&v)), 1);
    }

    #[test]
    fn flat_tail_noise_is_ignored() {
        let v = vec![0.0, 1e-16, 0.0, 1e-16, 0.5, 1.0, 0.5, 0.0];
        assert_eq!(derivative_sign_changes(&v), 1);
    }
}
