//! Weak Wolfe line search: bracket, then zoom with safeguarded cubic
//! interpolation.

/// `phi(a)` and `phi'(a)` at one trial step. A non-finite `phi` (or a trial
/// the caller rejects) is treated as `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineTrial {
    pub phi: f64,
    pub dphi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOptions {
    /// Sufficient-decrease constant.
    pub mu1: f64,
    /// Curvature constant.
    pub mu2: f64,
    pub max_trials: usize,
    /// After acceptance, also try the cubic minimizer through both endpoints.
    pub refine: bool,
}

impl Default for LineSearchOptions {
    fn default() -> Self {
        Self { mu1: 1e-4, mu2: 0.9, max_trials: 50, refine: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineSearchOutcome {
    Accepted { step: f64, trial: LineTrial, trials: usize },
    Failed { trials: usize },
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if !(disc >= 0.0) {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let denom = db - da + 2.0 * d2;
    if denom == 0.0 {
        return None;
    }
    let x = b - (b - a) * (db + d2 - d1) / denom;
    x.is_finite().then_some(x)
}

fn usable(t: &LineTrial) -> bool {
    t.phi.is_finite() && t.dphi.is_finite()
}

/// Searches `a > 0` with `phi(a) <= phi0 + mu1 a dphi0` and
/// `phi'(a) >= mu2 dphi0`, starting from `a_init`. `dphi0` must be negative.
pub fn wolfe_search<F>(phi0: f64, dphi0: f64, a_init: f64, opts: &LineSearchOptions, mut eval: F) -> LineSearchOutcome
where
    F: FnMut(f64) -> LineTrial,
{
    if !(dphi0 < 0.0 && phi0.is_finite() && a_init > 0.0) {
        return LineSearchOutcome::Failed { trials: 0 };
    }
    let armijo = |a: f64, t: &LineTrial| usable(t) && t.phi <= phi0 + opts.mu1 * a * dphi0 && t.phi < phi0;
    let curvature = |t: &LineTrial| t.dphi >= opts.mu2 * dphi0;

    let mut lo = (0.0, LineTrial { phi: phi0, dphi: dphi0 });
    let mut hi: Option<(f64, LineTrial)> = None;
    let mut a = a_init;
    let mut trials = 0;
    while trials < opts.max_trials {
        let t = eval(a);
        trials += 1;
        if !armijo(a, &t) {
            hi = Some((a, t));
        } else if !curvature(&t) {
            lo = (a, t);
        } else {
            let mut best = (a, t);
            if opts.refine && trials < opts.max_trials {
                if let Some(r) = cubic_min(0.0, phi0, dphi0, a, t.phi, t.dphi) {
                    if r > 0.0 && (r - a).abs() > 1e-10 * a {
                        let tr = eval(r);
                        trials += 1;
                        if armijo(r, &tr) && curvature(&tr) && tr.phi < t.phi {
                            best = (r, tr);
                        }
                    }
                }
            }
            return LineSearchOutcome::Accepted { step: best.0, trial: best.1, trials };
        }
        a = match hi {
            None => {
                // extrapolate, at least doubling
                let (la, lt) = lo;
                let guess = cubic_min(0.0, phi0, dphi0, la, lt.phi, lt.dphi).unwrap_or(f64::NAN);
                if guess.is_finite() && guess > 2.0 * la {
                    guess.min(10.0 * la)
                } else {
                    2.0 * la
                }
            }
            Some((ha, ht)) => {
                let (la, lt) = lo;
                let width = ha - la;
                let guess = if usable(&ht) { cubic_min(la, lt.phi, lt.dphi, ha, ht.phi, ht.dphi) } else { None };
                match guess {
                    Some(g) if g > la + 0.1 * width && g < ha - 0.1 * width => g,
                    _ if !usable(&ht) => la + 0.25 * width,
                    _ => la + 0.5 * width,
                }
            }
        };
        if !(a > 0.0 && a.is_finite()) {
            break;
        }
    }
    LineSearchOutcome::Failed { trials }
}
