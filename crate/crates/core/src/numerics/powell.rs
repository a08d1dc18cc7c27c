//! Box-constrained Powell direction-set minimization.
//!
//! Line minimizations expand a bracket downhill from the current point
//! (never past the box) and then shrink it with Brent's parabolic search. Every
//! accepted step is a strict improvement, so the returned objective never
//! exceeds the starting one.

use crate::error::{Error, Result};

const GOLDEN: f64 = 1.618_033_988_749_895;
const CGOLD: f64 = 0.381_966_011_250_105;

/// Default relative objective-decrease tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100;

/// Line-search parameter tolerance, relative to 1 + |t|. Close to √ε, below
/// which function comparisons stop carrying position information.
const LINE_TOL: f64 = 2e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowellResult<const D: usize> {
    pub x: [f64; D],
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Objective<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Objective<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        // NaN would poison every comparison; treat it as "infinitely bad"
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// Minimize `f` over the box `bounds` starting from `x0`.
///
/// Terminates when one full sweep improves the objective by less than
/// `tol` (relative), or after `max_iter` sweeps.
pub fn powell_minimize<F, const D: usize>(
    f: F,
    x0: [f64; D],
    bounds: [(f64, f64); D],
    tol: f64,
    max_iter: usize,
) -> Result<PowellResult<D>>
where
    F: FnMut(&[f64]) -> f64,
{
    for (i, (&x, &(lo, hi))) in x0.iter().zip(bounds.iter()).enumerate() {
        if !(lo <= hi) {
            return Err(Error::Domain(format!("empty bound [{lo}, {hi}] on coordinate {i}")));
        }
        if !(x >= lo && x <= hi) {
            return Err(Error::Domain(format!("start {x} outside [{lo}, {hi}] on coordinate {i}")));
        }
    }
    let mut obj = Objective { f, evals: 0 };
    let mut x = x0;
    let mut fx = obj.eval(&x);
    if !fx.is_finite() {
        return Err(Error::NonFinite(format!("objective at start point is {fx}")));
    }

    let mut dirs = [[0.0; D]; D];
    for (i, d) in dirs.iter_mut().enumerate() {
        d[i] = 1.0;
    }

    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let x_start = x;
        let f_start = fx;
        let mut biggest_drop = 0.0;
        let mut biggest_idx = 0;

        for (i, dir) in dirs.iter().enumerate() {
            let before = fx;
            (x, fx) = line_minimize(&mut obj, &x, fx, dir, &bounds);
            if before - fx > biggest_drop {
                biggest_drop = before - fx;
                biggest_idx = i;
            }
        }

        if 2.0 * (f_start - fx) <= tol * (f_start.abs() + fx.abs()) + 1e-300 {
            converged = true;
            break;
        }

        // extrapolate along the net displacement of this sweep
        let mut new_dir = [0.0; D];
        let mut extrap = [0.0; D];
        for k in 0..D {
            new_dir[k] = x[k] - x_start[k];
            extrap[k] = (2.0 * x[k] - x_start[k]).clamp(bounds[k].0, bounds[k].1);
        }
        let f_extrap = obj.eval(&extrap);
        if f_extrap < f_start {
            let t = 2.0 * (f_start - 2.0 * fx + f_extrap) * (f_start - fx - biggest_drop).powi(2)
                - biggest_drop * (f_start - f_extrap).powi(2);
            if t < 0.0 {
                (x, fx) = line_minimize(&mut obj, &x, fx, &new_dir, &bounds);
                dirs[biggest_idx] = dirs[D - 1];
                dirs[D - 1] = new_dir;
            }
        }
    }

    Ok(PowellResult {
        x,
        f: fx,
        iterations,
        evaluations: obj.evals,
        converged,
    })
}

/// Minimize along `dir` from `x`, staying inside the box. Returns the start
/// point unchanged unless a strictly better one is found.
fn line_minimize<F, const D: usize>(
    obj: &mut Objective<F>,
    x: &[f64; D],
    fx: f64,
    dir: &[f64; D],
    bounds: &[(f64, f64); D],
) -> ([f64; D], f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return (*x, fx);
    }
    let mut u = [0.0; D];
    for k in 0..D {
        u[k] = dir[k] / norm;
    }

    // feasible parameter interval [t_lo, t_hi]
    let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..D {
        if u[k] > 0.0 {
            t_lo = t_lo.max((bounds[k].0 - x[k]) / u[k]);
            t_hi = t_hi.min((bounds[k].1 - x[k]) / u[k]);
        } else if u[k] < 0.0 {
            t_lo = t_lo.max((bounds[k].1 - x[k]) / u[k]);
            t_hi = t_hi.min((bounds[k].0 - x[k]) / u[k]);
        }
    }
    t_lo = t_lo.min(0.0);
    t_hi = t_hi.max(0.0);
    if t_hi - t_lo <= LINE_TOL {
        return (*x, fx);
    }

    let point = |t: f64| -> [f64; D] {
        let mut p = [0.0; D];
        for k in 0..D {
            p[k] = (x[k] + t * u[k]).clamp(bounds[k].0, bounds[k].1);
        }
        p
    };
    let mut g = |t: f64| obj.eval(&point(t));

    let br = bracket(&mut g, fx, t_lo, t_hi);
    let (t_best, f_best) = brent(&mut g, br);
    if f_best < fx {
        (point(t_best), f_best)
    } else {
        (*x, fx)
    }
}

/// Interval `[lo, hi]` holding a local minimum, with the best probe `(t, f)`.
#[derive(Debug, Clone, Copy)]
struct Bracket {
    lo: f64,
    hi: f64,
    t: f64,
    f: f64,
}

impl Bracket {
    fn new(a: f64, b: f64, t: f64, f: f64) -> Self {
        Self {
            lo: a.min(b),
            hi: a.max(b),
            t,
            f,
        }
    }
}

/// Expand downhill from t = 0 until the objective rises or the box edge is
/// reached.
fn bracket(g: &mut impl FnMut(f64) -> f64, f0: f64, t_lo: f64, t_hi: f64) -> Bracket {
    let h = 0.01 * (t_hi - t_lo);
    let step_fwd = h.min(t_hi);
    let step_back = (-h).max(t_lo);

    let (sign, limit, mut b) = {
        let f_fwd = if step_fwd > 0.0 { g(step_fwd) } else { f64::INFINITY };
        if f_fwd < f0 {
            (1.0, t_hi, (step_fwd, f_fwd))
        } else {
            let f_back = if step_back < 0.0 { g(step_back) } else { f64::INFINITY };
            if f_back < f0 {
                (-1.0, t_lo, (step_back, f_back))
            } else {
                // minimum sits between the two probes
                return Bracket::new(step_back, step_fwd, 0.0, f0);
            }
        }
    };
    let mut a = 0.0;
    loop {
        if b.0 == limit {
            return Bracket::new(a, limit, b.0, b.1);
        }
        let next = b.0 + GOLDEN * (b.0 - a);
        let next = if sign > 0.0 { next.min(limit) } else { next.max(limit) };
        let f_next = g(next);
        if f_next >= b.1 {
            return Bracket::new(a, next, b.0, b.1);
        }
        a = b.0;
        b = (next, f_next);
    }
}

/// Brent's minimization inside a bracket: parabolic steps through the three
/// best points, golden-section steps when the parabola is not trusted.
fn brent(g: &mut impl FnMut(f64) -> f64, br: Bracket) -> (f64, f64) {
    let (mut a, mut b) = (br.lo, br.hi);
    let (mut x, mut fx) = (br.t, br.f);
    let (mut w, mut fw, mut v, mut fv) = (x, fx, x, fx);
    // d: last step, e: the one before
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let xm = 0.5 * (a + b);
        let tol1 = LINE_TOL * (1.0 + x.abs());
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut parabolic = false;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                parabolic = true;
            }
        }
        if !parabolic {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let u = u.clamp(br.lo, br.hi);
        let fu = g(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            (v, fv, w, fw, x, fx) = (w, fw, x, fx, u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv, w, fw) = (w, fw, u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    (x, fx)
}
