//! Derivative-free search primitives (all maximizing).

use alloc::vec::Vec;

/// Evaluates a batch of independent objective calls. The default runs them
/// in order; the CLI crate supplies a thread-pool implementation. Results
/// must be returned in index order.
pub trait Executor: Sync {
    fn map(&self, count: usize, f: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map(&self, count: usize, f: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64> {
        (0..count).map(f).collect()
    }
}

/// Golden-section maximization over integers in [a, b], assuming the
/// objective is unimodal there. Returns (argmax, value).
pub fn golden_max_int<F: FnMut(u64) -> f64>(mut a: u64, mut b: u64, mut f: F) -> (u64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut best = (a, f64::NEG_INFINITY);
    let mut eval = |x: u64, best: &mut (u64, f64)| {
        let v = f(x);
        if v > best.1 || (v == best.1 && x < best.0) {
            *best = (x, v);
        }
        v
    };
    if b > a + 4 {
        let span = |a: u64, b: u64| (b - a) as f64;
        let mut c = b - libm::round(INV_PHI * span(a, b)) as u64;
        let mut d = a + libm::round(INV_PHI * span(a, b)) as u64;
        let mut fc = eval(c, &mut best);
        let mut fd = eval(d, &mut best);
        while b - a > 4 {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - libm::round(INV_PHI * span(a, b)) as u64;
                if c >= d {
                    c = d.saturating_sub(1).max(a);
                }
                fc = eval(c, &mut best);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + libm::round(INV_PHI * span(a, b)) as u64;
                if d <= c {
                    d = (c + 1).min(b);
                }
                fd = eval(d, &mut best);
            }
        }
    }
    for x in a..=b {
        eval(x, &mut best);
    }
    best
}

/// Nelder–Mead maximization with a projection applied to every trial point.
/// Deterministic for a given start, step and projection.
///
/// Projection can flatten the simplex onto a face of the box, after which it
/// cannot leave that face; the search is therefore restarted from the
/// incumbent with a fresh simplex until a restart stops improving.
pub fn nelder_mead_max<const D: usize>(
    start: [f64; D],
    step: [f64; D],
    project: &dyn Fn([f64; D]) -> [f64; D],
    f: &mut dyn FnMut(&[f64; D]) -> f64,
    max_evals: usize,
    tol: f64,
) -> ([f64; D], f64) {
    let mut used = 0;
    let (mut x, mut v, n) = nm_run(start, step, project, f, max_evals, tol);
    used += n;
    while used < max_evals {
        let (x2, v2, n) = nm_run(x, step, project, f, max_evals - used, tol);
        used += n;
        let gain = v2 - v;
        if v2 > v {
            x = x2;
            v = v2;
        }
        if !(gain > tol * (1.0 + v.abs())) {
            break;
        }
    }
    (x, v)
}

fn nm_run<const D: usize>(
    start: [f64; D],
    step: [f64; D],
    project: &dyn Fn([f64; D]) -> [f64; D],
    f: &mut dyn FnMut(&[f64; D]) -> f64,
    max_evals: usize,
    tol: f64,
) -> ([f64; D], f64, usize) {
    let mut simplex: Vec<([f64; D], f64)> = Vec::with_capacity(D + 1);
    let mut evals = 0usize;
    let mut eval = |x: [f64; D], evals: &mut usize| {
        *evals += 1;
        let v = f(&x);
        (x, if v.is_nan() { f64::NEG_INFINITY } else { v })
    };
    let x0 = project(start);
    simplex.push(eval(x0, &mut evals));
    for i in 0..D {
        let mut x = x0;
        x[i] += step[i];
        let mut px = project(x);
        if px == x0 {
            x[i] = x0[i] - step[i];
            px = project(x);
        }
        simplex.push(eval(px, &mut evals));
    }
    let order =
        |s: &mut Vec<([f64; D], f64)>| s.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal));
    while evals < max_evals {
        order(&mut simplex);
        let (fb, fw) = (simplex[0].1, simplex[D].1);
        let spread = if fb.is_finite() && fw.is_finite() {
            fb - fw
        } else {
            f64::INFINITY
        };
        let mut size = 0.0f64;
        for v in simplex.iter().skip(1) {
            for k in 0..D {
                size = size.max((v.0[k] - simplex[0].0[k]).abs());
            }
        }
        if spread <= tol * (1.0 + fb.abs()) && size <= 1e-6 {
            break;
        }
        if size <= 1e-9 {
            break;
        }
        let mut centroid = [0.0; D];
        for v in simplex.iter().take(D) {
            for k in 0..D {
                centroid[k] += v.0[k] / D as f64;
            }
        }
        let along = |t: f64| {
            let mut x = [0.0; D];
            for k in 0..D {
                x[k] = centroid[k] + t * (simplex[D].0[k] - centroid[k]);
            }
            project(x)
        };
        let r = eval(along(-1.0), &mut evals);
        if r.1 > simplex[0].1 {
            let e = eval(along(-2.0), &mut evals);
            simplex[D] = if e.1 > r.1 { e } else { r };
        } else if r.1 > simplex[D - 1].1 {
            simplex[D] = r;
        } else {
            let c = if r.1 > simplex[D].1 {
                eval(along(-0.5), &mut evals)
            } else {
                eval(along(0.5), &mut evals)
            };
            if c.1 > simplex[D].1.max(r.1) {
                simplex[D] = c;
            } else {
                // Shrink towards the best vertex.
                let best = simplex[0].0;
                for i in 1..=D {
                    let mut x = [0.0; D];
                    for k in 0..D {
                        x[k] = best[k] + 0.5 * (simplex[i].0[k] - best[k]);
                    }
                    simplex[i] = eval(project(x), &mut evals);
                }
            }
        }
    }
    order(&mut simplex);
    (simplex[0].0, simplex[0].1, evals)
}
