//! Derivative-free local minimisation used to polish sampled extrema.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Returns the best point seen together with its value.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc <= fd {
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
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Settings for [`refine_coordinatewise`].
#[derive(Clone, Copy, Debug)]
pub struct RefineOptions {
    pub rounds: usize,
    pub initial_radius: f64,
    pub shrink: f64,
    pub line_iters: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            rounds: 40,
            initial_radius: 0.5,
            shrink: 0.6,
            line_iters: 28,
        }
    }
}

/// Cyclic coordinate descent with a golden-section line search per axis.
///
/// Coordinate `k` stays inside `bounds[k]` when bounds are given. The search
/// radius shrinks after every round in which no step reached the edge of its
/// bracket. Returns the final point, its value and the number of evaluations.
pub fn refine_coordinatewise<F>(
    mut f: F,
    start: &[f64],
    bounds: Option<&[(f64, f64)]>,
    opts: RefineOptions,
) -> (Vec<f64>, f64, usize)
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = start.to_vec();
    let mut fx = f(&x);
    let mut evals = 1;
    let mut radius = opts.initial_radius;
    for _ in 0..opts.rounds {
        let mut hit_edge = false;
        for k in 0..x.len() {
            let (mut lo, mut hi) = (x[k] - radius, x[k] + radius);
            if let Some(b) = bounds {
                lo = lo.max(b[k].0);
                hi = hi.min(b[k].1);
            }
            if hi <= lo {
                continue;
            }
            let mut trial = x.clone();
            let (t, ft) = golden_section(
                |t| {
                    trial[k] = t;
                    f(&trial)
                },
                lo,
                hi,
                opts.line_iters,
            );
            evals += opts.line_iters + 2;
            if ft < fx {
                let span = hi - lo;
                if (t - lo) < 1e-3 * span || (hi - t) < 1e-3 * span {
                    hit_edge = true;
                }
                x[k] = t;
                fx = ft;
            }
        }
        if !hit_edge {
            radius *= opts.shrink;
        }
    }
    (x, fx, evals)
}

/// Point on the unit sphere in R^(angles.len()+1) from hyperspherical angles.
pub fn sphere_point(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len() + 1);
    let mut prod = 1.0;
    for a in angles {
        let (s, c) = a.sin_cos();
        out.push(prod * c);
        prod *= s;
    }
    out.push(prod);
    out
}

/// Hyperspherical angles of a nonzero vector (inverse of [`sphere_point`]
/// up to normalisation).
pub fn sphere_angles(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n.saturating_sub(1) {
        let tail: f64 = v[k + 1..].iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut a = tail.atan2(v[k]);
        if k == n - 2 && v[n - 1] < 0.0 {
            a = -a;
        }
        out.push(a);
    }
    out
}
