//! Small derivative-free minimizers used by the bound engine and the empirical
//! EVaR oracle.

/// Outcome of a Nelder–Mead run.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead settings.
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    /// Stop once `f_worst - f_best <= tolerance * max(1, |f_best|)`.
    pub tolerance: f64,
    pub max_evaluations: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_evaluations: 2000,
        }
    }
}

impl NelderMead {
    /// Minimize `f` from an axis-aligned simplex around `start` with per-axis
    /// `steps`. Non-finite values are treated as rejected points (worse than any
    /// finite value).
    pub fn minimize<F>(&self, f: F, start: &[f64], steps: &[f64]) -> Minimum
    where
        F: Fn(&[f64]) -> f64,
    {
        let dim = start.len();
        assert_eq!(dim, steps.len());
        let evaluations = std::cell::Cell::new(0usize);
        let eval = |x: &[f64]| {
            evaluations.set(evaluations.get() + 1);
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        let v0 = eval(start);
        simplex.push((start.to_vec(), v0));
        for i in 0..dim {
            let mut p = start.to_vec();
            p[i] += steps[i];
            let v = eval(&p);
            simplex.push((p, v));
        }

        let mut converged = false;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[dim].1;
            if best.is_finite() && (worst - best) <= self.tolerance * best.abs().max(1.0) {
                converged = true;
                break;
            }
            if evaluations.get() >= self.max_evaluations {
                break;
            }

            let mut centroid = vec![0.0; dim];
            for (p, _) in &simplex[..dim] {
                for (c, v) in centroid.iter_mut().zip(p) {
                    *c += v / dim as f64;
                }
            }
            let along = |coef: f64, from: &[f64]| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(from)
                    .map(|(c, w)| c + coef * (c - w))
                    .collect()
            };

            let worst_point = simplex[dim].0.clone();
            let reflected = along(1.0, &worst_point);
            let fr = eval(&reflected);
            if fr < simplex[0].1 {
                let expanded = along(2.0, &worst_point);
                let fe = eval(&expanded);
                simplex[dim] = if fe < fr {
                    (expanded, fe)
                } else {
                    (reflected, fr)
                };
                continue;
            }
            if fr < simplex[dim - 1].1 {
                simplex[dim] = (reflected, fr);
                continue;
            }
            let (contracted, fc) = if fr < simplex[dim].1 {
                let c = along(0.5, &worst_point);
                let v = eval(&c);
                (c, v)
            } else {
                let c = along(-0.5, &worst_point);
                let v = eval(&c);
                (c, v)
            };
            if fc < simplex[dim].1.min(fr) {
                simplex[dim] = (contracted, fc);
                continue;
            }
            // shrink toward the best vertex
            let anchor = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let p: Vec<f64> = anchor
                    .iter()
                    .zip(&vertex.0)
                    .map(|(a, v)| a + 0.5 * (v - a))
                    .collect();
                let v = eval(&p);
                *vertex = (p, v);
            }
        }

        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        Minimum {
            x,
            value,
            evaluations: evaluations.get(),
            converged,
        }
    }
}

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmin, min)`; stops when the bracket is narrower than
/// `rel_tol * max(1, |x|)`.
pub fn golden_section<F>(f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..500 {
        if (hi - lo).abs() <= rel_tol * c.abs().max(1.0) {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
