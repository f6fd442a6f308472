//! Independent reference solutions shared by the integration tests.
#![allow(dead_code)]

/// Exact CVaR bound: the objective is piecewise linear in the location `z`
/// with breakpoints at `x_max` and `ℓ`, so the minimum is the smaller of the
/// two breakpoint values.
pub fn cvar_bound_oracle(x_max: f64, ell: f64, epsilon: f64, alpha: f64) -> f64 {
    ell.min(x_max + (epsilon / alpha) * (ell - x_max))
}

/// EVaR objective with the location eliminated:
/// `J(t) = t ln(((1-ε) e^{x_max/t} + ε e^{ℓ/t}) / α)`, evaluated shifted by `ℓ`.
pub fn evar_reduced(t: f64, x_max: f64, ell: f64, epsilon: f64, alpha: f64) -> f64 {
    ell + t * (((1.0 - epsilon) * ((x_max - ell) / t).exp() + epsilon).ln() - alpha.ln())
}

/// Minimum of [`evar_reduced`] over `t > 0`: dense log scan then
/// golden-section refinement, compared with the `t → 0` limit `ℓ`.
pub fn evar_bound_oracle(x_max: f64, ell: f64, epsilon: f64, alpha: f64) -> f64 {
    let f = |s: f64| evar_reduced(s.exp(), x_max, ell, epsilon, alpha);
    let (lo, hi, points) = (-16.0f64, 16.0f64, 4000);
    let step = (hi - lo) / points as f64;
    let mut best_k = 0;
    let mut best = f64::INFINITY;
    for k in 0..=points {
        let v = f(lo + step * k as f64);
        if v < best {
            best = v;
            best_k = k;
        }
    }
    let (mut a, mut b) = (
        lo + step * (best_k as f64 - 1.0),
        lo + step * (best_k as f64 + 1.0),
    );
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    for _ in 0..200 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    best.min(f(0.5 * (a + b))).min(ell)
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}
