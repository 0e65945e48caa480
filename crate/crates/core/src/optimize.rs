//! Bounded scalar maximization.

use serde::{Deserialize, Serialize};

use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarMax<T> {
    pub x: T,
    pub fx: T,
    pub evaluations: usize,
    /// False if the bracket did not shrink below `x_tol` within the iteration
    /// budget or the last two interior values still differed by more than
    /// `f_tol` relative.
    pub converged: bool,
}

/// Golden-section search for the maximum of a unimodal `f` on [lo, hi].
pub fn golden_section_max<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    lo: T,
    hi: T,
    x_tol: T,
    f_tol: T,
    max_iter: usize,
) -> ScalarMax<T> {
    let inv_phi = (lit::<T>(5.0).sqrt() - T::one()) / lit(2.0);
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;
    let mut width_ok = false;
    for _ in 0..max_iter {
        if (b - a).abs() <= x_tol {
            width_ok = true;
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        evaluations += 1;
    }
    let scale = fc.abs().max(fd.abs());
    let f_ok = scale == T::zero() || (fc - fd).abs() <= f_tol * scale;
    let (x, fx) = if fc >= fd { (c, fc) } else { (d, fd) };
    // endpoints can beat the interior for monotone objectives
    let (fa, fb) = (f(lo), f(hi));
    evaluations += 2;
    let best = [(x, fx), (lo, fa), (hi, fb)].into_iter().fold((x, fx), |acc, p| if p.1 > acc.1 { p } else { acc });
    ScalarMax { x: best.0, fx: best.1, evaluations, converged: width_ok && f_ok }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let r = golden_section_max(|x: f64| -(x - 0.3).powi(2) + 2.0, -1.0, 4.0, 1e-9, 1e-6, 200);
        assert!(r.converged);
        assert!((r.x - 0.3).abs() < 1e-6);
        assert!((r.fx - 2.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_objective_picks_endpoint() {
        let r = golden_section_max(|x: f64| x, 0.0, 1.0, 1e-9, 1e-6, 200);
        assert_eq!(r.x, 1.0);
    }

    #[test]
    fn budget_exhaustion_flagged() {
        let r = golden_section_max(|x: f64| -(x * x), -1.0, 1.0, 1e-12, 1e-9, 3);
        assert!(!r.converged);
    }
}
