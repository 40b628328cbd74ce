//! Adaptive quadrature for `∫ w·g` with a polynomial weight `w` of degree
//! at most three and a monotone `g`.
//!
//! Panels where `g` takes the same value at both ends are constant, so
//! Simpson's rule on the weight is exact there. Other panels are bisected
//! until `width · max|w| · |g(a) − g(b)|` is within `tol`, which bounds the
//! error on that panel. The total error is at most `tol` per jump of `g`.

const MAX_DEPTH: u32 = 60;

/// `∫_a^b w(t)·g(t) dt` for monotone `g`.
pub fn integrate_monotone<W, G>(w: &W, g: &G, a: f64, b: f64, tol: f64) -> f64
where
    W: Fn(f64) -> f64 + ?Sized,
    G: Fn(f64) -> f64 + ?Sized,
{
    if a >= b {
        return 0.0;
    }
    panel(w, g, a, b, g(a), g(b), tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn panel<W, G>(w: &W, g: &G, a: f64, b: f64, ga: f64, gb: f64, tol: f64, depth: u32) -> f64
where
    W: Fn(f64) -> f64 + ?Sized,
    G: Fn(f64) -> f64 + ?Sized,
{
    let m = 0.5 * (a + b);
    let (wa, wm, wb) = (w(a), w(m), w(b));
    if ga == gb {
        return (b - a) / 6.0 * (wa + 4.0 * wm + wb) * ga;
    }
    let gm = g(m);
    let wmax = wa.abs().max(wm.abs()).max(wb.abs());
    if depth == 0 || (b - a) * wmax * (ga - gb).abs() <= tol || m <= a || m >= b {
        return (b - a) / 6.0 * (wa * ga + 4.0 * wm * gm + wb * gb);
    }
    panel(w, g, a, m, ga, gm, tol, depth - 1) + panel(w, g, m, b, gm, gb, tol, depth - 1)
}
