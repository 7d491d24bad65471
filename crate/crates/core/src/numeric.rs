//! Small scalar numerics shared by the map and certification code: uniform
//! grids, sign-change bracketing with bisection, and golden-section search.

/// `n` evenly spaced points covering the closed interval `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |i| if i + 1 == n && n > 1 { hi } else { lo + step * i as f64 })
}

/// Bisection on a bracket where `h(lo)` and `h(hi)` have opposite signs (or one
/// of them is zero). Stops once the bracket is narrower than `tol`.
pub fn bisect<F: Fn(f64) -> f64>(h: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut h_lo = h(lo);
    if h_lo == 0.0 {
        return lo;
    }
    if h(hi) == 0.0 {
        return hi;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let h_mid = h(mid);
        if h_mid == 0.0 {
            return mid;
        }
        if (h_mid < 0.0) == (h_lo < 0.0) {
            lo = mid;
            h_lo = h_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Locates the last point of a bracket `[inside, outside]` that still satisfies
/// `pred`, assuming `pred(inside)` holds and `pred(outside)` does not. The
/// returned point always satisfies `pred`.
pub fn refine_boundary<P: Fn(f64) -> bool>(pred: P, mut inside: f64, mut outside: f64, tol: f64) -> f64 {
    while (outside - inside).abs() > tol {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if pred(mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// All roots of `h` on `[lo, hi]` found by scanning `n` grid points for sign
/// changes and bisecting each bracket to width `tol`.
pub fn grid_roots<F: Fn(f64) -> f64>(h: F, lo: f64, hi: f64, n: usize, tol: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for x in linspace(lo, hi, n) {
        let hx = h(x);
        if let Some((xp, hp)) = prev {
            if hp == 0.0 {
                // already recorded when it was the right end
            } else if hx == 0.0 {
                roots.push(x);
            } else if (hp < 0.0) != (hx < 0.0) {
                roots.push(bisect(&h, xp, x, tol));
            }
        } else if hx == 0.0 {
            roots.push(x);
        }
        prev = Some((x, hx));
    }
    roots
}

/// Golden-section search for the maximum of a unimodal `h` on `[lo, hi]`.
pub fn golden_max<F: Fn(f64) -> f64>(h: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut hc = h(c);
    let mut hd = h(d);
    while hi - lo > tol {
        if hc >= hd {
            hi = d;
            d = c;
            hd = hc;
            c = hi - inv_phi * (hi - lo);
            hc = h(c);
        } else {
            lo = c;
            c = d;
            hc = hd;
            d = lo + inv_phi * (hi - lo);
            hd = h(d);
        }
        if c >= d {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    (x, h(x))
}
