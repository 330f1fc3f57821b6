//! Scalar minimization: coarse grid seeding followed by golden-section
//! refinement. The grid guards against the multimodal landscapes that screw
//! registration produces over a full turn.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes `f` over `[lo, hi]`. `coarse` grid points (inclusive) seed the
/// bracket; golden-section then shrinks it below `tol`. Returns the best
/// argument and value seen.
pub fn minimize_scalar<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    coarse: usize,
    tol: f64,
) -> (f64, f64) {
    debug_assert!(hi >= lo);
    if hi == lo {
        let v = f(lo);
        return (lo, v);
    }
    let n = coarse.max(2);
    let mut best_x = lo;
    let mut best_v = f64::INFINITY;
    let mut best_i = 0usize;
    for i in 0..n {
        let x = lo + (hi - lo) * (i as f64) / ((n - 1) as f64);
        let v = f(x);
        if v < best_v {
            best_v = v;
            best_x = x;
            best_i = i;
        }
    }
    let step = (hi - lo) / ((n - 1) as f64);
    let mut a = (lo + step * (best_i as f64 - 1.0)).max(lo);
    let mut b = (lo + step * (best_i as f64 + 1.0)).min(hi);

    let mut x1 = b - (b - a) * INV_PHI;
    let mut x2 = a + (b - a) * INV_PHI;
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - (b - a) * INV_PHI;
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + (b - a) * INV_PHI;
            f2 = f(x2);
        }
        if f1 < best_v {
            best_v = f1;
            best_x = x1;
        }
        if f2 < best_v {
            best_v = f2;
            best_x = x2;
        }
    }
    (best_x, best_v)
}
