//! Bracketing helpers shared by the zero counters.

/// Bisection on a bracket with `f(lo)` and `f(hi)` of opposite (or zero) sign.
/// Stops when the bracket is narrower than `tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    let fhi = f(hi);
    if fhi == 0.0 {
        return hi;
    }
    debug_assert!(flo.signum() != fhi.signum(), "bisect needs a sign change");
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Zeros of `f` on `[a, b]`: sign changes on a uniform scan of `cells` cells,
/// refined by bisection to `tol`, plus touching zeros (local minima of |f|
/// below `touch_tol` without a sign change), each counted once.
pub fn scan_zeros<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    cells: usize,
    tol: f64,
    touch_tol: f64,
) -> Vec<f64> {
    if b <= a {
        return if f(a).abs() < touch_tol { vec![a] } else { vec![] };
    }
    let h = (b - a) / cells as f64;
    let xs: Vec<f64> = (0..=cells).map(|i| if i == cells { b } else { a + h * i as f64 }).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut zeros = Vec::new();
    for i in 0..cells {
        let (f0, f1) = (fs[i], fs[i + 1]);
        if f0 != 0.0 && f1 != 0.0 && f0.signum() != f1.signum() {
            zeros.push(bisect(&mut f, xs[i], xs[i + 1], tol));
        } else if f0 == 0.0 && (i == 0 || fs[i - 1] != 0.0) {
            zeros.push(xs[i]);
        }
    }
    if fs[cells] == 0.0 && fs[cells - 1] != 0.0 {
        zeros.push(b);
    }
    // touching zeros: interior local minima of |f| that stay on one side
    for i in 1..cells {
        let (fl, fm, fr) = (fs[i - 1], fs[i], fs[i + 1]);
        if fm != 0.0
            && fm.abs() < touch_tol
            && fm.abs() <= fl.abs()
            && fm.abs() <= fr.abs()
            && fl.signum() == fm.signum()
            && fr.signum() == fm.signum()
        {
            zeros.push(xs[i]);
        }
    }
    zeros.sort_by(f64::total_cmp);
    zeros
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn scan_counts_sign_changes_and_touches() {
        let z = scan_zeros(|x| (x - 0.3) * (x - 0.7), 0.0, 1.0, 100, 1e-12, 1e-12);
        assert_eq!(z.len(), 2);
        // double root at 0.5 hit exactly by the grid
        let z = scan_zeros(|x| (x - 0.5) * (x - 0.5), 0.0, 1.0, 100, 1e-12, 1e-12);
        assert_eq!(z.len(), 1);
    }
}
