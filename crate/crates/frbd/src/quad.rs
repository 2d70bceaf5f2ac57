//! Adaptive quadrature, cumulative integrals, root bracketing and trapezoid
//! helpers used by the closed-form oracles and the diagnostics.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuadError {
    #[error("adaptive quadrature did not converge on [{a}, {b}] (tol {tol})")]
    NonConvergence { a: f64, b: f64, tol: f64 },
    #[error("root not bracketed on [{a}, {b}]")]
    NotBracketed { a: f64, b: f64 },
}

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`. Handles kinks by subdivision; genuinely non-integrable behavior
/// surfaces as [`QuadError::NonConvergence`].
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, QuadError> {
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&mut f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, QuadError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol || (b - a).abs() < 1e-15 * (a.abs() + b.abs() + 1.0) {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(QuadError::NonConvergence { a, b, tol });
    }
    let l = simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// 5-point Gauss-Legendre quadrature on `[a, b]` (exact through degree 9).
pub fn gauss5<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    // nodes/weights on [-1, 1]
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189,
        0.478_628_670_499_366,
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
    ];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..5 {
        acc += W[i] * f(c + h * X[i]);
    }
    acc * h
}

/// Adaptive panel decomposition of an antiderivative: after construction,
/// `eval(s)` returns `∫_a^s f` for any `s` in `[a, b]` at roughly the build
/// tolerance, with O(log n) lookup plus one Gauss panel.
pub struct CumulativeIntegral {
    ends: Vec<f64>,
    prefix: Vec<f64>,
    a: f64,
}

impl CumulativeIntegral {
    pub fn build<F: FnMut(f64) -> f64>(
        mut f: F,
        a: f64,
        b: f64,
        tol: f64,
    ) -> Result<(Self, F), QuadError> {
        let mut ends = Vec::new();
        let mut vals = Vec::new();
        if b > a {
            let m = 0.5 * (a + b);
            let (fa, fm, fb) = (f(a), f(m), f(b));
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            panels(&mut f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut ends, &mut vals)?;
        }
        let mut prefix = Vec::with_capacity(vals.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for v in &vals {
            acc += v;
            prefix.push(acc);
        }
        Ok((Self { ends, prefix, a }, f))
    }

    /// Total integral over the build interval.
    pub fn total(&self) -> f64 {
        *self.prefix.last().unwrap_or(&0.0)
    }

    /// `∫_a^s f`, re-evaluating `f` only inside the panel containing `s`.
    pub fn eval<F: FnMut(f64) -> f64>(&self, mut f: F, s: f64) -> f64 {
        if self.ends.is_empty() || s <= self.a {
            return 0.0;
        }
        let i = self.ends.partition_point(|&e| e < s);
        if i >= self.ends.len() {
            return self.total();
        }
        let left = if i == 0 { self.a } else { self.ends[i - 1] };
        self.prefix[i] + gauss5(&mut f, left, s)
    }
}

#[allow(clippy::too_many_arguments)]
fn panels<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    ends: &mut Vec<f64>,
    vals: &mut Vec<f64>,
) -> Result<(), QuadError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol || (b - a).abs() < 1e-15 * (a.abs() + b.abs() + 1.0) {
        // keep the two half-panels so partial Gauss evaluation stays accurate
        ends.push(m);
        vals.push(left + 0.5 * err / 15.0);
        ends.push(b);
        vals.push(right + 0.5 * err / 15.0);
        return Ok(());
    }
    if depth == 0 {
        return Err(QuadError::NonConvergence { a, b, tol });
    }
    panels(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, ends, vals)?;
    panels(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, ends, vals)
}

/// Brent root finding on a bracketing interval.
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<f64, QuadError> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(QuadError::NotBracketed { a, b });
    }
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut mflag = true;
    for _ in 0..200 {
        let s = if fa != fc && fb != fc {
            // inverse quadratic interpolation
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let cond = !((lo.min(b) < s && s < lo.max(b))
            && !(mflag && (s - b).abs() >= (b - c).abs() / 2.0)
            && !(!mflag && (s - b).abs() >= (c - d).abs() / 2.0));
        let s = if cond {
            mflag = true;
            0.5 * (a + b)
        } else {
            mflag = false;
            s
        };
        let fs = f(s);
        d = c;
        c = b;
        fc = fb;
        if fa * fs < 0.0 {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
        if fb == 0.0 || (b - a).abs() < tol {
            return Ok(b);
        }
    }
    Ok(b)
}

/// Composite trapezoid of irregularly sampled data.
pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(t.len(), y.len());
    let mut acc = 0.0;
    for i in 1..t.len() {
        acc += 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1]);
    }
    acc
}

/// `(1 - exp(-x)) / x`, stable for small and zero x.
#[inline]
pub fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0 - 0.5 * x
    } else {
        -f64::exp_m1(-x) / x
    }
}

/// `(x - 1 + exp(-x)) / x`, the constant-pressure steady-force bracket,
/// with a 4-term series below x = 1e-4 to avoid cancellation.
#[inline]
pub fn bracket_relax(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        x * (0.5 + x * (-1.0 / 6.0 + x * (1.0 / 24.0 - x / 120.0)))
    } else {
        (x - 1.0 + (-x).exp()) / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_polynomial_and_transcendental() {
        let v = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(v, 4.0, epsilon = 1e-11);
        let v = adaptive_simpson(|x| (1.0 + x).recip(), 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(v, 2.0f64.ln(), epsilon = 1e-11);
        // kink
        let v = adaptive_simpson(|x: f64| x.abs(), -1.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(v, 2.5, epsilon = 1e-10);
    }

    #[test]
    fn cumulative_matches_direct() {
        let f = |x: f64| (3.0 * x).sin() + 0.2 * x;
        let (acc, _) = CumulativeIntegral::build(f, 0.0, 5.0, 1e-12).unwrap();
        for &s in &[0.0, 0.3, 1.7, 2.0, 4.999, 5.0] {
            let direct = adaptive_simpson(f, 0.0, s, 1e-13).unwrap();
            assert_relative_eq!(acc.eval(f, s), direct, epsilon = 1e-10);
        }
    }

    #[test]
    fn brent_finds_roots() {
        let r = brent(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert_relative_eq!(r, 2.0f64.sqrt(), epsilon = 1e-12);
        assert!(brent(|x| x * x + 1.0, 0.0, 2.0, 1e-14).is_err());
    }

    #[test]
    fn stable_brackets() {
        assert_relative_eq!(phi1(0.0), 1.0);
        assert_relative_eq!(phi1(1e-9), 1.0 - 0.5e-9, epsilon = 1e-15);
        assert_relative_eq!(phi1(2.0), (1.0 - (-2.0f64).exp()) / 2.0, epsilon = 1e-15);
        assert_relative_eq!(bracket_relax(3.0), (3.0 - 1.0 + (-3.0f64).exp()) / 3.0, epsilon = 1e-15);
        // series branch agrees with exact limit behavior x/2 - x^2/6
        let x = 5e-5;
        assert_relative_eq!(bracket_relax(x), x / 2.0 - x * x / 6.0, max_relative = 1e-10);
        assert_eq!(bracket_relax(0.0), 0.0);
    }

    #[test]
    fn trapezoid_linear_exact() {
        let t = [0.0, 0.5, 2.0, 3.0];
        let y: Vec<f64> = t.iter().map(|x| 2.0 * x + 1.0).collect();
        assert_relative_eq!(trapezoid(&t, &y), 12.0, epsilon = 1e-14);
    }
}
