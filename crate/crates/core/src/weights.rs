//! Nonnegative summable weights on ℤ.
//!
//! The main sequence is the Fourier coefficient sequence of
//!
//! ```text
//! f(x) = exp(2 − 1/|x − ½|),   f(½) = 0,   x ∈ [0, 1],
//! ```
//!
//! which is even about ½, so `a_n = ∫₀¹ f(x) e^{−2πinx} dx` is real and
//! symmetric, and `Σ a_n = f(0) = 1`. Coefficients are computed with an FFT of
//! uniform samples (the periodic trapezoid rule) plus Euler-Maclaurin endpoint
//! corrections for the derivative jump of `f` at `0 ≡ 1`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num::complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finsets::{FinSet, Window};
use crate::hilbert::Operator;

pub const MIN_RESOLUTION: usize = 1 << 12;
pub const CONVERGENCE_TOLERANCE: f64 = 1e-10;
pub const IMAGINARY_TOLERANCE: f64 = 1e-12;
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
pub const NONNEGATIVITY_TOLERANCE: f64 = -1e-9;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-15;

// one-sided derivatives of f at the endpoints: f'(0) = −4, f'(1) = 4, f'''(0) = 32, f'''(1) = −32
const FIRST_DERIVATIVE_JUMP: f64 = 8.0;
const THIRD_DERIVATIVE_JUMP: f64 = -64.0;

/// `f(x) = exp(2 − 1/|x − ½|)` on `[0, 1]`, with `f(½) = 0`.
pub fn eval_f(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("f is defined on [0, 1], got {x}")));
    }
    Ok(f_unchecked(x))
}

fn f_unchecked(x: f64) -> f64 {
    let d = (x - 0.5).abs();
    if d == 0.0 {
        0.0
    } else {
        (2.0 - 1.0 / d).exp()
    }
}

/// Real sequence `(a_n)` indexed by `n ∈ [−K, K]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSequence {
    half_width: usize,
    values: Vec<f64>,
    normalized: bool,
}

impl WeightSequence {
    /// Builds a sequence from the values at `−K, ..., K`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len().is_multiple_of(2) {
            return Err(Error::Precondition(format!(
                "a symmetric window needs an odd number of values, got {}",
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if let Some(i) = values.iter().position(|&v| v < NONNEGATIVITY_TOLERANCE) {
            return Err(Error::Precondition(format!(
                "weight at n = {} is negative ({})",
                i as i64 - (values.len() / 2) as i64,
                values[i]
            )));
        }
        Ok(Self {
            half_width: values.len() / 2,
            values,
            normalized: false,
        })
    }

    /// Point mass at `n`, placed in the window `[−K, K]`.
    pub fn delta(n: i64, half_width: usize) -> Result<Self> {
        if n.unsigned_abs() as usize > half_width {
            return Err(Error::Window(format!(
                "δ_{n} does not fit into [−{half_width}, {half_width}]"
            )));
        }
        let mut values = vec![0.0; 2 * half_width + 1];
        values[(n + half_width as i64) as usize] = 1.0;
        Ok(Self {
            half_width,
            values,
            normalized: true,
        })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `a_n`, zero outside the window.
    pub fn get(&self, n: i64) -> f64 {
        let k = self.half_width as i64;
        if n < -k || n > k {
            0.0
        } else {
            self.values[(n + k) as usize]
        }
    }

    /// Values at `−K, ..., K`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(n, a_n)` for every nonzero weight.
    pub fn support(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let k = self.half_width as i64;
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(move |(i, &v)| (i as i64 - k, v))
    }

    pub fn window(&self) -> Window {
        Window::symmetric(self.half_width as i64)
    }

    /// Compensated sum of all weights.
    pub fn sum(&self) -> f64 {
        neumaier_sum(self.values.iter().copied())
    }

    /// `Σ_{|n| ≤ k} a_n`.
    pub fn partial_sum(&self, k: usize) -> f64 {
        let k = k.min(self.half_width) as i64;
        neumaier_sum((-k..=k).map(|n| self.get(n)))
    }

    /// Restriction to `[−k, k]` (not renormalized).
    pub fn truncate(&self, k: usize) -> WeightSequence {
        let k = k.min(self.half_width);
        let off = self.half_width - k;
        WeightSequence {
            half_width: k,
            values: self.values[off..off + 2 * k + 1].to_vec(),
            normalized: false,
        }
    }

    /// `max_n |a_n − a_{−n}|`.
    pub fn asymmetry(&self) -> f64 {
        let k = self.half_width as i64;
        (0..=k)
            .map(|n| (self.get(n) - self.get(-n)).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `n, a_n, running_sum`, numbers with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,a_n,running_sum\n");
        let mut acc = Neumaier::default();
        let k = self.half_width as i64;
        for n in -k..=k {
            let a = self.get(n);
            acc.add(a);
            writeln!(out, "{n},{:.16e},{:.16e}", a, acc.value()).unwrap();
        }
        out
    }
}

/// Health figures of a coefficient computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDiagnostics {
    pub resolution: usize,
    pub max_imaginary: f64,
    pub max_asymmetry: f64,
    pub min_value: f64,
    /// Largest `|a_n(R) − a_n(2R)|` over the window.
    pub max_resolution_gap: f64,
    pub worst_index: i64,
}

/// `a_n` for `|n| ≤ K`, unnormalized, together with diagnostics.
///
/// `resolution` is the number of samples of `f` on `[0, 1)` and must be a
/// power of two ≥ 4096 exceeding `4K`. The computation is repeated at twice the
/// resolution and every coefficient must agree to 1e-10.
pub fn fourier_coefficients_with_diagnostics(
    half_width: usize,
    resolution: usize,
) -> Result<(WeightSequence, CoefficientDiagnostics)> {
    if !resolution.is_power_of_two() || resolution < MIN_RESOLUTION {
        return Err(Error::Precondition(format!(
            "resolution must be a power of two ≥ {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    if 4 * half_width >= resolution {
        return Err(Error::Precondition(format!(
            "resolution {resolution} too coarse for K = {half_width}"
        )));
    }
    let (coarse, fine) = rayon::join(
        || corrected_trapezoid(half_width, resolution),
        || corrected_trapezoid(half_width, 2 * resolution),
    );

    let k = half_width as i64;
    let at = |c: &[Complex64], n: i64| c[(n + k) as usize];
    let mut diag = CoefficientDiagnostics {
        resolution,
        max_imaginary: 0.0,
        max_asymmetry: 0.0,
        min_value: f64::INFINITY,
        max_resolution_gap: 0.0,
        worst_index: 0,
    };
    for n in -k..=k {
        let gap = (at(&coarse, n) - at(&fine, n)).norm();
        if gap > diag.max_resolution_gap {
            diag.max_resolution_gap = gap;
            diag.worst_index = n;
        }
        diag.max_imaginary = diag.max_imaginary.max(at(&fine, n).im.abs());
        diag.max_asymmetry = diag
            .max_asymmetry
            .max((at(&fine, n).re - at(&fine, -n).re).abs());
        diag.min_value = diag.min_value.min(at(&fine, n).re);
    }
    if diag.max_resolution_gap > CONVERGENCE_TOLERANCE {
        return Err(Error::Convergence {
            index: diag.worst_index,
            deviation: diag.max_resolution_gap,
        });
    }
    if diag.max_imaginary > IMAGINARY_TOLERANCE || diag.max_asymmetry > SYMMETRY_TOLERANCE {
        return Err(Error::Precondition(format!(
            "coefficients not real and symmetric (imaginary {:e}, asymmetry {:e})",
            diag.max_imaginary, diag.max_asymmetry
        )));
    }
    let values = fine.iter().map(|z| z.re).collect();
    Ok((WeightSequence::new(values)?, diag))
}

/// `a_n` for `|n| ≤ K`, unnormalized.
pub fn fourier_coefficients(half_width: usize, resolution: usize) -> Result<WeightSequence> {
    fourier_coefficients_with_diagnostics(half_width, resolution).map(|(a, _)| a)
}

fn corrected_trapezoid(half_width: usize, resolution: usize) -> Vec<Complex64> {
    let h = 1.0 / resolution as f64;
    let mut buf: Vec<Complex64> = (0..resolution)
        .into_par_iter()
        .map(|i| Complex64::new(f_unchecked(i as f64 * h), 0.0))
        .collect();
    FftPlanner::new()
        .plan_fft_forward(resolution)
        .process(&mut buf);
    let k = half_width as i64;
    (-k..=k)
        .map(|n| {
            let raw = buf[n.rem_euclid(resolution as i64) as usize] * h;
            let w = 2.0 * PI * n as f64;
            // g(x) = f(x)e^{−2πinx}: [g'] = [f'], [g'''] = [f'''] − 3w²[f']
            let g1 = FIRST_DERIVATIVE_JUMP;
            let g3 = THIRD_DERIVATIVE_JUMP - 3.0 * w * w * FIRST_DERIVATIVE_JUMP;
            raw - h * h / 12.0 * g1 + h.powi(4) / 720.0 * g3
        })
        .collect()
}

/// Rescales to unit sum; the largest entry absorbs the final rounding so that
/// the compensated sum is 1 to working precision.
pub fn normalize(a: &WeightSequence) -> Result<WeightSequence> {
    let s = a.sum();
    if s <= 0.0 || s.is_nan() {
        return Err(Error::ZeroSum);
    }
    let mut values: Vec<f64> = a.values.iter().map(|v| v / s).collect();
    let (imax, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        });
    let excess = neumaier_sum(values.iter().copied()) - 1.0;
    values[imax] -= excess;
    Ok(WeightSequence {
        half_width: a.half_width,
        values,
        normalized: true,
    })
}

/// Normalized coefficients of `f` truncated at `K`.
pub fn normalized_weights(half_width: usize, resolution: usize) -> Result<WeightSequence> {
    normalize(&fourier_coefficients(half_width, resolution)?)
}

/// One-sided geometric weights `a_n = 2^{−(n+1)}` for `0 ≤ n ≤ K`, zero for
/// `n < 0`; not normalized, the sum is `1 − 2^{−(K+1)}`.
pub fn geometric_weights(half_width: usize) -> Result<WeightSequence> {
    if half_width == 0 {
        return Err(Error::Precondition("geometric weights need K ≥ 1".into()));
    }
    let values = (-(half_width as i64)..=half_width as i64)
        .map(|n| {
            if n < 0 {
                0.0
            } else {
                0.5f64.powi(n as i32 + 1)
            }
        })
        .collect();
    WeightSequence::new(values)
}

/// Toeplitz matrix `(k, m) ↦ a_{k−m}` for `k ∈ out_window`, `m ∈ in_window`.
pub fn convolution_operator(
    a: &WeightSequence,
    in_window: Window,
    out_window: Window,
) -> Result<Operator> {
    let need = in_window.dilate(a.half_width as i64);
    if !out_window.contains_window(need) {
        return Err(Error::Window(format!(
            "output window {out_window} must contain {need}"
        )));
    }
    Ok(Operator::from_fn(
        out_window.len(),
        in_window.len(),
        |r, c| {
            Complex64::new(
                a.get(out_window.lo + r as i64 - in_window.lo - c as i64),
                0.0,
            )
        },
    ))
}

/// Smallest singular value of `x ↦ a * x` on sequences supported in `[−m, m]`,
/// keeping only output coordinates outside `forbidden`.
pub fn injectivity_margin(
    a: &WeightSequence,
    support_half_width: usize,
    forbidden: Option<&FinSet>,
) -> Result<f64> {
    let in_window = Window::symmetric(support_half_width as i64);
    let out_window = in_window.dilate(a.half_width as i64);
    let full = convolution_operator(a, in_window, out_window)?;
    let rows: Vec<usize> = (0..out_window.len())
        .filter(|&r| forbidden.is_none_or(|f| !f.contains(out_window.lo + r as i64)))
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyRestriction);
    }
    let restricted = Operator::from_fn(rows.len(), full.cols(), |r, c| full.get(rows[r], c));
    Ok(restricted.injectivity_margin())
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    compensation: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

fn neumaier_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    xs.for_each(|x| acc.add(x));
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values from an independent 40-digit quadrature
    const ORACLE: [(i64, f64); 11] = [
        (0, 0.27734276622355483061),
        (1, 0.20451968322046999556),
        (2, 0.079542420122436507211),
        (3, 0.019825781018796061078),
        (4, 0.011964781084082628301),
        (5, 0.0088655585728936181005),
        (10, 0.0020464247804171565788),
        (32, 0.00019793134422604877491),
        (64, 4.9475681032357103715e-5),
        (128, 1.2368461513792425038e-5),
        (256, 3.0920866982861558147e-6),
    ];

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            let t = (tol / 2.0).max(1e-17);
            rec(f, a, m, fa, flm, fm, left, t, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, t, depth - 1)
        }
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        rec(
            f,
            a,
            b,
            fa,
            fm,
            fb,
            (b - a) / 6.0 * (fa + 4.0 * fm + fb),
            tol,
            22,
        )
    }

    #[test]
    fn f_examples() {
        assert_eq!(eval_f(0.5).unwrap(), 0.0);
        assert!((eval_f(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((eval_f(0.25).unwrap() - (-2.0f64).exp()).abs() < 1e-16);
        assert!((eval_f(0.3).unwrap() - eval_f(0.7).unwrap()).abs() < 1e-15);
        assert!(eval_f(1.5).is_err());
    }

    #[test]
    fn endpoint_derivatives_match_finite_differences() {
        let h = 1e-4;
        let d1 =
            (-f_unchecked(2.0 * h) + 4.0 * f_unchecked(h) - 3.0 * f_unchecked(0.0)) / (2.0 * h);
        assert!((-d1 - 4.0).abs() < 1e-5, "{d1}");
        // f near 0 is exp(2 − 2/(1 − 2x)); expand in x for f''' as a series check
        let g = |x: f64| (2.0 - 2.0 / (1.0 - 2.0 * x)).exp();
        let h = 1e-3;
        let d3 = (g(2.0 * h) - 2.0 * g(h) + 2.0 * g(-h) - g(-2.0 * h)) / (2.0 * h * h * h);
        assert!((d3 - 32.0).abs() < 1e-2, "{d3}");
    }

    #[test]
    fn coefficients_match_oracle() {
        let (a, diag) = fourier_coefficients_with_diagnostics(256, 1 << 14).unwrap();
        for (n, v) in ORACLE {
            assert!((a.get(n) - v).abs() < 1e-13, "n = {n}: {} vs {v}", a.get(n));
            assert!((a.get(n) - a.get(-n)).abs() <= SYMMETRY_TOLERANCE);
        }
        assert!(diag.max_resolution_gap <= CONVERGENCE_TOLERANCE);
        assert!(diag.min_value >= NONNEGATIVITY_TOLERANCE);
    }

    #[test]
    fn zeroth_coefficient_matches_adaptive_simpson() {
        let a0 = fourier_coefficients(0, 1 << 12).unwrap().get(0);
        let coarse = 2.0 * simpson(&f_unchecked, 0.0, 0.5, 1e-10);
        let fine = 2.0 * simpson(&f_unchecked, 0.0, 0.5, 1e-13);
        assert!((coarse - fine).abs() < 1e-9);
        assert!((a0 - fine).abs() < 1e-12, "{a0} vs {fine}");
    }

    #[test]
    fn asymptotic_decay() {
        let a = fourier_coefficients(256, 1 << 14).unwrap();
        let target = 2.0 / (PI * PI);
        for n in 64..=256 {
            let r = (n * n) as f64 * a.get(n) / target;
            assert!((r - 1.0).abs() < 0.2, "n = {n}: ratio {r}");
        }
    }

    #[test]
    fn rejects_bad_resolution() {
        assert!(fourier_coefficients(4, 1000).is_err());
        assert!(fourier_coefficients(4, 1 << 11).is_err());
        assert!(fourier_coefficients(2048, 1 << 12).is_err());
    }

    #[test]
    fn normalization() {
        let a = WeightSequence::new(vec![0.0, 2.0, 0.0]).unwrap();
        let n = normalize(&a).unwrap();
        assert_eq!(n.values(), &[0.0, 1.0, 0.0]);
        let again = normalize(&n).unwrap();
        for (x, y) in again.values().iter().zip(n.values()) {
            assert!((x - y).abs() <= 1e-15);
        }
        assert!(matches!(
            normalize(&WeightSequence::new(vec![0.0]).unwrap()),
            Err(Error::ZeroSum)
        ));
        let p = normalized_weights(2, 1 << 12).unwrap();
        let expected = [
            0.09408104949235939,
            0.24190144591537113,
            0.32803500918453893,
            0.24190144591537113,
            0.09408104949235939,
        ];
        for (x, y) in p.values().iter().zip(expected) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!((p.sum() - 1.0).abs() <= NORMALIZATION_TOLERANCE);
    }

    #[test]
    fn geometric_examples() {
        let g = geometric_weights(8).unwrap();
        assert_eq!(g.get(0), 0.5);
        assert_eq!(g.get(3), 1.0 / 16.0);
        assert_eq!(g.get(-1), 0.0);
        assert_eq!(g.sum(), 1.0 - 0.5f64.powi(9));
        assert!(geometric_weights(0).is_err());
    }

    #[test]
    fn convolution_examples() {
        let w = Window::symmetric(2);
        let id =
            convolution_operator(&WeightSequence::delta(0, 1).unwrap(), w, w.dilate(1)).unwrap();
        for r in 0..id.rows() {
            for c in 0..id.cols() {
                let expected = if r == c + 1 { 1.0 } else { 0.0 };
                assert_eq!(id.get(r, c).re, expected);
            }
        }
        let shift =
            convolution_operator(&WeightSequence::delta(1, 1).unwrap(), w, w.dilate(1)).unwrap();
        assert_eq!(shift.get(2, 0).re, 1.0);
        assert!(convolution_operator(&WeightSequence::delta(1, 1).unwrap(), w, w).is_err());
    }

    #[test]
    fn injectivity_margins_match_recorded_values() {
        assert!(
            (injectivity_margin(&WeightSequence::delta(0, 0).unwrap(), 3, None).unwrap() - 1.0)
                .abs()
                < 1e-12
        );
        let p = normalized_weights(64, 1 << 14).unwrap();
        let recorded = [
            (8, 0.00014322104834136522),
            (16, 3.4792783760890195e-05),
            (24, 3.4692045428230025e-05),
        ];
        for (m, v) in recorded {
            let got = injectivity_margin(&p, m, None).unwrap();
            assert!(
                (got - v).abs() < 1e-9 * v.max(1.0) + 1e-12,
                "m = {m}: {got}"
            );
        }
        let g = geometric_weights(8).unwrap();
        let zero = FinSet::singleton(0);
        let recorded = [
            (4, 0.0008731435906784161),
            (8, 0.000787329233866017),
            (12, 1.7058217774413244e-06),
        ];
        for (m, v) in recorded {
            let got = injectivity_margin(&g, m, Some(&zero)).unwrap();
            assert!((got - v).abs() < 1e-9, "m = {m}: {got}");
        }
    }

    #[test]
    fn csv_running_sum() {
        let csv = geometric_weights(2).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "n,a_n,running_sum");
        assert!(lines[5].starts_with("2,1.2500000000000000e-1,8.7500000000000000e-1"));
    }
}
