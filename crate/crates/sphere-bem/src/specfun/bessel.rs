//! Spherical Bessel functions `j_l`, `y_l` and the outgoing Hankel function
//! `h2_l = j_l - i y_l` for real positive argument.
//!
//! `j_l` is generated by Miller's downward recurrence normalized against the
//! closed forms at l = 0, 1; `y_l` goes upward from its closed-form seeds.
//! Both directions are the numerically stable ones. Magnitudes reach
//! `1e±1400` well inside the supported range, so the tables store a mantissa
//! together with a natural-log scale and rescale whenever the mantissa drifts
//! past `1e±250`.

use num_complex::Complex64;

use super::SpecialFunctionValue;
use crate::{Error, Result};

/// Largest order the plain (unscaled) accessors are validated for.
pub const MAX_ORDER: usize = 512;
/// Largest argument the plain accessors are validated for.
pub const MAX_ARGUMENT: f64 = 200.0;

const RESCALE_THRESHOLD: f64 = 1e250;
const RESCALE_LOG: f64 = 575.6462732485114; // ln(1e250)
const F64_MAX_LOG: f64 = 700.0;
const F64_MIN_LOG: f64 = -700.0;

/// A real number `mantissa * exp(log_scale)`; zero is `(0.0, 0.0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { mantissa: 0.0, log_scale: 0.0 };

    pub fn new(mantissa: f64, log_scale: f64) -> Self {
        if mantissa == 0.0 {
            return Self::ZERO;
        }
        // Keep mantissas in e^[-200, 200] so products can never underflow
        // or overflow before the scales are consulted.
        let e = mantissa.abs().ln();
        if e.abs() > 200.0 {
            Self { mantissa: mantissa * (-e).exp(), log_scale: log_scale + e }
        } else {
            Self { mantissa, log_scale }
        }
    }

    pub fn from_f64(v: f64) -> Self {
        Self::new(v, 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    /// Natural log of the magnitude; `-inf` for zero.
    pub fn log_abs(&self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.abs().ln() + self.log_scale
        }
    }

    /// Plain value; underflow rounds to zero, overflow is an error.
    pub fn to_f64(self, what: &'static str, l: usize, x: f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let log_mag = self.log_abs();
        if log_mag > F64_MAX_LOG {
            return Err(Error::Range { what, l, x });
        }
        if log_mag < F64_MIN_LOG {
            return Ok(0.0);
        }
        Ok(self.reconstruct())
    }

    /// Plain value, erroring on underflow as well: for callers that must not
    /// silently lose a mathematically nonzero result.
    pub fn to_f64_strict(self, what: &'static str, l: usize, x: f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let log_mag = self.log_abs();
        if !(F64_MIN_LOG..=F64_MAX_LOG).contains(&log_mag) {
            return Err(Error::Range { what, l, x });
        }
        Ok(self.reconstruct())
    }

    /// `mantissa * exp(log_scale)` without intermediate over/underflow; only
    /// valid when the result is known to be representable. Splitting the
    /// exponential keeps the mantissa's precision (no ln/exp round trip).
    fn reconstruct(self) -> f64 {
        if self.log_scale.abs() <= F64_MAX_LOG {
            self.mantissa * self.log_scale.exp()
        } else {
            let half = (0.5 * self.log_scale).exp();
            (self.mantissa * half) * half
        }
    }
}

impl std::ops::Mul for Scaled {
    type Output = Scaled;

    fn mul(self, other: Scaled) -> Scaled {
        Scaled::new(self.mantissa * other.mantissa, self.log_scale + other.log_scale)
    }
}

/// Subtraction evaluates at the larger of the two scales so the mantissa
/// arithmetic never overflows.
impl std::ops::Sub for Scaled {
    type Output = Scaled;

    fn sub(self, other: Scaled) -> Scaled {
        if self.is_zero() {
            return Scaled::new(-other.mantissa, other.log_scale);
        }
        if other.is_zero() {
            return self;
        }
        let s = self.log_scale.max(other.log_scale);
        let a = self.mantissa * (self.log_scale - s).exp();
        let b = other.mantissa * (other.log_scale - s).exp();
        Scaled::new(a - b, s)
    }
}

/// Tables of `j_l(x)` and `y_l(x)` for `l = 0..=l_max` at fixed `x > 0`.
#[derive(Debug, Clone)]
pub struct SphericalBesselTable {
    x: f64,
    j: Vec<Scaled>,
    y: Vec<Scaled>,
}

impl SphericalBesselTable {
    pub fn new(l_max: usize, x: f64) -> Result<Self> {
        if !x.is_finite() || x <= 0.0 {
            return Err(Error::Domain(format!(
                "spherical Bessel argument must be finite and positive, got {x}"
            )));
        }
        Ok(Self { x, j: miller_j(l_max, x), y: upward_y(l_max, x) })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn l_max(&self) -> usize {
        self.j.len() - 1
    }

    pub fn j(&self, l: usize) -> Scaled {
        self.j[l]
    }

    pub fn y(&self, l: usize) -> Scaled {
        self.y[l]
    }

    /// `j_l'(x)` from `f_l' = f_{l-1} - (l+1)/x * f_l` (`f_0' = -f_1`).
    pub fn j_prime(&self, l: usize) -> Scaled {
        derivative(&self.j, l, self.x)
    }

    pub fn y_prime(&self, l: usize) -> Scaled {
        derivative(&self.y, l, self.x)
    }

    /// `h2_l = j_l - i y_l` in scaled complex form. When the two parts live at
    /// very different scales the smaller one degrades gracefully, which is the
    /// inherent price of a single common exponent.
    pub fn h2_scaled(&self, l: usize) -> SpecialFunctionValue {
        combine_h2(self.j(l), self.y(l))
    }

    pub fn h2_prime_scaled(&self, l: usize) -> SpecialFunctionValue {
        combine_h2(self.j_prime(l), self.y_prime(l))
    }
}

fn combine_h2(j: Scaled, y: Scaled) -> SpecialFunctionValue {
    if j.is_zero() && y.is_zero() {
        return SpecialFunctionValue { value: Complex64::ZERO, log_scale: 0.0 };
    }
    let s = match (j.is_zero(), y.is_zero()) {
        (false, false) => j.log_scale.max(y.log_scale),
        (false, true) => j.log_scale,
        (true, false) => y.log_scale,
        (true, true) => unreachable!(),
    };
    let re = if j.is_zero() { 0.0 } else { j.mantissa * (j.log_scale - s).exp() };
    let im = if y.is_zero() { 0.0 } else { -y.mantissa * (y.log_scale - s).exp() };
    SpecialFunctionValue { value: Complex64::new(re, im), log_scale: s }
}

fn derivative(table: &[Scaled], l: usize, x: f64) -> Scaled {
    if l == 0 {
        let f1 = table[1];
        return Scaled::new(-f1.mantissa, f1.log_scale);
    }
    let lower = table[l - 1];
    let scaled_ratio = Scaled::new((l as f64 + 1.0) / x * table[l].mantissa, table[l].log_scale);
    lower - scaled_ratio
}

fn j0(x: f64) -> f64 {
    x.sin() / x
}

fn j1(x: f64) -> f64 {
    x.sin() / (x * x) - x.cos() / x
}

/// Log10 envelope of the order-`n` regular solution's inverse magnitude.
fn envj(n: f64, x: f64) -> f64 {
    use std::f64::consts::{E, TAU};
    0.5 * (TAU * n).log10() - n * (0.5 * E * x / n).log10()
}

/// Smallest order whose envelope exceeds `target` decades, by secant
/// iteration on `envj`; the classical Miller starting-order estimate.
fn secant_on_envelope(x: f64, mut n0: f64, target: f64) -> f64 {
    let mut f0 = envj(n0, x) - target;
    let mut n1 = n0 + 5.0;
    let mut f1 = envj(n1, x) - target;
    for _ in 0..30 {
        if f1 == f0 {
            break;
        }
        let nn = (n1 - (n1 - n0) / (1.0 - f0 / f1)).max(1.0);
        if (nn - n1).abs() < 1.0 {
            return nn;
        }
        n0 = n1;
        f0 = f1;
        n1 = nn;
        f1 = envj(n1, x) - target;
    }
    n1
}

/// Starting order giving ~18 significant digits for `j_l_max(x)` after the
/// downward sweep.
fn miller_start(l_max: usize, x: f64) -> usize {
    let digits = 18.0;
    let n = l_max as f64;
    let ejn = envj(n.max(1.0), x);
    let (seed, target) = if ejn <= 0.5 * digits {
        ((1.1 * x).floor() + 1.0, digits)
    } else {
        (n, 0.5 * digits + ejn)
    };
    let estimate = secant_on_envelope(x, seed.max(1.0), target);
    (estimate as usize + 10).max(l_max + 25)
}

/// Downward Miller recurrence for `j_0..=j_max`, rescaling on the way down and
/// normalizing against whichever of the closed forms `j_0`, `j_1` is larger.
fn miller_j(l_max: usize, x: f64) -> Vec<Scaled> {
    // Start far enough above both the requested order and the turning point
    // that the admixture of the irregular solution dies out by l_max.
    let start = miller_start(l_max, x);
    let mut mant = vec![0.0; start + 1];
    let mut scale_at = vec![0.0; start + 1];
    let mut f_hi = 0.0; // f_{l+1}, shares the scale `carry`
    let mut f_lo = 1e-200; // f_l
    let mut carry = 0.0;
    mant[start] = f_lo;
    for l in (1..=start).rev() {
        let next = (2.0 * l as f64 + 1.0) / x * f_lo - f_hi;
        f_hi = f_lo;
        f_lo = next;
        if f_lo.abs() > RESCALE_THRESHOLD {
            f_lo *= 1e-250;
            f_hi *= 1e-250;
            carry += RESCALE_LOG;
        }
        mant[l - 1] = f_lo;
        scale_at[l - 1] = carry;
    }
    let (anchor_l, anchor_value) =
        if j0(x).abs() >= j1(x).abs() { (0usize, j0(x)) } else { (1usize, j1(x)) };
    let anchor = Scaled::new(mant[anchor_l], scale_at[anchor_l]);
    // ratio = true / computed. The quotient of the mantissas is a plain
    // division (the interlacing of j_0, j_1 zeros keeps the anchor value well
    // above underflow), so no lossy ln/exp round trip enters here.
    let ratio = Scaled::new(anchor_value / anchor.mantissa, -anchor.log_scale);
    (0..=l_max).map(|l| Scaled::new(mant[l], scale_at[l]) * ratio).collect()
}

/// Upward recurrence for `y_0..=y_max` from the closed-form seeds.
fn upward_y(l_max: usize, x: f64) -> Vec<Scaled> {
    let y0 = -x.cos() / x;
    let y1 = -x.cos() / (x * x) - x.sin() / x;
    let mut out = Vec::with_capacity(l_max + 1);
    out.push(Scaled::from_f64(y0));
    if l_max == 0 {
        return out;
    }
    out.push(Scaled::from_f64(y1));
    let mut prev = out[0];
    let mut cur = out[1];
    for l in 1..l_max {
        let prev_mant = prev.mantissa * (prev.log_scale - cur.log_scale).exp();
        let mut next =
            Scaled::new((2.0 * l as f64 + 1.0) / x * cur.mantissa - prev_mant, cur.log_scale);
        if next.mantissa.abs() > RESCALE_THRESHOLD {
            next = Scaled::new(next.mantissa * 1e-250, next.log_scale + RESCALE_LOG);
        }
        out.push(next);
        prev = cur;
        cur = next;
    }
    out
}

fn check_plain_domain(l: usize, x: f64) -> Result<()> {
    if l > MAX_ORDER {
        return Err(Error::Domain(format!(
            "order {l} exceeds the validated maximum {MAX_ORDER}"
        )));
    }
    if !x.is_finite() || x <= 0.0 || x > MAX_ARGUMENT {
        return Err(Error::Domain(format!(
            "argument {x} outside the validated range (0, {MAX_ARGUMENT}]"
        )));
    }
    Ok(())
}

/// `j_l(x)`; errors when the value is not representable as a plain f64.
pub fn spherical_j(l: usize, x: f64) -> Result<f64> {
    check_plain_domain(l, x)?;
    SphericalBesselTable::new(l, x)?.j(l).to_f64_strict("j_l", l, x)
}

/// `y_l(x)`; errors when the value is not representable as a plain f64.
pub fn spherical_y(l: usize, x: f64) -> Result<f64> {
    check_plain_domain(l, x)?;
    SphericalBesselTable::new(l, x)?.y(l).to_f64_strict("y_l", l, x)
}

/// `h2_l(x) = j_l(x) - i y_l(x)`.
pub fn spherical_h2(l: usize, x: f64) -> Result<Complex64> {
    check_plain_domain(l, x)?;
    let t = SphericalBesselTable::new(l, x)?;
    Ok(Complex64::new(t.j(l).to_f64("j_l", l, x)?, -t.y(l).to_f64_strict("y_l", l, x)?))
}

pub fn spherical_j_prime(l: usize, x: f64) -> Result<f64> {
    check_plain_domain(l, x)?;
    SphericalBesselTable::new(l + 1, x)?.j_prime(l).to_f64_strict("j_l'", l, x)
}

pub fn spherical_y_prime(l: usize, x: f64) -> Result<f64> {
    check_plain_domain(l, x)?;
    SphericalBesselTable::new(l + 1, x)?.y_prime(l).to_f64_strict("y_l'", l, x)
}

pub fn spherical_h2_prime(l: usize, x: f64) -> Result<Complex64> {
    check_plain_domain(l, x)?;
    let t = SphericalBesselTable::new(l + 1, x)?;
    Ok(Complex64::new(
        t.j_prime(l).to_f64("j_l'", l, x)?,
        -t.y_prime(l).to_f64_strict("y_l'", l, x)?,
    ))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_forms_at_low_order() {
        let x = 0.7;
        assert_relative_eq!(spherical_j(0, x).unwrap(), x.sin() / x, max_relative = 1e-14);
        assert_relative_eq!(
            spherical_j(1, x).unwrap(),
            x.sin() / (x * x) - x.cos() / x,
            max_relative = 1e-13
        );
        assert_relative_eq!(spherical_y(0, x).unwrap(), -x.cos() / x, max_relative = 1e-14);
        assert_relative_eq!(
            spherical_y(1, x).unwrap(),
            -x.cos() / (x * x) - x.sin() / x,
            max_relative = 1e-14
        );
    }

    #[test]
    fn matches_frozen_high_precision_values() {
        // 50-digit reference values.
        assert_relative_eq!(
            spherical_j(50, 30.0).unwrap(),
            2.690163718573531612e-9,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            spherical_j(40, 25.0).unwrap(),
            2.452742624193580515e-7,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            spherical_y(40, 25.0).unwrap(),
            -2560.516971797338372,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            spherical_j(3, 0.1).unwrap(),
            9.5185197208655686299e-6,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            spherical_y(3, 0.1).unwrap(),
            -150150.12520807297013,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            spherical_j(7, 100.0).unwrap(),
            0.0097006298438983563051,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            spherical_j(150, 100.0).unwrap(),
            2.1005620335865087921e-17,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            spherical_j(512, 200.0).unwrap(),
            2.6611385936777763658e-153,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            spherical_y(60, 30.0).unwrap(),
            -27525532564.854049631,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            spherical_j(1, 1e-4).unwrap(),
            3.33333333000000000119e-5,
            max_relative = 1e-13
        );
    }

    #[test]
    fn derivative_matches_frozen_values() {
        assert_relative_eq!(
            spherical_j_prime(10, 12.0).unwrap(),
            0.003794622054509596251554,
            max_relative = 1e-11
        );
        assert_relative_eq!(
            spherical_y_prime(10, 12.0).unwrap(),
            0.06366179451202419718542,
            max_relative = 1e-11
        );
        let h2p = spherical_h2_prime(10, 12.0).unwrap();
        assert_relative_eq!(h2p.re, 0.003794622054509596, max_relative = 1e-11);
        assert_relative_eq!(h2p.im, -0.06366179451202420, max_relative = 1e-11);
    }

    #[test]
    fn hankel_combines_j_and_y() {
        let h = spherical_h2(40, 25.0).unwrap();
        assert_relative_eq!(h.re, 2.452742624193580515e-7, max_relative = 1e-12);
        assert_relative_eq!(h.im, 2560.516971797338372, max_relative = 1e-12);
    }

    #[test]
    fn plain_api_fails_loudly_outside_f64_range() {
        // j_512(0.5) ~ 6.3e-1477 underflows f64: must error, not return 0.
        assert!(matches!(spherical_j(512, 0.5), Err(Error::Range { .. })));
        // y_200(2) ~ -1.6e373 overflows f64.
        assert!(matches!(spherical_y(200, 2.0), Err(Error::Range { .. })));
        assert!(matches!(spherical_h2(200, 2.0), Err(Error::Range { .. })));
    }

    #[test]
    fn plain_api_rejects_out_of_domain_arguments() {
        assert!(spherical_j(0, 0.0).is_err());
        assert!(spherical_j(0, -1.0).is_err());
        assert!(spherical_j(MAX_ORDER + 1, 1.0).is_err());
        assert!(spherical_j(3, MAX_ARGUMENT * 2.0).is_err());
        assert!(SphericalBesselTable::new(8, f64::NAN).is_err());
    }

    #[test]
    fn scaled_product_reaches_far_past_f64_range() {
        // j_200(2) ~ 7.9e-377 and y_200(2) ~ -1.6e373 are unrepresentable, yet
        // their product is an ordinary number.
        let t = SphericalBesselTable::new(200, 2.0).unwrap();
        let p = (t.j(200) * t.y(200)).to_f64("j*y", 200, 2.0).unwrap();
        assert_relative_eq!(p, -0.0012469448327749330202, max_relative = 1e-12);
    }

    #[test]
    fn scaled_product_agrees_with_plain_path_in_range() {
        for &(l, x) in &[(5usize, 3.0), (30, 40.0), (80, 100.0), (140, 150.0), (3, 0.2)] {
            let t = SphericalBesselTable::new(l, x).unwrap();
            let scaled = (t.j(l) * t.y(l)).to_f64("j*y", l, x).unwrap();
            let plain = spherical_j(l, x).unwrap() * spherical_y(l, x).unwrap();
            assert_relative_eq!(scaled, plain, max_relative = 1e-10);
        }
    }

    #[test]
    fn wronskian_holds_across_orders_and_arguments() {
        // j_l y_l' - j_l' y_l = 1/x^2, in scaled arithmetic.
        for &x in &[0.1, 1.0, 10.0, 100.0] {
            let t = SphericalBesselTable::new(201, x).unwrap();
            for l in 0..=200 {
                let w = t.j(l) * t.y_prime(l) - t.j_prime(l) * t.y(l);
                let w = w.to_f64("wronskian", l, x).unwrap();
                assert_relative_eq!(w * x * x, 1.0, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn scaled_subtraction_handles_mixed_scales() {
        let a = Scaled::new(2.0, 10.0);
        let b = Scaled::new(1.0, 8.0);
        let d = a - b;
        let want = 2.0 * 10f64.exp() - 1.0 * 8f64.exp();
        assert_relative_eq!(d.to_f64("d", 0, 1.0).unwrap(), want, max_relative = 1e-14);
        assert_eq!(Scaled::ZERO - Scaled::ZERO, Scaled::ZERO);
    }

    #[test]
    fn h2_scaled_reconstructs_for_in_range_orders() {
        let t = SphericalBesselTable::new(40, 25.0).unwrap();
        let h = t.h2_scaled(40).to_complex("h2", 40, 25.0).unwrap();
        assert_relative_eq!(h.im, 2560.516971797338372, max_relative = 1e-12);
    }
}
