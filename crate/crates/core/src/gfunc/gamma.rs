use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

use super::{GfuncError, Result};

// Lanczos-type approximation (Pugh 2004, r = 10.900511, 11 terms); relative
// accuracy close to machine epsilon on Re(x) >= 0.5, real or complex.
const LANCZOS_R: f64 = 10.900511;
const LANCZOS_DK: [f64; 11] = [
    2.48574089138753565546e-5,
    1.05142378581721974210,
    -3.45687097222016235469,
    4.51227709466894823700,
    -2.98285225323576655721,
    1.05639711577126713077,
    -1.95428773191645869583e-1,
    1.70970543404441224307e-2,
    -5.71926117404305781283e-4,
    4.63399473359905636708e-6,
    -2.71994908488607703910e-9,
];
/// ln(2·sqrt(e/π))
const LN_2_SQRT_E_OVER_PI: f64 = 0.620_782_237_635_245_222_345_518_445_781_647_2;
const LN_PI: f64 = 1.144_729_885_849_400_174_143_427_351_353_058_7;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082_402_4;

/// `ln|Γ(x)|` together with the sign of `Γ(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LnGamma {
    pub ln_abs: f64,
    pub sign: f64,
}

impl LnGamma {
    pub fn value(&self) -> f64 {
        self.sign * self.ln_abs.exp()
    }
}

/// Log-gamma of a real argument with sign tracking.
///
/// Fails with [`GfuncError::Pole`] at non-positive integers.
pub fn ln_gamma(x: f64) -> Result<LnGamma> {
    if x.is_nan() {
        return Err(GfuncError::InvalidParams("ln_gamma(NaN)".into()));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(GfuncError::Pole(x));
    }
    if x < 0.5 {
        let s = sin_pi(x);
        let rest = ln_gamma_positive(1.0 - x);
        return Ok(LnGamma {
            ln_abs: LN_PI - s.abs().ln() - rest,
            sign: s.signum(),
        });
    }
    Ok(LnGamma {
        ln_abs: ln_gamma_positive(x),
        sign: 1.0,
    })
}

fn ln_gamma_positive(x: f64) -> f64 {
    debug_assert!(x >= 0.5);
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    // The Lanczos sum loses relative accuracy where ln Γ vanishes.
    if (x - 1.0).abs() < 0.2 {
        return ln_gamma_1p(x - 1.0);
    }
    if (x - 2.0).abs() < 0.2 {
        return (x - 1.0).ln() + ln_gamma_1p(x - 2.0);
    }
    let s = LANCZOS_DK
        .iter()
        .enumerate()
        .skip(1)
        .fold(LANCZOS_DK[0], |s, (i, d)| s + d / (x + i as f64 - 1.0));
    s.ln() + LN_2_SQRT_E_OVER_PI + (x - 0.5) * ((x - 0.5 + LANCZOS_R) / std::f64::consts::E).ln()
}

/// `ln Γ(1 + e)` for small `|e|` from the zeta-series
/// `-γe + Σ_{k≥2} ζ(k)(-e)^k / k`.
fn ln_gamma_1p(e: f64) -> f64 {
    let zetas = zeta_table();
    let mut sum = -EULER_GAMMA * e;
    let mut pow = -e;
    for (k, z) in zetas.iter().enumerate().skip(2) {
        pow *= -e;
        let t = z * pow / k as f64;
        sum += t;
        if t.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// ζ(k) for k = 0..40 (entries 0 and 1 unused) by Euler–Maclaurin summation.
fn zeta_table() -> &'static [f64; 40] {
    static TABLE: OnceLock<[f64; 40]> = OnceLock::new();
    TABLE.get_or_init(|| {
        const B2J: [f64; 6] = [
            1.0 / 6.0,
            -1.0 / 30.0,
            1.0 / 42.0,
            -1.0 / 30.0,
            5.0 / 66.0,
            -691.0 / 2730.0,
        ];
        let n = 10.0_f64;
        let mut out = [0.0; 40];
        for (k, slot) in out.iter_mut().enumerate().skip(2) {
            let s = k as f64;
            let mut z: f64 = (1..10).map(|i| (i as f64).powf(-s)).sum();
            z += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
            // B_{2j}/(2j)! · s(s+1)…(s+2j-2) · N^{-s-2j+1}
            let mut rising = s;
            let mut fact = 2.0;
            for (j, b) in B2J.iter().enumerate() {
                let jj = (j + 1) as f64;
                z += b / fact * rising * n.powf(-s - 2.0 * jj + 1.0);
                rising *= (s + 2.0 * jj - 1.0) * (s + 2.0 * jj);
                fact *= (2.0 * jj + 1.0) * (2.0 * jj + 2.0);
            }
            *slot = z;
        }
        out
    })
}

/// `sin(πx)` with exact argument reduction.
fn sin_pi(x: f64) -> f64 {
    let r = x % 2.0;
    let r = if r < 0.0 { r + 2.0 } else { r };
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    if r <= 0.5 {
        (PI * r).sin()
    } else if r <= 1.5 {
        -(PI * (r - 1.0)).sin()
    } else {
        (PI * (r - 2.0)).sin()
    }
}

/// Principal-branch-free log-gamma of a complex argument: the imaginary part
/// may differ from the continuous branch by multiples of 2π, which is
/// harmless once exponentiated.
///
/// At a pole the real part is `+inf`.
pub fn ln_gamma_complex(w: Complex64) -> Complex64 {
    if w.re < 0.5 {
        let s = (w * PI).sin();
        if s.norm() == 0.0 {
            return Complex64::new(f64::INFINITY, 0.0);
        }
        return Complex64::new(LN_PI, 0.0) - s.ln() - ln_gamma_complex(Complex64::new(1.0, 0.0) - w);
    }
    let mut s = Complex64::new(LANCZOS_DK[0], 0.0);
    for (i, d) in LANCZOS_DK.iter().enumerate().skip(1) {
        s += *d / (w + (i as f64 - 1.0));
    }
    let shifted = (w - 0.5 + LANCZOS_R) / std::f64::consts::E;
    s.ln() + LN_2_SQRT_E_OVER_PI + (w - 0.5) * shifted.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Stirling series after shifting the argument above 40; independent of
    /// the Lanczos path.
    fn stirling_oracle(x: f64) -> f64 {
        let mut shift = 0.0;
        let mut y = x;
        while y < 40.0 {
            shift += y.abs().ln();
            y += 1.0;
        }
        let inv = 1.0 / y;
        let inv2 = inv * inv;
        let series = inv
            * (1.0 / 12.0
                - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
        (y - 0.5) * y.ln() - y + 0.5 * (2.0 * PI).ln() + series - shift
    }

    #[test]
    fn known_values() {
        assert_eq!(ln_gamma(1.0).unwrap().ln_abs, 0.0);
        assert_eq!(ln_gamma(2.0).unwrap().ln_abs, 0.0);
        let half = ln_gamma(0.5).unwrap();
        assert!((half.ln_abs - 0.572_364_942_924_700_087_1).abs() < 1e-15);
        assert!((ln_gamma(5.0).unwrap().ln_abs - 24f64.ln()).abs() < 1e-14);
        // Γ(-0.5) = -2√π
        let neg = ln_gamma(-0.5).unwrap();
        assert_eq!(neg.sign, -1.0);
        assert!((neg.value() + 2.0 * PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn poles() {
        for x in [0.0, -1.0, -7.0] {
            assert!(matches!(ln_gamma(x), Err(GfuncError::Pole(_))));
        }
    }

    #[test]
    fn near_unit_zeros_keep_relative_accuracy() {
        // 40-digit reference values at the binary64 arguments
        let cases = [
            (1.0 + 7.450_580_596_923_828e-9, -4.300_591_787_499_755_337_9e-9),
            (1.999_999, -4.227_840_125_965_853_701_9e-7),
            (1.1, -0.049_872_441_259_839_724_148),
            (0.9, 0.066_376_239_734_742_971_189),
            (2.15, 0.070_455_733_704_111_815_129),
            (1.85, -0.055_923_813_019_657_275_473),
        ];
        for (x, want) in cases {
            let got = ln_gamma(x).unwrap().ln_abs;
            assert!(((got - want) / want).abs() < 1e-12, "{x}: {got} vs {want}");
        }
    }

    #[test]
    fn complex_matches_real_on_axis() {
        for x in [0.3, 0.7, 1.5, 3.25, 12.0, -2.5] {
            let c = ln_gamma_complex(Complex64::new(x, 0.0));
            let r = ln_gamma(x).unwrap();
            assert!((c.re - r.ln_abs).abs() < 1e-12, "{x}");
        }
        // |Γ(1/2 + it)|² = π / cosh(πt)
        let t = 3.0;
        let c = ln_gamma_complex(Complex64::new(0.5, t));
        assert!((2.0 * c.re - (PI / (PI * t).cosh()).ln()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn positive_axis_relative_error(x in 0.05f64..50.0) {
            let want = stirling_oracle(x);
            let got = ln_gamma(x).unwrap().ln_abs;
            let scale = want.abs().max(1.0);
            prop_assert!(((got - want) / scale).abs() < 1e-12, "x={} got={} want={}", x, got, want);
        }

        #[test]
        fn negative_axis(x in -50.0f64..0.0) {
            prop_assume!((x - x.round()).abs() > 1e-3);
            let got = ln_gamma(x).unwrap();
            let want = stirling_oracle(x);
            let scale = want.abs().max(1.0);
            prop_assert!(((got.ln_abs - want) / scale).abs() < 1e-12);
            // sign of Γ alternates between consecutive negative integers
            let expected_sign = if (x.floor() as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            prop_assert_eq!(got.sign, expected_sign);
        }
    }
}
