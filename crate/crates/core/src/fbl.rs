//! Finite-blocklength (normal approximation) numerics.
//!
//! All functions are pure and generic over [`Scalar`]. Blocklength `m` and
//! packet size `d` are counts (symbols and bits).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gaussian tail probability `P[N(0,1) > zeta]`.
pub fn gaussian_q<T: Scalar>(zeta: T) -> Result<T> {
    if !zeta.is_finite() {
        return Err(Error::Domain(format!("gaussian_q of non-finite {zeta}")));
    }
    Ok(q_unchecked(zeta))
}

#[inline]
fn q_unchecked<T: Scalar>(zeta: T) -> T {
    T::of(0.5) * (zeta / T::of(std::f64::consts::SQRT_2)).erfc()
}

// Acklam's rational approximation of the standard normal quantile.
const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

fn normal_quantile_guess(p: f64) -> f64 {
    const P_LOW: f64 = 0.02425;
    let (a, b, c, d) = (ACKLAM_A, ACKLAM_B, ACKLAM_C, ACKLAM_D);
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    }
}

/// Inverse of [`gaussian_q`] on the open unit interval.
pub fn gaussian_q_inv<T: Scalar>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::Domain(format!("gaussian_q_inv needs p in (0,1), got {p}")));
    }
    // Q^{-1}(p) = -Phi^{-1}(p); polish the rational guess with Halley steps on Phi.
    let two_pi = T::of(2.0 * std::f64::consts::PI);
    let mut z = T::of(normal_quantile_guess(p.as_f64()));
    for _ in 0..3 {
        let e = q_unchecked(-z) - p;
        if e == T::zero() {
            break;
        }
        let u = e * two_pi.sqrt() * (z * z / T::of(2.0)).exp();
        z = z - u / (T::one() + z * u / T::of(2.0));
    }
    Ok(-z)
}

/// Channel dispersion `1 - (1+gamma)^-2`, written as `gamma(2+gamma)/(1+gamma)^2`
/// so small SINRs do not cancel.
pub fn channel_dispersion<T: Scalar>(gamma: T) -> Result<T> {
    check_sinr(gamma)?;
    let one_plus = T::one() + gamma;
    Ok(gamma * (T::of(2.0) + gamma) / (one_plus * one_plus))
}

/// Normalized gap between the Shannon rate and the required rate `d/m`,
/// scaled by the dispersion: `ln2 * sqrt(m/V) * (log2(1+gamma) - d/m)`.
pub fn psi<T: Scalar>(gamma: T, m: u32, d: u32) -> Result<T> {
    check_blocklength(m, d)?;
    let v = channel_dispersion(gamma)?;
    if v <= T::zero() {
        return Err(Error::SingularDispersion);
    }
    let m_t = T::from_u32(m).unwrap();
    let d_t = T::from_u32(d).unwrap();
    let ln2 = T::of(std::f64::consts::LN_2);
    Ok(ln2 * (m_t / v).sqrt() * (gamma.ln_1p() / ln2 - d_t / m_t))
}

/// Decoding error probability `Q(psi(gamma, m, d))`; zero SINR decodes nothing.
pub fn decoding_error<T: Scalar>(gamma: T, m: u32, d: u32) -> Result<T> {
    match psi(gamma, m, d) {
        Ok(x) => Ok(q_unchecked(x)),
        Err(Error::SingularDispersion) => Ok(T::one()),
        Err(e) => Err(e),
    }
}

/// Achievable rate in bits per channel use at target error `epsilon`, clamped at 0.
pub fn achievable_rate<T: Scalar>(gamma: T, m: u32, epsilon: T) -> Result<T> {
    if !(epsilon > T::zero() && epsilon < T::one()) {
        return Err(Error::Domain(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    check_blocklength(m, 1)?;
    let v = channel_dispersion(gamma)?;
    if v <= T::zero() {
        return Ok(T::zero());
    }
    let qinv = gaussian_q_inv(epsilon)?;
    Ok(rate_from_gap(gamma, v, m, qinv))
}

fn rate_from_gap<T: Scalar>(gamma: T, v: T, m: u32, gap: T) -> T {
    let ln2 = T::of(std::f64::consts::LN_2);
    let m_t = T::from_u32(m).unwrap();
    let r = gamma.ln_1p() / ln2 - (v / m_t).sqrt() * gap / ln2;
    r.max(T::zero())
}

fn check_sinr<T: Scalar>(gamma: T) -> Result<()> {
    if gamma >= T::zero() && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("SINR must be finite and >= 0, got {gamma}")))
    }
}

fn check_blocklength(m: u32, d: u32) -> Result<()> {
    if m == 0 || d == 0 {
        return Err(Error::Domain(format!("blocklength and packet size must be >= 1 (M={m}, D={d})")));
    }
    Ok(())
}

/// One user's finite-blocklength operating point for a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FblPoint<T> {
    pub gamma: T,
    pub blocklength: u32,
    pub bits: u32,
    pub epsilon: T,
    pub rate: T,
}

impl<T: Scalar> FblPoint<T> {
    /// Error from the normal approximation, and the rate at that same error.
    ///
    /// The rate is evaluated through `psi` directly rather than through
    /// `Q^{-1}(epsilon)`, which would be undefined once `epsilon` underflows.
    pub fn evaluate(gamma: T, blocklength: u32, bits: u32) -> Result<Self> {
        check_sinr(gamma)?;
        let (epsilon, rate) = match psi(gamma, blocklength, bits) {
            Ok(x) => {
                let v = channel_dispersion(gamma)?;
                (q_unchecked(x), rate_from_gap(gamma, v, blocklength, x))
            }
            Err(Error::SingularDispersion) => (T::one(), T::zero()),
            Err(e) => return Err(e),
        };
        Ok(Self { gamma, blocklength, bits, epsilon, rate })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn q_at_zero_is_half() {
        assert_eq!(gaussian_q(0.0f64).unwrap(), 0.5);
    }

    #[test]
    fn q_reflection() {
        let x = 1.7f64;
        assert_relative_eq!(gaussian_q(-x).unwrap(), 1.0 - gaussian_q(x).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn q_known_value() {
        // mpmath quadrature of the Gaussian density at 40 digits.
        assert_relative_eq!(gaussian_q(1.2816f64).unwrap(), 0.099_991_500_097_675_17, max_relative = 1e-12);
        assert!((gaussian_q(1.2816f64).unwrap() - 0.1).abs() < 1e-4);
    }

    #[test]
    fn q_rejects_non_finite() {
        assert!(matches!(gaussian_q(f64::NAN), Err(Error::Domain(_))));
        assert!(gaussian_q(f64::INFINITY).is_err());
    }

    #[test]
    fn q_inv_values() {
        assert_eq!(gaussian_q_inv(0.5f64).unwrap(), 0.0);
        let p = gaussian_q(2.0f64).unwrap();
        assert!((gaussian_q_inv(p).unwrap() - 2.0).abs() < 1e-9);
        assert_relative_eq!(gaussian_q_inv(0.1f64).unwrap(), 1.281_551_565_544_600_5, max_relative = 1e-12);
        assert_relative_eq!(gaussian_q_inv(1e-3f64).unwrap(), 3.090_232_306_167_813_5, max_relative = 1e-12);
    }

    #[test]
    fn q_inv_domain() {
        for p in [0.0f64, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(gaussian_q_inv(p).is_err(), "p={p}");
        }
    }

    #[test]
    fn q_inv_f32_is_usable() {
        let x = gaussian_q_inv(0.1f32).unwrap();
        assert!((x - 1.281_551_6).abs() < 1e-5);
    }

    #[test]
    fn dispersion_values() {
        assert_eq!(channel_dispersion(0.0f64).unwrap(), 0.0);
        assert_eq!(channel_dispersion(1.0f64).unwrap(), 0.75);
        assert!((channel_dispersion(1e6f64).unwrap() - 1.0).abs() < 1e-9);
        assert!(channel_dispersion(-1.0f64).is_err());
    }

    #[test]
    fn psi_values() {
        // mpmath: ln2 * sqrt(100/0.75) * 0.5
        assert_relative_eq!(psi(1.0f64, 100, 50).unwrap(), 4.001_887_112_843_146, max_relative = 1e-12);
        assert!(psi(1.0f64, 100, 200).unwrap() < 0.0);
        // log2(1+gamma) == D/M
        assert!(psi(3.0f64, 100, 200).unwrap().abs() < 1e-12);
        assert!(matches!(psi(0.0f64, 100, 50), Err(Error::SingularDispersion)));
        assert!(psi(1.0f64, 0, 50).is_err());
    }

    #[test]
    fn decoding_error_values() {
        assert_relative_eq!(decoding_error(3.0f64, 100, 200).unwrap(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(
            decoding_error(1.0f64, 100, 50).unwrap(),
            3.141_964_004_150_747e-5,
            max_relative = 1e-10
        );
        assert_eq!(decoding_error(0.0f64, 100, 50).unwrap(), 1.0);
    }

    #[test]
    fn rate_values() {
        assert_relative_eq!(achievable_rate(3.0f64, 100, 0.5).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(achievable_rate(1.0f64, 100, 1e-3).unwrap(), 0.613_903_113_827_172, max_relative = 1e-10);
        // The dispersion penalty at M = 1e9 is still 1.22e-4; 4e9 brings it under 1e-4.
        let gap = 1.0 - achievable_rate(1.0f64, 1_000_000_000, 1e-3).unwrap();
        assert!(gap > 0.0 && gap < 1.3e-4);
        assert!((achievable_rate(1.0f64, 4_000_000_000, 1e-3).unwrap() - 1.0).abs() < 1e-4);
        assert!(achievable_rate(1.0f64, 100, 0.0).is_err());
        assert!(achievable_rate(1.0f64, 100, 1.0).is_err());
        assert_eq!(achievable_rate(0.0f64, 100, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn rate_clamps_at_zero() {
        assert_eq!(achievable_rate(0.01f64, 1, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn point_at_zero_sinr() {
        let p = FblPoint::evaluate(0.0f64, 100, 50).unwrap();
        assert_eq!((p.epsilon, p.rate), (1.0, 0.0));
    }

    #[test]
    fn point_rate_is_required_rate() {
        let p = FblPoint::evaluate(1.0f64, 100, 50).unwrap();
        assert_relative_eq!(p.rate, 0.5, max_relative = 1e-12);
        // Deep in the tail epsilon underflows but the rate is still defined.
        let p = FblPoint::evaluate(1e12f64, 100, 50).unwrap();
        assert_eq!(p.epsilon, 0.0);
        assert_relative_eq!(p.rate, 0.5, max_relative = 1e-9);
    }
}
