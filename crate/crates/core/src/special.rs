//! Special functions needed by the radial integrals: Gamma, unit sphere/ball
//! measures, Bessel J0 and sinc.

use crate::scalar::Scalar;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function via the Lanczos approximation (g = 7, n = 9) with reflection.
pub fn gamma<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x < half {
        let pi = T::PI();
        return pi / ((pi * x).sin() * gamma(T::one() - x));
    }
    let x = x - T::one();
    let mut a = T::lit(LANCZOS_COEF[0]);
    let t = x + T::lit(LANCZOS_G) + half;
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a = a + T::lit(c) / (x + T::from_usize_lossy(i));
    }
    (T::lit(2.0) * T::PI()).sqrt() * t.powf(x + half) * (-t).exp() * a
}

/// Surface area of the unit sphere S^{N-1} in R^N: 2 pi^{N/2} / Gamma(N/2).
pub fn unit_sphere_area<T: Scalar>(dim: usize) -> T {
    match dim {
        1 => T::lit(2.0),
        2 => T::lit(2.0) * T::PI(),
        3 => T::lit(4.0) * T::PI(),
        _ => {
            let half_n = T::from_usize_lossy(dim) / T::lit(2.0);
            T::lit(2.0) * T::PI().powf(half_n) / gamma(half_n)
        }
    }
}

/// Volume of the unit ball in R^N.
pub fn unit_ball_volume<T: Scalar>(dim: usize) -> T {
    unit_sphere_area::<T>(dim) / T::from_usize_lossy(dim)
}

/// sin(x)/x, continuous at 0.
pub fn sinc<T: Scalar>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        let x2 = x * x;
        T::one() - x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0)
    } else {
        x.sin() / x
    }
}

/// Bessel function of the first kind, order zero.
///
/// Power series below |x| = 17, Hankel asymptotic expansion above.
pub fn bessel_j0<T: Scalar>(x: T) -> T {
    let x = x.abs();
    if x < T::lit(17.0) {
        let q = x * x / T::lit(4.0);
        let mut term = T::one();
        let mut sum = T::one();
        let mut k = 1usize;
        loop {
            let kk = T::from_usize_lossy(k);
            term = -term * q / (kk * kk);
            sum = sum + term;
            if term.abs() <= T::epsilon() * T::lit(1e-3) * sum.abs().max(T::one()) || k > 200 {
                break;
            }
            k += 1;
        }
        sum
    } else {
        let eight_x = T::lit(8.0) * x;
        let mut p = T::one();
        let mut q = T::zero();
        let mut t = T::one();
        let mut prev = T::infinity();
        for k in 1..200usize {
            let odd = T::from_usize_lossy(2 * k - 1);
            t = t * (-(odd * odd)) / (T::from_usize_lossy(k) * eight_x);
            if t.abs() >= prev || t.abs() < T::epsilon() * T::lit(1e-3) {
                break;
            }
            prev = t.abs();
            // sign pattern: P takes (-1)^{k/2} t_k on even k, Q takes (-1)^{(k-1)/2} t_k on odd k
            match k % 4 {
                0 => p = p + t,
                1 => q = q + t,
                2 => p = p - t,
                _ => q = q - t,
            }
        }
        let chi = x - T::FRAC_PI_4();
        (T::lit(2.0) / (T::PI() * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_known_values() {
        assert!((gamma(1.0_f64) - 1.0).abs() < 1e-13);
        assert!((gamma(5.0_f64) - 24.0).abs() < 1e-11);
        assert!((gamma(0.5_f64) - std::f64::consts::PI.sqrt()).abs() < 1e-13);
        assert!((gamma(1.5_f64) - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn sphere_and_ball() {
        use std::f64::consts::PI;
        assert!((unit_sphere_area::<f64>(4) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((unit_ball_volume::<f64>(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume::<f64>(2) - PI).abs() < 1e-14);
        assert_eq!(unit_ball_volume::<f64>(1), 2.0);
    }

    // Reference values of J0 from standard tables.
    #[test]
    fn j0_reference_points() {
        let cases = [
            (0.0, 1.0),
            (1.0, 0.765_197_686_557_966_6),
            (2.404_825_557_695_773, 0.0),
            (5.0, -0.177_596_771_314_338_3),
            (10.0, -0.245_935_764_451_348_3),
            (16.5, -0.196_380_692_936_861),
            (17.5, -0.103_110_398_228_686_08),
            (30.0, -0.086_367_983_581_040_23),
            (100.0, 0.019_985_850_304_223_33),
        ];
        for (x, want) in cases {
            let got: f64 = bessel_j0(x);
            assert!((got - want).abs() < 5e-10, "J0({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn j0_branches_agree_at_switch() {
        let below = bessel_j0(17.0_f64 - 1e-9);
        let above = bessel_j0(17.0_f64 + 1e-9);
        assert!((below - above).abs() < 1e-9);
    }

    #[test]
    fn sinc_limit() {
        assert_eq!(sinc(0.0_f64), 1.0);
        assert!((sinc(1e-5_f64) - (1e-5_f64).sin() / 1e-5).abs() < 1e-15);
    }
}
