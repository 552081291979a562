//! Special functions and quadrature rules used by the expectation calculus.

use std::sync::OnceLock;

/// Dawson's integral `D(x) = exp(-x^2) * int_0^x exp(t^2) dt`.
///
/// Power series near the origin, Rybicki's sampling formula elsewhere. The
/// sampling step is small enough that the result is accurate to roughly
/// machine precision.
pub fn dawson(x: f64) -> f64 {
    const H: f64 = 0.2;
    const NMAX: usize = 18;
    if x.abs() < 0.2 {
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -2.0 * x2 / (2.0 * n + 1.0);
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                return sum;
            }
        }
    }
    static COEF: OnceLock<[f64; NMAX]> = OnceLock::new();
    let c = COEF.get_or_init(|| {
        let mut c = [0.0; NMAX];
        for (i, ci) in c.iter_mut().enumerate() {
            let a = (2.0 * i as f64 + 1.0) * H;
            *ci = (-a * a).exp();
        }
        c
    });
    let xx = x.abs();
    let n0 = 2.0 * (0.5 * xx / H).round();
    let xp = xx - n0 * H;
    let mut e1 = (2.0 * xp * H).exp();
    let e2 = e1 * e1;
    let mut d1 = n0 + 1.0;
    let mut d2 = d1 - 2.0;
    let mut sum = 0.0;
    for ci in c.iter() {
        sum += ci * (e1 / d1 + 1.0 / (d2 * e1));
        d1 += 2.0;
        d2 -= 2.0;
        e1 *= e2;
    }
    x.signum() * std::f64::consts::FRAC_2_SQRT_PI * 0.5 * (-xp * xp).exp() * sum
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// The 32-point rule mapped to `[0, 1]`.
pub fn gl32_unit() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre(32);
        (
            x.iter().map(|xi| 0.5 * (xi + 1.0)).collect(),
            w.iter().map(|wi| 0.5 * wi).collect(),
        )
    })
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dawson_matches_reference_values() {
        // scipy.special.dawsn
        let cases = [
            (0.0, 0.0),
            (0.05, 0.04991674994050922),
            (0.19, 0.18549268702269875),
            (0.2, 0.19475103336802793),
            (0.5, 0.4244363835020223),
            (0.924138873, 0.5410442246351818),
            (1.0, 0.5380795069127684),
            (2.5, 0.22308372216743555),
            (-3.0, -0.17827103061055827),
            (10.0, 0.05025384718759854),
            (-17.3, -0.028950261969854417),
            (120.0, 0.004166811357665619),
        ];
        for (x, want) in cases {
            let got = dawson(x);
            assert!((got - want).abs() <= 1e-13 * want.abs().max(1e-3), "D({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(32);
        for k in 0..63 {
            let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k)).sum();
            let want = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((got - want).abs() < 1e-13, "k={k}: {got} vs {want}");
        }
        let (u, v) = gl32_unit();
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(u.iter().all(|&ui| ui > 0.0 && ui < 1.0));
    }

    #[test]
    fn normal_cdf_basics() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((norm_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
        assert!((norm_cdf(-2.0) - 0.022750131948179195).abs() < 1e-14);
    }
}
