//! The dark-pool fill law `r = A exp(-k_c c_d)` and the expectations of
//! functions of `min(l, r)` that the solvers need.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::params::DarkPoolSpec;
use super::special::{dawson, gl32_unit};
use crate::error::{invalid, Result};

/// Mean sizes beyond which the exponential tail is dropped from quadratures.
const S_MAX: f64 = 40.0;

/// Law of the available liquidity `r` at a given fee: a shift plus an exponential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FillLaw {
    pub shift: f64,
    pub mean: f64,
}

impl FillLaw {
    pub fn new(pool: &DarkPoolSpec, k_c: f64, c_d: f64) -> Self {
        let scale = (-k_c * c_d).exp();
        Self { shift: pool.support_eps * scale, mean: pool.size_mean * scale }
    }

    /// `P(r <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.shift || self.mean <= 0.0 {
            return if self.mean <= 0.0 && x >= self.shift { 1.0 } else { 0.0 };
        }
        -(-(x - self.shift) / self.mean).exp_m1()
    }

    /// `P(r > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        if x < self.shift {
            1.0
        } else if self.mean <= 0.0 {
            0.0
        } else {
            (-(x - self.shift) / self.mean).exp()
        }
    }

    /// Inverse CDF on `[0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        self.shift - self.mean * (-p).ln_1p()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.mean <= 0.0 {
            return self.shift;
        }
        let e = Exp::new(1.0).expect("unit rate");
        self.shift + self.mean * e.sample(rng)
    }

    /// `min(ell, r)` for a fresh draw of `r`.
    pub fn sample_fill<R: Rng + ?Sized>(&self, ell: f64, rng: &mut R) -> f64 {
        if ell <= 0.0 {
            return 0.0;
        }
        ell.min(self.sample(rng))
    }

    /// Fill sizes `min(ell, r)` with probabilities: Gauss-Legendre nodes of
    /// `rule` (on `[0, 1]`) in the exponential variable `s = (r - shift) / mean`
    /// over `{r < ell}`, truncated at `S_MAX` mean sizes, and the atom at `ell`.
    pub fn fill_nodes(&self, ell: f64, rule: &(Vec<f64>, Vec<f64>)) -> Vec<(f64, f64)> {
        if ell <= self.shift {
            return vec![(ell, 1.0)];
        }
        if self.mean <= 0.0 {
            return vec![(self.shift, 1.0)];
        }
        let s_end = (ell - self.shift) / self.mean;
        let span = s_end.min(S_MAX);
        let mut nodes: Vec<(f64, f64)> = rule
            .0
            .iter()
            .zip(&rule.1)
            .map(|(u, w)| {
                let s = span * u;
                ((self.shift + self.mean * s).min(ell), span * w * (-s).exp())
            })
            .collect();
        // Mass beyond the truncation joins the atom.
        nodes.push((ell, (-span).exp()));
        nodes
    }

    /// `E[g(min(ell, r))]` with the 32-point rule of [`FillLaw::fill_nodes`].
    pub fn expect_min<G: Fn(f64) -> f64>(&self, ell: f64, g: G) -> f64 {
        self.fill_nodes(ell, gl32_unit()).into_iter().map(|(m, w)| w * g(m)).sum()
    }

    /// `E[min(ell, r)]` in closed form.
    pub fn mean_fill(&self, ell: f64) -> f64 {
        let c = ell.min(self.shift);
        if ell <= self.shift {
            return c;
        }
        let l = ell - self.shift;
        c + self.mean * -(-l / self.mean).exp_m1()
    }

    /// `E[m (2q - m)]` with `m = min(ell, r)`, in closed form.
    pub fn linear_moment(&self, ell: f64, q: f64) -> f64 {
        let a = self.shift;
        let c = ell.min(a);
        let mut v = 2.0 * q * c - c * c;
        if ell > a {
            let b = self.mean;
            let l = ell - a;
            let e1 = -(-l / b).exp_m1();
            v += 2.0 * (q - a) * b * e1 - 2.0 * b * b * e1 + 2.0 * b * l * (-l / b).exp();
        }
        v
    }

    /// `E[exp(-c m (2q - m))]` with `m = min(ell, r)` and `c = rho * alpha`, in
    /// closed form through Dawson's integral.
    pub fn exponential_moment(&self, ell: f64, q: f64, c: f64) -> f64 {
        let g = |x: f64| (-c * x * (2.0 * q - x)).exp();
        let a = self.shift;
        if ell <= a {
            return g(ell);
        }
        if c * ell * 2.0 * q.abs().max(ell) < 1e-8 {
            return self.expect_min(ell, g);
        }
        let b = self.mean;
        let tail = g(ell) * self.survival(ell);
        let sc = c.sqrt();
        let x0 = (2.0 * c * q + 1.0 / b) / (2.0 * c);
        let expo = |x: f64| -c * x * (2.0 * q - x) - (x - a) / b;
        let body = (expo(a).exp() * dawson(sc * (x0 - a)) - expo(ell).exp() * dawson(sc * (x0 - ell)))
            / (b * sc);
        tail + body
    }
}

/// `P(r <= x) = F_A(x exp(k_c c_d))`.
pub fn dark_liquidity_cdf(pool: &DarkPoolSpec, k_c: f64, c_d: f64, x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(invalid(format!("liquidity CDF evaluated at negative size {x}")));
    }
    Ok(FillLaw::new(pool, k_c, c_d).cdf(x))
}

/// One draw of `min(ell, A exp(-k_c c_d))`.
pub fn sample_dark_fill<R: Rng + ?Sized>(pool: &DarkPoolSpec, k_c: f64, ell: f64, c_d: f64, rng: &mut R) -> f64 {
    FillLaw::new(pool, k_c, c_d).sample_fill(ell, rng)
}

fn check_domain(ell: f64, q: f64) -> Result<()> {
    if ell < 0.0 || ell.is_nan() {
        return Err(invalid(format!("posted volume must be nonnegative, got {ell}")));
    }
    if q < ell {
        return Err(invalid(format!("inventory {q} below posted volume {ell}")));
    }
    Ok(())
}

/// `E[min(ell, r)(2q - min(ell, r))]`.
pub fn exp_min_linear_moment(pool: &DarkPoolSpec, k_c: f64, ell: f64, c_d: f64, q: f64) -> Result<f64> {
    check_domain(ell, q)?;
    Ok(FillLaw::new(pool, k_c, c_d).linear_moment(ell, q))
}

/// `E[exp(-rho alpha min(ell, r)(2q - min(ell, r)))]`.
pub fn exp_min_exponential_moment(
    pool: &DarkPoolSpec,
    k_c: f64,
    ell: f64,
    c_d: f64,
    q: f64,
    rho: f64,
    alpha: f64,
) -> Result<f64> {
    check_domain(ell, q)?;
    Ok(FillLaw::new(pool, k_c, c_d).exponential_moment(ell, q, rho * alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pool(mean: f64, eps: f64) -> DarkPoolSpec {
        DarkPoolSpec { theta: 30.0, size_mean: mean, support_eps: eps }
    }

    // Composite Simpson on the density plus the tail atom; independent of
    // both the closed forms and the probability-space rule.
    fn simpson_oracle(law: &FillLaw, ell: f64, g: impl Fn(f64) -> f64) -> f64 {
        let a = law.shift;
        if ell <= a {
            return g(ell);
        }
        let n = 200_000;
        let h = (ell - a) / n as f64;
        let f = |x: f64| g(x) * (-(x - a) / law.mean).exp() / law.mean;
        let mut s = f(a) + f(ell);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0 + g(ell) * law.survival(ell)
    }

    #[test]
    fn cdf_examples() {
        let p = pool(100.0, 0.0);
        assert_eq!(dark_liquidity_cdf(&p, 100.0, 0.3, 0.0).unwrap(), 0.0);
        let v = dark_liquidity_cdf(&p, 100.0, 0.0, 100.0).unwrap();
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        let v = dark_liquidity_cdf(&p, 100.0, 0.01, 100.0).unwrap();
        assert!((v - (1.0 - (-std::f64::consts::E).exp())).abs() < 1e-14);
        assert!((v - 0.9340).abs() < 1e-4);
        assert!(dark_liquidity_cdf(&p, 100.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn closed_forms_match_simpson() {
        for &(mean, eps) in &[(0.01, 0.0), (0.3, 0.0), (100.0, 0.0), (0.05, 0.02)] {
            let law = FillLaw::new(&pool(mean, eps), 100.0, 0.004);
            for &(ell, q) in &[(0.0, 0.5), (0.004, 0.01), (0.2, 0.5), (0.5, 1.0), (1.0, 1.0)] {
                let lin = law.linear_moment(ell, q);
                let lin_o = simpson_oracle(&law, ell, |m| m * (2.0 * q - m));
                assert!((lin - lin_o).abs() < 1e-11, "linear {mean} {ell} {q}: {lin} vs {lin_o}");
                for &c in &[12.0, 0.5, 1e-10] {
                    let ex = law.exponential_moment(ell, q, c);
                    let ex_o = simpson_oracle(&law, ell, |m| (-c * m * (2.0 * q - m)).exp());
                    assert!((ex - ex_o).abs() < 1e-11, "exp {mean} {ell} {q} {c}: {ex} vs {ex_o}");
                }
                let mf = law.mean_fill(ell);
                assert!((mf - simpson_oracle(&law, ell, |m| m)).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        let law = FillLaw::new(&pool(0.01, 0.0), 100.0, 0.0);
        for &ell in &[0.001, 0.01, 0.05] {
            let a = law.expect_min(ell, |m| m * (2.0 - m));
            assert!((a - law.linear_moment(ell, 1.0)).abs() < 1e-12);
        }
        let law = FillLaw::new(&pool(100.0, 0.0), 100.0, 0.0);
        let a = law.expect_min(0.7, |m| (-12.0 * m * (2.0 - m)).exp());
        assert!((a - law.exponential_moment(0.7, 1.0, 12.0)).abs() < 1e-12);
    }

    #[test]
    fn trivial_cases() {
        let p = pool(100.0, 0.0);
        assert_eq!(exp_min_linear_moment(&p, 100.0, 0.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(exp_min_exponential_moment(&p, 100.0, 0.0, 0.0, 1.0, 300.0, 0.04).unwrap(), 1.0);
        let v = exp_min_exponential_moment(&p, 100.0, 0.5, 0.0, 1.0, 1e-14, 0.04).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!(exp_min_linear_moment(&p, 100.0, 1.0, 0.0, 0.5).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_dark_fill(&p, 100.0, 0.0, 0.0, &mut rng), 0.0);
        let f = sample_dark_fill(&p, 100.0, 0.3, 50.0, &mut rng);
        assert!(f < 1e-100);
    }

    #[test]
    fn sample_mean_matches_closed_form() {
        let p = pool(0.01, 0.0);
        let law = FillLaw::new(&p, 100.0, 0.005);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let f = sample_dark_fill(&p, 100.0, 0.01, 0.005, &mut rng);
            s += f;
            s2 += f * f;
        }
        let m = s / n as f64;
        let se = ((s2 / n as f64 - m * m) / n as f64).sqrt();
        assert!((m - law.mean_fill(0.01)).abs() < 3.0 * se, "{m} vs {}", law.mean_fill(0.01));
    }

    proptest! {
        #[test]
        fn fill_never_exceeds_posted(ell in 0.0..2.0f64, c_d in 0.0..0.01f64, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = sample_dark_fill(&pool(0.3, 0.01), 100.0, ell, c_d, &mut rng);
            prop_assert!(f <= ell && f >= 0.0);
        }

        #[test]
        fn cdf_monotone(x in 0.0..1.0f64, dx in 0.0..0.5f64, c in 0.0..0.01f64, dc in 0.0..0.01f64) {
            let p = pool(0.05, 0.0);
            let f = |x, c| dark_liquidity_cdf(&p, 100.0, c, x).unwrap();
            prop_assert!(f(x + dx, c) >= f(x, c));
            prop_assert!(f(x, c + dc) >= f(x, c));
        }

        #[test]
        fn moment_bounds(mean in 0.001..200.0f64, frac in 0.0..1.0f64, q in 0.0..1.5f64, c_d in 0.0..0.01f64) {
            let ell = frac * q;
            let p = pool(mean, 0.0);
            let lin = exp_min_linear_moment(&p, 100.0, ell, c_d, q).unwrap();
            prop_assert!(lin >= -1e-15 && lin <= q * q + 1e-12);
            let ex = exp_min_exponential_moment(&p, 100.0, ell, c_d, q, 300.0, 0.04).unwrap();
            prop_assert!(ex > 0.0 && ex <= 1.0 + 1e-12);
        }
    }
}
