//! Special functions the quadratures need beyond what `statrs` ships.

/// `B_{2j}` for `j = 1..=10`.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Hurwitz zeta `ζ(σ, q) = Σ_{k≥0} (q + k)^{-σ}`, analytically continued to all
/// real `σ ≠ 1`, for `q > 0`.
///
/// Euler–Maclaurin summation: `N` explicit terms, then the integral, half
/// endpoint and ten Bernoulli corrections at `q + N`.
pub fn hurwitz_zeta(sigma: f64, q: f64) -> f64 {
    assert!(q > 0.0, "hurwitz_zeta requires q > 0");
    assert!(sigma != 1.0, "hurwitz_zeta has a pole at sigma = 1");
    const N: usize = 12;
    let mut sum = 0.0;
    for k in 0..N {
        sum += (q + k as f64).powf(-sigma);
    }
    let a = q + N as f64;
    sum += a.powf(1.0 - sigma) / (sigma - 1.0);
    sum += 0.5 * a.powf(-sigma);
    // rising product sigma (sigma+1) ... (sigma+2j-2) over (2j)!
    let mut rising = sigma;
    let mut fact = 2.0;
    let mut power = a.powf(-sigma - 1.0);
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b / fact * rising * power;
        sum += term;
        let m = 2.0 * (j as f64 + 1.0);
        rising *= (sigma + m - 1.0) * (sigma + m);
        fact *= (m + 1.0) * (m + 2.0);
        power /= a * a;
    }
    sum
}

/// Riemann zeta for real `σ ≠ 1` (including negative arguments).
pub fn riemann_zeta(sigma: f64) -> f64 {
    hurwitz_zeta(sigma, 1.0)
}

/// Euler beta function `B(x, y)` for `x, y > 0`.
pub fn beta(x: f64, y: f64) -> f64 {
    statrs::function::beta::beta(x, y)
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}
