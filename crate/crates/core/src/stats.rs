//! Shared scalar helpers: Gaussian density/CDF, combinatorics.

/// Standard Gaussian CDF via erf.
pub fn gauss_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Error function, Abramowitz–Stegun 7.1.26 (|err| < 1.5e-7).
///
/// Accurate enough for tail masses and histogram bucket probabilities; the
/// quadrature oracles never go through erf.
pub fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let y = 1.0
        - (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t - 0.284496736) * t
            + 0.254829592)
            * t
            * (-x * x).exp();
    sign * y
}

/// Binomial coefficient as f64 (exact for the small orders used here).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Factorial as f64.
pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0f64, |acc, i| acc * i as f64)
}

/// Gaussian moments as f64: 0 for odd k, (k−1)!! for even k.
pub fn gaussian_moment_f(k: usize) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let mut acc = 1.0;
    let mut i = 1;
    while i < k {
        acc *= i as f64;
        i += 2;
    }
    acc
}

/// Sample mean.
#[cfg_attr(not(test), allow(dead_code))]
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (1/N normalization).
#[cfg_attr(not(test), allow(dead_code))]
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}
