//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use quantune::{SampleStream, StreamRole};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

/// Upper standard normal quantile by bisection on `0.5 * erfc(x / sqrt 2)`.
/// For `q > 0.5` the exact complement `1 - q` is bisected and negated, so the
/// comparison always runs on the small tail.
pub fn upper_quantile_by_bisection(q: f64) -> f64 {
    if q > 0.5 {
        return -upper_quantile_by_bisection(1.0 - q);
    }
    let tail = |x: f64| 0.5 * erfc(x / std::f64::consts::SQRT_2);
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

#[allow(clippy::too_many_arguments)]
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature over `[a, b]` after splitting into `pieces`
/// equal panels, so narrow peaks are never stepped over.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, pieces: usize, tol: f64) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == pieces { b } else { lo + h };
            let (flo, fhi, fmid) = (f(lo), f(hi), f(0.5 * (lo + hi)));
            let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
            simpson(f, lo, hi, flo, fmid, fhi, whole, tol / pieces as f64, 40)
        })
        .sum()
}

/// `I_x(a, b)` by quadrature of the beta density, `a, b >= 1`. The shorter
/// tail is integrated directly.
pub fn incomplete_beta_by_quadrature(a: f64, b: f64, x: f64) -> f64 {
    assert!(a >= 1.0 && b >= 1.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let lb = ln_beta(a, b);
    let density = move |t: f64| {
        if t <= 0.0 {
            return if a == 1.0 { (-lb).exp() } else { 0.0 };
        }
        if t >= 1.0 {
            return if b == 1.0 { (-lb).exp() } else { 0.0 };
        }
        ((a - 1.0) * t.ln() + (b - 1.0) * (-t).ln_1p() - lb).exp()
    };
    let mode = if a + b > 2.0 { (a - 1.0) / (a + b - 2.0) } else { 0.5 };
    if x <= mode {
        integrate(&density, 0.0, x, 400, 1e-13)
    } else {
        1.0 - integrate(&density, x, 1.0, 400, 1e-13)
    }
}

/// `I_x(m, N + 1 - m) = P(Binomial(N, x) >= m)` by summing the binomial mass.
pub fn incomplete_beta_by_binomial_sum(m: u64, n: u64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_mass = |j: u64| {
        ln_gamma(n as f64 + 1.0) - ln_gamma(j as f64 + 1.0) - ln_gamma((n - j) as f64 + 1.0)
            + j as f64 * x.ln()
            + (n - j) as f64 * (-x).ln_1p()
    };
    let upper: f64 = (m..=n).map(|j| ln_mass(j).exp()).sum();
    let lower: f64 = (0..m).map(|j| ln_mass(j).exp()).sum();
    // sum the smaller side for accuracy
    if upper < lower {
        upper
    } else {
        1.0 - lower
    }
}

/// Regularized lower incomplete gamma `P(s, x)` by its power series.
pub fn lower_incomplete_gamma(s: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut term = 1.0 / s;
    let mut sum = term;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= x / (s + k);
        sum += term;
        k += 1.0;
    }
    (s * x.ln() - x - ln_gamma(s)).exp() * sum
}

pub fn chi_square_cdf(dof: u32, x: f64) -> f64 {
    lower_incomplete_gamma(dof as f64 / 2.0, x / 2.0)
}

pub fn levy_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        erfc(1.0 / (2.0 * x).sqrt())
    }
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Two-sided one-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.627_6 / (n as f64).sqrt()
}

/// Mean and sample variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Deterministic generator for test-case construction.
pub fn test_stream(index: u64) -> SampleStream {
    SampleStream::substream(0x7e57, StreamRole::Training, index)
}

/// Uniform integer in `lo..=hi`.
pub fn uniform_int(stream: &mut SampleStream, lo: u64, hi: u64) -> u64 {
    lo + (stream.next_f64() * (hi - lo + 1) as f64) as u64
}

/// Monte-Carlo check of the order-statistic moment law: mean and variance of
/// the `m`-th smallest of `n` uniforms over `reps` replications, returned as
/// `(mean, var, se_mean, se_var)`.
pub fn order_statistic_moments_mc(m: usize, n: usize, reps: usize, seed: u64) -> (f64, f64, f64, f64) {
    let mut stream = SampleStream::substream(seed, StreamRole::Training, 0);
    let mut buf = vec![0.0; n];
    let draws: Vec<f64> = (0..reps)
        .map(|_| {
            for v in buf.iter_mut() {
                *v = stream.next_f64();
            }
            let (_, &mut v, _) = buf.select_nth_unstable_by(m - 1, f64::total_cmp);
            v
        })
        .collect();
    let (mean, var) = mean_var(&draws);
    let r = reps as f64;
    let m4 = draws.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / r;
    (mean, var, (var / r).sqrt(), ((m4 - var * var) / r).sqrt())
}
