//! Small statistics toolbox: means and standard errors, jackknife resampling,
//! chi-square goodness-of-fit, and least-squares quadratic fits.

use crate::{C64, Error, Result};

/// Sample mean; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (ddof = 1); 0 when fewer than two samples.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Standard error of the mean.
pub fn sem(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    (sample_variance(xs) / xs.len() as f64).sqrt()
}

/// Jackknife standard error of the mean (leave-one-out resampling).
///
/// For the plain mean this coincides with [`sem`]; it is kept as an
/// independent code path for cross-checking error bars.
pub fn jackknife_sem(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let total: f64 = xs.iter().sum();
    let grand = total / n as f64;
    let mut acc = 0.0;
    for &x in xs {
        let loo = (total - x) / (n - 1) as f64;
        acc += (loo - grand) * (loo - grand);
    }
    ((n - 1) as f64 / n as f64 * acc).sqrt()
}

/// How per-record estimates are turned into an error bar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMethod {
    /// Standard error of the mean over records.
    Stderr,
    /// Leave-one-out jackknife over records.
    Jackknife,
}

impl ErrorMethod {
    pub fn apply(self, xs: &[f64]) -> f64 {
        match self {
            ErrorMethod::Stderr => sem(xs),
            ErrorMethod::Jackknife => jackknife_sem(xs),
        }
    }
}

/// Mean and per-component error of a complex sample.
pub fn complex_mean_err(values: &[C64], method: ErrorMethod) -> (C64, f64, f64) {
    let res: Vec<f64> = values.iter().map(|v| v.re).collect();
    let ims: Vec<f64> = values.iter().map(|v| v.im).collect();
    (
        C64::new(mean(&res), mean(&ims)),
        method.apply(&res),
        method.apply(&ims),
    )
}

// --- gamma functions -------------------------------------------------------

/// ln Γ(x) for x > 0 (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    assert!(x > 0.0, "ln_gamma needs a positive argument");
    let z = x - 1.0;
    let mut acc = 0.999_999_999_999_809_9;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (z + i as f64 + 1.0);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gammp(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cont_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 − P(a, x).
pub fn gammq(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cont_fraction(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..500 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-15 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cont_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

// --- chi-square ------------------------------------------------------------

/// Result of a Pearson chi-square goodness-of-fit test.
#[derive(Clone, Copy, Debug)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Upper-tail p-value of a chi-square statistic with `dof` degrees of freedom.
pub fn chi_square_pvalue(statistic: f64, dof: usize) -> f64 {
    gammq(dof as f64 / 2.0, statistic / 2.0)
}

/// Pearson test of observed counts against arbitrary expected counts.
pub fn chi_square_test(observed: &[u64], expected: &[f64]) -> Result<ChiSquareTest> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::input("observed/expected length mismatch"));
    }
    let mut statistic = 0.0;
    let mut used = 0usize;
    for (&o, &e) in observed.iter().zip(expected.iter()) {
        if e <= 0.0 {
            if o != 0 {
                return Err(Error::input(
                    "observed counts in a bin with zero expectation",
                ));
            }
            continue;
        }
        let diff = o as f64 - e;
        statistic += diff * diff / e;
        used += 1;
    }
    if used < 2 {
        return Err(Error::input("chi-square test needs at least two bins"));
    }
    let dof = used - 1;
    Ok(ChiSquareTest {
        statistic,
        dof,
        p_value: chi_square_pvalue(statistic, dof),
    })
}

/// Test of observed counts against a flat distribution over the bins.
pub fn chi_square_uniform_test(observed: &[u64]) -> Result<ChiSquareTest> {
    let total: u64 = observed.iter().sum();
    let expected = vec![total as f64 / observed.len() as f64; observed.len()];
    chi_square_test(observed, &expected)
}

// --- least squares ---------------------------------------------------------

/// Least-squares fit of `y ≈ c0 + c1 x + c2 x²`; returns (c0, c1, c2).
#[allow(clippy::needless_range_loop)]
pub fn fit_quadratic(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::input("quadratic fit needs at least three points"));
    }
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        let mut xp = 1.0;
        for sk in s.iter_mut() {
            *sk += xp;
            xp *= x;
        }
        let mut xq = 1.0;
        for tk in t.iter_mut() {
            *tk += y * xq;
            xq *= x;
        }
    }
    // 3×3 normal equations, Gaussian elimination with partial pivoting
    let mut a = [
        [s[0], s[1], s[2], t[0]],
        [s[1], s[2], s[3], t[1]],
        [s[2], s[3], s[4], t[2]],
    ];
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        if a[col][col].abs() < 1e-300 {
            return Err(Error::input("degenerate quadratic fit"));
        }
        for row in 0..3 {
            if row == col {
                continue;
            }
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    Ok((a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]))
}
