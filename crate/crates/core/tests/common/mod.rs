#![allow(dead_code)]

use num_bigint::BigUint;
use num_integer::Roots;

/// `⌈s^{1/3} / N⌉` via integer cube roots.
pub fn epoch_length(workers: u64, s: u64) -> u64 {
    let mut c = s.cbrt();
    if c * c * c < s {
        c += 1;
    }
    c.div_ceil(workers)
}

/// `N / s^{2/3}` rounded to nearest f64, ties to even.
///
/// Takes `r = ⌊γ·2^k⌋ = ⌊cbrt(N³·2^{3k} / s²)⌋` with enough bits, then rounds
/// `r` to 53 significant bits using the exactness of the cube root as sticky bit.
pub fn epoch_rate(workers: u64, s: u64) -> f64 {
    const K: u32 = 96;
    let num = BigUint::from(workers).pow(3u32) << (3 * K);
    let den = BigUint::from(s).pow(2u32);
    let r = (&num / &den).cbrt();
    let exact = &r * &r * &r * &den == num;
    let shift = r.bits() as i64 - 53;
    assert!(shift > 1, "not enough precision");
    let shift = shift as u32;
    let mut mantissa = &r >> shift;
    let rem = &r - (&mantissa << shift);
    let half = BigUint::from(1u8) << (shift - 1);
    let odd = mantissa.bit(0);
    if rem > half || (rem == half && (!exact || odd)) {
        mantissa += 1u8;
    }
    let m: u64 = mantissa.try_into().unwrap();
    (m as f64) * 2f64.powi(shift as i32 - K as i32)
}

/// Compensated coordinate-wise mean.
pub fn kahan_mean(states: &[Vec<f64>]) -> Vec<f64> {
    let dim = states[0].len();
    (0..dim)
        .map(|j| {
            let (mut sum, mut c) = (0.0f64, 0.0f64);
            for s in states {
                let y = s[j] - c;
                let t = sum + y;
                c = (t - sum) - y;
                sum = t;
            }
            sum / states.len() as f64
        })
        .collect()
}

/// Ordinary least squares slope of `y` on `x`, computed directly.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

pub fn sine_config(body: &str) -> String {
    format!("[objective]\nfamily = \"sine\"\ndim = 8\nnoise_halfwidth = 0.5\n\n{body}")
}
