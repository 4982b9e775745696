//! Matrix exponential of `tQ` for a conservative rate matrix `Q`.
//!
//! The primary route is Padé(13) scaling and squaring. Uniformization,
//! `exp(tQ) = Σ_k e^{-λt} (λt)^k / k! (I + Q/λ)^k` with `λ = max |Q_ii|`, is
//! an independent second route; it is entrywise nonnegative by construction
//! and takes over whenever the Padé result is not.

use nalgebra::DMatrix;

/// Padé entries more negative than this trigger the uniformization route.
const NEGATIVE_SLACK: f64 = 1e-12;

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371_920_351_148_152;

fn to_matrix(n: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, data)
}

fn to_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)])
        .collect()
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(tQ)` by Padé(13) scaling and squaring. Returns `None` if the
/// denominator is singular.
pub fn expm_pade(n: usize, rate: &[f64], t: f64) -> Option<Vec<f64>> {
    let a = to_matrix(n, rate) * t;
    let norm = norm1(&a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a / 2f64.powi(squarings);
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];
    let mut r = (&v - &u).lu().solve(&(&v + &u))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Some(to_row_major(&r))
}

/// `exp(tQ)` by uniformization on a scaled step followed by squaring.
pub fn expm_uniformization(n: usize, rate: &[f64], t: f64) -> Vec<f64> {
    let lambda = (0..n).map(|i| rate[i * n + i].abs()).fold(0.0, f64::max);
    let id = DMatrix::<f64>::identity(n, n);
    if lambda == 0.0 || t == 0.0 {
        return to_row_major(&id);
    }
    let jump = &id + to_matrix(n, rate) / lambda;
    // keep λτ ≤ 1 on the scaled step so the Poisson series is short
    let squarings = (lambda * t).log2().ceil().max(0.0) as i32;
    let tau = t / 2f64.powi(squarings);
    let mean = lambda * tau;
    let mut weight = (-mean).exp();
    let mut power = id.clone();
    let mut acc = &power * weight;
    let mut k = 0u32;
    // λτ ≤ 1, so the Poisson weights decrease from k = 1 on
    while weight > 1e-18 && k < 200 {
        k += 1;
        power = &power * &jump;
        weight *= mean / k as f64;
        acc += &power * weight;
    }
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    to_row_major(&acc)
}

/// `exp(tQ)` as a row-major nonnegative matrix.
pub fn expm(n: usize, rate: &[f64], t: f64) -> Vec<f64> {
    if t == 0.0 {
        return to_row_major(&DMatrix::<f64>::identity(n, n));
    }
    match expm_pade(n, rate, t) {
        Some(mut m) if m.iter().all(|v| v.is_finite() && *v >= -NEGATIVE_SLACK) => {
            for v in m.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            m
        }
        _ => expm_uniformization(n, rate, t),
    }
}
