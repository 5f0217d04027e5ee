#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GL5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_W: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Composite 5-point Gauss–Legendre over `n` panels with nodes
/// `a + (b - a) t^grade`, so panels crowd toward `a` when `grade > 1`.
pub fn composite_gl<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize, grade: i32) -> f64 {
    let node = |i: usize| a + (b - a) * (i as f64 / n as f64).powi(grade);
    let mut sum = 0.0;
    for i in 0..n {
        let (lo, hi) = (node(i), node(i + 1));
        let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for k in 0..5 {
            sum += GL5_W[k] * r * f(m + r * GL5_X[k]);
        }
    }
    sum
}

/// Hufnagel–Valley profile written out independently of the library.
pub fn hv(h: f64, wind: f64, c0: f64) -> f64 {
    0.00594 * (wind / 27.0).powi(2) * (1e-5 * h).powi(10) * (-h / 1000.0).exp()
        + 2.7e-16 * (-h / 1500.0).exp()
        + c0 * (-h / 100.0).exp()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

/// Two-sided KS distance between a sample and a CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(mut xs: Vec<f64>, cdf: F) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let c = cdf(x);
        d = d.max((c - i as f64 / n).abs()).max(((i + 1) as f64 / n - c).abs());
    }
    d
}
