//! Globally adaptive Gauss–Kronrod (10/21) integration.
//!
//! The refractive-index profile spans about ten orders of magnitude between
//! the ground layer and the tropopause, so every path integral in the crate
//! goes through this routine instead of a uniform grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance and work budget for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub relative_tolerance: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub fn new(relative_tolerance: f64, max_subdivisions: usize) -> Result<Self> {
        if !(relative_tolerance > 0.0 && relative_tolerance <= 1e-3) {
            return Err(Error::Domain(format!(
                "relative_tolerance must lie in (0, 1e-3], got {relative_tolerance}"
            )));
        }
        if max_subdivisions < 16 {
            return Err(Error::Domain(format!(
                "max_subdivisions must be at least 16, got {max_subdivisions}"
            )));
        }
        Ok(Self {
            relative_tolerance,
            max_subdivisions,
        })
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-8,
            max_subdivisions: 1000,
        }
    }
}

// Kronrod abscissae; odd indices are the embedded 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut lo = [0.0; 10];
    let mut hi = [0.0; 10];
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = kronrod.abs();
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        lo[j] = f1;
        hi[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let mut error = ((kronrod - gauss) * half).abs();
    // QUADPACK-style rescaling: the raw Gauss/Kronrod difference is very pessimistic.
    let mean = kronrod * 0.5;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((lo[j] - mean).abs() + (hi[j] - mean).abs());
    }
    asc *= half.abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    let resabs = abs_sum * half.abs();
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]` to the relative tolerance in `spec`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_with_breaks(f, &[a, b], spec)
}

/// Like [`integrate`], with the interval pre-split at `points` (sorted, first
/// and last are the limits). Useful when the integrand has known scale changes.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Domain("need at least two integration limits".into()));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::Domain("integration limits must be finite".into()));
    }
    if points.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("integration limits must be sorted".into()));
    }
    let mut segments: Vec<Segment> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod21(&f, w[0], w[1]))
        .collect();
    if segments.is_empty() {
        return Ok(0.0);
    }
    let mut subdivisions = segments.len();
    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let err: f64 = segments.iter().map(|s| s.error).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Domain("integrand produced a non-finite value".into()));
        }
        let tol = spec.relative_tolerance * total.abs();
        if err <= tol || err <= f64::MIN_POSITIVE {
            return Ok(total);
        }
        if subdivisions >= spec.max_subdivisions {
            let achieved = if total != 0.0 { err / total.abs() } else { f64::INFINITY };
            return Err(Error::Quadrature {
                achieved,
                subdivisions,
            });
        }
        let (idx, worst) = segments
            .iter()
            .copied()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval collapsed to adjacent floats; nothing more to gain.
            let achieved = if total != 0.0 { err / total.abs() } else { f64::INFINITY };
            return Err(Error::Quadrature {
                achieved,
                subdivisions,
            });
        }
        segments[idx] = kronrod21(&f, worst.a, mid);
        segments.push(kronrod21(&f, mid, worst.b));
        subdivisions += 1;
    }
}

/// Integrates over `[a, ∞)` through the map `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let g = |t: f64| {
        let one_minus = 1.0 - t;
        let x = a + t / one_minus;
        let v = f(x) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, spec)
}
