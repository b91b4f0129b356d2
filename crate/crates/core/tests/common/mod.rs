#![allow(dead_code)]

use std::f64::consts::PI;

use qoz::{DataGrid, Precision};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Three sinusoids of different scales plus uniform noise spanning 5% of
/// the clean range.
pub fn multiscale(n: usize, seed: u64) -> DataGrid {
    let mut r = rng(seed);
    let clean = |x: f64, y: f64, z: f64| {
        (2.0 * PI * x / 97.0).sin() * (2.0 * PI * y / 61.0).cos()
            + 0.5 * (2.0 * PI * (x + 2.0 * y + z) / 23.0).sin()
            + 0.25 * (2.0 * PI * z / 7.3).sin()
    };
    let range = 3.5;
    DataGrid::from_fn(&[n, n, n], Precision::Single, |i| {
        clean(i[0] as f64, i[1] as f64, i[2] as f64) + 0.05 * range * (r.gen::<f64>() - 0.5)
    })
    .unwrap()
}

/// Low-frequency field with a few Gaussian bumps.
pub fn smooth(n: usize) -> DataGrid {
    let s = n as f64;
    DataGrid::from_fn(&[n, n, n], Precision::Single, |i| {
        let (x, y, z) = (i[0] as f64 / s, i[1] as f64 / s, i[2] as f64 / s);
        let bump = |cx: f64, cy: f64, cz: f64, w: f64| {
            (-((x - cx).powi(2) + (y - cy).powi(2) + (z - cz).powi(2)) / (w * w)).exp()
        };
        (PI * x).sin() * (PI * y).cos() + 0.5 * (2.0 * PI * z).sin() * x + bump(0.3, 0.6, 0.4, 0.2)
            - 0.7 * bump(0.7, 0.2, 0.8, 0.15)
    })
    .unwrap()
}

/// Random grid mixing a smooth component, noise and step discontinuities.
pub fn random_grid(r: &mut ChaCha8Rng, max_points: usize) -> DataGrid {
    let ndims = r.gen_range(1..=3);
    let max_edge = (max_points as f64).powf(1.0 / ndims as f64) as usize;
    let dims: Vec<usize> = (0..ndims).map(|_| r.gen_range(1..=max_edge)).collect();
    let precision = if r.gen_bool(0.5) {
        Precision::Single
    } else {
        Precision::Double
    };
    let scale = 10f64.powi(r.gen_range(-3..=6));
    let offset = r.gen_range(-2.0..2.0) * scale;
    let freqs: Vec<f64> = (0..3).map(|_| r.gen_range(0.0..0.5)).collect();
    let smooth_w = r.gen_range(0.0..1.0);
    let noise_w = if r.gen_bool(0.3) {
        0.0
    } else {
        r.gen_range(0.0..0.3)
    };
    let steps = r.gen_range(0..4);
    let cuts: Vec<(usize, usize, f64)> = (0..steps)
        .map(|_| {
            let axis = r.gen_range(0..ndims);
            (axis, r.gen_range(0..dims[axis]), r.gen_range(-1.0..1.0))
        })
        .collect();
    let constant = r.gen_ratio(1, 40);
    DataGrid::from_fn(&dims, precision, |i| {
        if constant {
            return offset;
        }
        let mut v = 0.0;
        for (k, &c) in i.iter().enumerate() {
            v += smooth_w * (freqs[k] * c as f64 + k as f64).sin();
        }
        v += noise_w * (r.gen::<f64>() - 0.5);
        for &(axis, at, h) in &cuts {
            if i[axis] >= at {
                v += h;
            }
        }
        offset + scale * v
    })
    .unwrap()
}
