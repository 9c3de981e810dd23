//! Seeded synthetic survey data: a smooth random field observed repeatedly
//! at scattered locations with location-dependent noise.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use robust_recon_core::Point2;

use crate::output::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub locations: usize,
    /// Mean number of repeats per location; each location gets 90%..110% of it.
    pub repeats: usize,
    pub seed: u64,
    /// Side of the square survey area.
    pub extent: f64,
    /// Correlation length of the field.
    pub length_scale: f64,
    /// Range of per-location noise standard deviations.
    pub noise: (f64, f64),
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            locations: 107,
            repeats: 100,
            seed: 0,
            extent: 20.0,
            length_scale: 5.0,
            noise: (0.5, 4.0),
        }
    }
}

/// Sum of random cosines: approximately a stationary Gaussian field with
/// squared-exponential covariance.
#[derive(Debug, Clone)]
pub struct RandomField {
    mean: f64,
    amplitude: f64,
    waves: Vec<(f64, f64, f64)>,
}

impl RandomField {
    pub fn new(rng: &mut ChaCha8Rng, length_scale: f64, terms: usize) -> Self {
        let waves = (0..terms)
            .map(|_| {
                let kx: f64 = rng.sample::<f64, _>(StandardNormal) / length_scale;
                let ky: f64 = rng.sample::<f64, _>(StandardNormal) / length_scale;
                (kx, ky, rng.random_range(0.0..2.0 * PI))
            })
            .collect();
        Self {
            mean: -60.0,
            amplitude: 8.0 * (2.0 / terms as f64).sqrt(),
            waves,
        }
    }

    pub fn value(&self, p: &Point2) -> f64 {
        self.mean
            + self.amplitude
                * self
                    .waves
                    .iter()
                    .map(|&(kx, ky, phase)| (kx * p.x + ky * p.y + phase).cos())
                    .sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub struct Survey {
    pub field: RandomField,
    pub locations: Vec<Point2>,
    pub noise_std: Vec<f64>,
    /// `(location index, observed value)` in output order.
    pub rows: Vec<(usize, f64)>,
}

pub fn generate(cfg: &SynthConfig) -> Survey {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let field = RandomField::new(&mut rng, cfg.length_scale, 64);
    let min_sep = 0.2 * cfg.extent / (cfg.locations.max(1) as f64).sqrt();
    let mut locations: Vec<Point2> = Vec::with_capacity(cfg.locations);
    while locations.len() < cfg.locations {
        let p = Point2::new(rng.random_range(0.0..cfg.extent), rng.random_range(0.0..cfg.extent));
        if locations.iter().all(|q| q.dist_sq(&p) >= min_sep * min_sep) {
            locations.push(p);
        }
    }
    let (lo, hi) = cfg.noise;
    let noise_std: Vec<f64> = (0..cfg.locations)
        .map(|_| (rng.random_range(lo.ln()..=hi.ln())).exp())
        .collect();
    let mut rows = Vec::new();
    let spread = cfg.repeats / 10;
    for (i, p) in locations.iter().enumerate() {
        let count = rng.random_range(cfg.repeats - spread..=cfg.repeats + spread).max(1);
        let noise = Normal::new(0.0, noise_std[i]).expect("positive std");
        let truth = field.value(p);
        for _ in 0..count {
            rows.push((i, truth + noise.sample(&mut rng)));
        }
    }
    Survey {
        field,
        locations,
        noise_std,
        rows,
    }
}

pub fn write_csv<W: Write>(survey: &Survey, mut out: W) -> io::Result<()> {
    writeln!(out, "x,y,value")?;
    for &(i, v) in &survey.rows {
        let p = survey.locations[i];
        writeln!(out, "{},{},{}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(v))?;
    }
    out.flush()
}
