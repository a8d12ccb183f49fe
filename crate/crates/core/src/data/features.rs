use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::rng;

/// Fixed random embeddings for named visual concepts (actions, teams,
/// outcome cues), plus the projection that turns frame differences into
/// motion features. Every vector is a pure function of the seed and its key.
#[derive(Debug, Clone)]
pub struct FeatureBank {
    seed: u64,
    d_appearance: usize,
    d_motion: usize,
    cache: BTreeMap<String, Vec<f64>>,
    motion_proj: Vec<f64>,
}

impl FeatureBank {
    pub fn new(seed: u64, d_appearance: usize, d_motion: usize) -> Self {
        let mut r = rng::derive(seed, "motion-projection");
        let scale = 1.0 / libm::sqrt(d_appearance as f64);
        let motion_proj = (0..d_motion * d_appearance)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut r);
                z * scale
            })
            .collect();
        FeatureBank {
            seed,
            d_appearance,
            d_motion,
            cache: BTreeMap::new(),
            motion_proj,
        }
    }

    pub fn d_appearance(&self) -> usize {
        self.d_appearance
    }

    pub fn d_motion(&self) -> usize {
        self.d_motion
    }

    /// Unit-variance embedding of `key`.
    pub fn vector(&mut self, key: &str) -> &[f64] {
        if !self.cache.contains_key(key) {
            let mut r = rng::derive(self.seed, key);
            let v = (0..self.d_appearance).map(|_| StandardNormal.sample(&mut r)).collect();
            self.cache.insert(key.into(), v);
        }
        &self.cache[key]
    }

    /// `out = P · delta` with the fixed `d_motion × d_appearance` projection.
    pub fn project_motion(&self, delta: &[f64], out: &mut [f64]) {
        for (m, o) in out.iter_mut().enumerate() {
            let row = &self.motion_proj[m * self.d_appearance..(m + 1) * self.d_appearance];
            *o = row.iter().zip(delta).map(|(a, b)| a * b).sum();
        }
    }
}
