use std::num::NonZeroUsize;

use gauss_quad::GaussHermite;
use statrs::function::gamma::gamma_ur;

use super::Scenario;

/// Log-normal shadowing over Nakagami-m fading with power-law path loss.
#[derive(Debug, Clone)]
pub struct LinkModel {
    range: f64,
    exponent: f64,
    sigma_db: f64,
    m: f64,
    ref_distance: f64,
    /// Threshold over mean SNR at the reference distance.
    ref_ratio: f64,
    nodes: Vec<(f64, f64)>,
}

impl LinkModel {
    pub fn new(s: &Scenario) -> Self {
        let gh = GaussHermite::new(NonZeroUsize::new(32).unwrap());
        let nodes = gh.as_node_weight_pairs().iter().map(|&(x, w)| (x, w / std::f64::consts::PI.sqrt())).collect();
        let m = s.fading_m;
        // Solve fade_success(ratio) = ref_delivery; it decreases in ratio.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while fade_success(m, hi) > s.ref_delivery {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if fade_success(m, mid) > s.ref_delivery {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Self {
            range: s.su_range,
            exponent: s.pathloss_exponent,
            sigma_db: s.shadowing_sigma_db,
            m,
            ref_distance: s.ref_distance,
            ref_ratio: 0.5 * (lo + hi),
            nodes,
        }
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    /// Success probability with the shadowing term fixed at `shadow_db`.
    pub fn success_given_shadow(&self, d: f64, shadow_db: f64) -> f64 {
        if d > self.range {
            return 0.0;
        }
        let ratio = self.ref_ratio * (d / self.ref_distance).powf(self.exponent) * 10f64.powf(-shadow_db / 10.0);
        fade_success(self.m, ratio)
    }

    /// Probability that one transmission over `d` meters is decoded.
    pub fn delivery_prob(&self, d: f64) -> f64 {
        if d > self.range {
            return 0.0;
        }
        if d <= 0.0 {
            return 1.0;
        }
        let s = std::f64::consts::SQRT_2 * self.sigma_db;
        let p: f64 = self.nodes.iter().map(|&(x, w)| w * self.success_given_shadow(d, s * x)).sum();
        p.clamp(0.0, 1.0)
    }
}

/// P(instantaneous SNR > threshold) under Nakagami-m fading, where `ratio` is
/// threshold over mean SNR.
fn fade_success(m: f64, ratio: f64) -> f64 {
    if ratio <= 0.0 {
        return 1.0;
    }
    if m == 1.0 {
        (-ratio).exp()
    } else {
        gamma_ur(m, m * ratio)
    }
}

pub fn link_delivery_prob(distance: f64, scenario: &Scenario) -> f64 {
    LinkModel::new(scenario).delivery_prob(distance)
}
