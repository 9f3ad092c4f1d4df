//! Stair-stepped terrain generation.

use serde::{Deserialize, Serialize};

use crate::config::LayoutConfig;
use crate::rng::{KeyStream, RngKey};

/// Ground height per column. Screen convention: larger y is lower.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Heightfield {
    pub ground_y: Vec<i32>,
    pub color_index: usize,
}

impl Heightfield {
    pub fn len(&self) -> usize {
        self.ground_y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ground_y.is_empty()
    }
}

/// Ground y at column `x`. Out-of-range queries clamp to the nearest column.
#[inline]
pub fn ground_height_at(hf: &Heightfield, x: i64) -> i32 {
    let last = hf.ground_y.len() as i64 - 1;
    hf.ground_y[x.clamp(0, last) as usize]
}

/// Signed height change of one run boundary before clamping, in pixels.
/// Negative values move the ground up the screen.
fn draw_delta(cfg: &LayoutConfig, s: &mut KeyStream) -> i32 {
    if !s.bernoulli(cfg.p_change) {
        return 0;
    }
    let up = s.bernoulli(cfg.p_up_given_change);
    let units = s.int_inclusive(cfg.min_step_height as i64, cfg.max_step_height as i64) as i32;
    let px = units * cfg.pix_per_unit as i32;
    if up {
        -px
    } else {
        px
    }
}

/// Raw per-boundary deltas, before clamping. Exposed for statistics.
pub fn sample_run_deltas(cfg: &LayoutConfig, key: RngKey, n: usize) -> Vec<i32> {
    let mut s = key.fold_in(0).stream();
    (0..n).map(|_| draw_delta(cfg, &mut s)).collect()
}

pub fn generate_layout(cfg: &LayoutConfig, key: RngKey) -> Heightfield {
    let length = cfg.length as usize;
    let run = cfg.run_width as usize;
    let hi = cfg.height_px as i32 - cfg.ground_thickness as i32;
    let mut s = key.fold_in(0).stream();
    let mut ground_y = Vec::with_capacity(length);
    let mut h = cfg.base_ground_y;
    let full_runs = length / run;
    for r in 0..full_runs {
        if r > 0 {
            h = (h + draw_delta(cfg, &mut s)).clamp(0, hi);
        }
        ground_y.extend(std::iter::repeat(h).take(run));
    }
    ground_y.resize(length, h);
    let color_index = key.fold_in(1).stream().below(cfg.layout_colors.len() as u64) as usize;
    Heightfield { ground_y, color_index }
}
