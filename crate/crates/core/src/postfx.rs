//! Photometric filters and point lights.
//!
//! Stages run in this order: brightness, contrast, gamma, saturation and hue
//! (one HSV round trip), color temperature, color jitter, gaussian noise,
//! poisson noise, blur, sharpen, pixelate, vignette, radial light. Each stage
//! clamps to `[0, 255]`. Arithmetic is in `f32`; the frame is quantized once,
//! round-half-up, after the last pass. Stages at their identity value are
//! skipped, so the all-default pipeline returns the input bit-for-bit.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Deserialize;
use thiserror::Error;

pub use crate::config::FilterParams;
use crate::config::EffectsConfig;
use crate::renderer::Frame;
use crate::rng::{threefry2x64, RngKey};
use crate::state::PointLight;

const BRIGHTNESS_SCALE: f32 = 255.0;
const TEMP_SCALE: f32 = 64.0;
const JITTER_SCALE: f64 = 0.01;
const POISSON_NORMAL_ABOVE: f32 = 30.0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PostfxError {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

#[derive(Deserialize)]
struct PresetFile {
    #[allow(dead_code)]
    version: u32,
    presets: BTreeMap<String, FilterParams>,
}

const PRESETS_YAML: &str = include_str!("../assets/presets.yaml");

fn presets() -> &'static BTreeMap<String, FilterParams> {
    static P: OnceLock<BTreeMap<String, FilterParams>> = OnceLock::new();
    P.get_or_init(|| {
        serde_yaml::from_str::<PresetFile>(PRESETS_YAML)
            .expect("presets fixture parses")
            .presets
    })
}

/// The parameter bundle of a named preset.
pub fn preset_bundle(name: &str) -> Result<FilterParams, PostfxError> {
    presets().get(name).cloned().ok_or_else(|| PostfxError::UnknownPreset(name.to_string()))
}

/// The base filters followed by one pass per listed preset. Unknown names
/// are rejected by config validation and skipped here.
pub fn resolve_filters(params: &FilterParams) -> Vec<FilterParams> {
    let base = FilterParams { pop_filter_list: Vec::new(), ..params.clone() };
    std::iter::once(base)
        .chain(params.pop_filter_list.iter().filter_map(|n| preset_bundle(n).ok()))
        .filter(|p| !p.is_identity())
        .collect()
}

// ---------------------------------------------------------------------------
// Random draws keyed by (stage key, element index)
// ---------------------------------------------------------------------------

#[inline]
fn unit_pair(key: RngKey, index: u64) -> [f32; 4] {
    let [a, b] = threefry2x64(key.0, [index, 2]);
    let u = |v: u64| ((v >> 40) as f32 + 0.5) * (1.0 / (1u64 << 24) as f32);
    [u(a), u(a << 32), u(b), u(b << 32)]
}

#[inline]
fn box_muller(u1: f32, u2: f32) -> (f32, f32) {
    let r = (-2.0 * u1.ln()).sqrt();
    let t = std::f32::consts::TAU * u2;
    (r * t.cos(), r * t.sin())
}

// ---------------------------------------------------------------------------
// Stages on a float buffer
// ---------------------------------------------------------------------------

#[inline]
fn clamp255(v: f32) -> f32 {
    v.clamp(0.0, 255.0)
}

fn map_all(buf: &mut [f32], f: impl Fn(f32) -> f32) {
    for v in buf.iter_mut() {
        *v = clamp255(f(*v));
    }
}

fn rgb_to_hsv(r: f32, g: f32, b: f32) -> (f32, f32, f32) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    let h = if d == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / d + 2.0)
    } else {
        60.0 * ((r - g) / d + 4.0)
    };
    let s = if max == 0.0 { 0.0 } else { d / max };
    (h, s, max)
}

fn hsv_to_rgb(h: f32, s: f32, v: f32) -> (f32, f32, f32) {
    let c = v * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp.rem_euclid(2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    (r + m, g + m, b + m)
}

fn saturation_hue(buf: &mut [f32], sat: f32, hue: f32) {
    for px in buf.chunks_exact_mut(3) {
        let (h, s, v) = rgb_to_hsv(px[0], px[1], px[2]);
        let (r, g, b) = hsv_to_rgb(h + hue, (s * sat).clamp(0.0, 1.0), v);
        px[0] = clamp255(r);
        px[1] = clamp255(g);
        px[2] = clamp255(b);
    }
}

fn jitter(buf: &mut [f32], std: f64, key: RngKey) {
    let mut s = key.stream();
    let mut m = [[0f32; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (i == j) as u8 as f32 + (s.normal() * std * JITTER_SCALE) as f32;
        }
    }
    for px in buf.chunks_exact_mut(3) {
        let (r, g, b) = (px[0], px[1], px[2]);
        for (c, row) in m.iter().enumerate() {
            px[c] = clamp255(row[0] * r + row[1] * g + row[2] * b);
        }
    }
}

fn gaussian(buf: &mut [f32], std: f32, key: RngKey) {
    for (i, px) in buf.chunks_exact_mut(3).enumerate() {
        let u = unit_pair(key, i as u64);
        let (n0, n1) = box_muller(u[0], u[1]);
        let (n2, _) = box_muller(u[2], u[3]);
        px[0] = clamp255(px[0] + std * n0);
        px[1] = clamp255(px[1] + std * n1);
        px[2] = clamp255(px[2] + std * n2);
    }
}

fn poisson_sample(lambda: f32, u: f32, n: f32) -> f32 {
    if lambda <= 0.0 {
        return 0.0;
    }
    if lambda > POISSON_NORMAL_ABOVE {
        return (lambda + lambda.sqrt() * n).round().max(0.0);
    }
    let mut p = (-lambda).exp();
    let mut cdf = p;
    let mut k = 0u32;
    while u > cdf && k < 400 {
        k += 1;
        p *= lambda / k as f32;
        cdf += p;
    }
    k as f32
}

fn poisson(buf: &mut [f32], scale: f32, key: RngKey) {
    for (i, px) in buf.chunks_exact_mut(3).enumerate() {
        let u = unit_pair(key, i as u64);
        let (n0, n1) = box_muller(u[0], u[1]);
        let v = unit_pair(key.fold_in(1), i as u64);
        let normals = [n0, n1, box_muller(v[3], u[2]).0];
        for c in 0..3 {
            let k = poisson_sample(px[c] * scale, v[c], normals[c]);
            px[c] = clamp255(k / scale);
        }
    }
}

/// One horizontal and one vertical box pass of `radius`, edges clamped.
fn box_blur(buf: &mut [f32], tmp: &mut Vec<f32>, h: usize, w: usize, radius: usize) {
    let row = w * 3;
    tmp.resize(buf.len(), 0.0);
    let norm = 1.0 / (2 * radius + 1) as f32;
    // Taps are summed in ascending offset order in both passes.
    let mut pad = vec![0f32; (w + 2 * radius) * 3];
    for y in 0..h {
        let src = &buf[y * row..(y + 1) * row];
        for (i, px) in pad.chunks_exact_mut(3).enumerate() {
            let x = i.saturating_sub(radius).min(w - 1);
            px.copy_from_slice(&src[x * 3..x * 3 + 3]);
        }
        let dst = &mut tmp[y * row..(y + 1) * row];
        dst.fill(0.0);
        for k in 0..=2 * radius {
            for (d, s) in dst.iter_mut().zip(&pad[k * 3..k * 3 + row]) {
                *d += s;
            }
        }
        for d in dst.iter_mut() {
            *d *= norm;
        }
    }
    for y in 0..h {
        let dst = &mut buf[y * row..(y + 1) * row];
        dst.fill(0.0);
        for k in 0..=2 * radius {
            let yy = (y + k).saturating_sub(radius).min(h - 1);
            for (d, s) in dst.iter_mut().zip(&tmp[yy * row..(yy + 1) * row]) {
                *d += s;
            }
        }
        for d in dst.iter_mut() {
            *d *= norm;
        }
    }
}

/// Box radius whose three-fold repetition approximates a gaussian of `sigma`.
pub fn blur_radius(sigma: f64) -> usize {
    let ideal = (4.0 * sigma * sigma + 1.0).sqrt();
    (((ideal - 1.0) / 2.0).round() as usize).max(1)
}

fn blur(buf: &mut [f32], tmp: &mut Vec<f32>, h: usize, w: usize, sigma: f64) {
    let r = blur_radius(sigma);
    for _ in 0..3 {
        box_blur(buf, tmp, h, w, r);
    }
}

fn sharpen(buf: &mut [f32], tmp: &mut Vec<f32>, h: usize, w: usize, amount: f32) {
    let mut blurred = buf.to_vec();
    box_blur(&mut blurred, tmp, h, w, 1);
    for (v, b) in buf.iter_mut().zip(&blurred) {
        *v = clamp255(*v + amount * (*v - b));
    }
}

fn pixelate(buf: &mut [f32], h: usize, w: usize, f: usize) {
    for y in 0..h {
        let sy = y - y % f;
        for x in 0..w {
            let sx = x - x % f;
            if (sy, sx) != (y, x) {
                let src = (sy * w + sx) * 3;
                let dst = (y * w + x) * 3;
                for c in 0..3 {
                    buf[dst + c] = buf[src + c];
                }
            }
        }
    }
}

/// Distance of each pixel center from the frame center, normalized so the
/// corners are at 1.
fn normalized_distance(h: usize, w: usize, y: usize, x: usize) -> f32 {
    let (cy, cx) = (h as f32 / 2.0, w as f32 / 2.0);
    let dy = y as f32 + 0.5 - cy;
    let dx = x as f32 + 0.5 - cx;
    ((dx * dx + dy * dy) / (cx * cx + cy * cy)).sqrt()
}

fn vignette(buf: &mut [f32], h: usize, w: usize, strength: f32) {
    for y in 0..h {
        for x in 0..w {
            let d = normalized_distance(h, w, y, x);
            let f = (1.0 - strength * d * d).max(0.0);
            let i = (y * w + x) * 3;
            for v in &mut buf[i..i + 3] {
                *v *= f;
            }
        }
    }
}

fn radial(buf: &mut [f32], h: usize, w: usize, strength: f32) {
    for y in 0..h {
        for x in 0..w {
            let d = normalized_distance(h, w, y, x).min(1.0);
            let add = strength * 255.0 * (1.0 - d);
            let i = (y * w + x) * 3;
            for v in &mut buf[i..i + 3] {
                *v = clamp255(*v + add);
            }
        }
    }
}

/// One pass of the pipeline over a float frame.
pub fn filter_pass(
    buf: &mut [f32],
    tmp: &mut Vec<f32>,
    h: usize,
    w: usize,
    p: &FilterParams,
    key: RngKey,
) {
    if p.brightness != 0.0 {
        let b = p.brightness as f32 * BRIGHTNESS_SCALE;
        map_all(buf, |v| v + b);
    }
    if p.contrast != 1.0 {
        let c = p.contrast as f32;
        map_all(buf, |v| (v - 128.0) * c + 128.0);
    }
    if p.gamma != 1.0 {
        let g = p.gamma as f32;
        map_all(buf, |v| 255.0 * (v / 255.0).powf(g));
    }
    let hue = p.hue_shift.rem_euclid(360.0) as f32;
    if p.saturation != 1.0 || hue != 0.0 {
        saturation_hue(buf, p.saturation as f32, hue);
    }
    if p.color_temp != 0.0 {
        let t = p.color_temp as f32 * TEMP_SCALE;
        for px in buf.chunks_exact_mut(3) {
            px[0] = clamp255(px[0] + t);
            px[2] = clamp255(px[2] - t);
        }
    }
    if p.color_jitter_std > 0.0 {
        jitter(buf, p.color_jitter_std, key.fold_in(0));
    }
    if p.gaussian_noise_std > 0.0 {
        gaussian(buf, p.gaussian_noise_std as f32, key.fold_in(1));
    }
    if p.poisson_noise_scale > 0.0 {
        poisson(buf, p.poisson_noise_scale as f32, key.fold_in(2));
    }
    if p.blur_sigma > 0.0 {
        blur(buf, tmp, h, w, p.blur_sigma);
    }
    if p.sharpen_amount > 0.0 {
        sharpen(buf, tmp, h, w, p.sharpen_amount as f32);
    }
    if p.pixelate_factor > 1 {
        pixelate(buf, h, w, p.pixelate_factor as usize);
    }
    if p.vignette_strength > 0.0 {
        vignette(buf, h, w, p.vignette_strength as f32);
    }
    if p.radial_light_strength > 0.0 {
        radial(buf, h, w, p.radial_light_strength as f32);
    }
}

/// Additive point lights: `intensity * color * max(0, 1 - d/R)^falloff`
/// with `R = radius * min(H, W)`.
pub fn point_lights_pass(buf: &mut [f32], h: usize, w: usize, fx: &EffectsConfig, lights: &[PointLight]) {
    let r = (fx.point_light_radius * h.min(w) as f64) as f32;
    let intensity = fx.point_light_intensity as f32;
    let falloff = fx.point_light_falloff as f32;
    for light in lights {
        let (cx, cy) = (light.cx as f32, light.cy as f32);
        let y0 = ((cy - r).floor().max(0.0)) as usize;
        let y1 = ((cy + r).ceil().max(0.0) as usize).min(h);
        let x0 = ((cx - r).floor().max(0.0)) as usize;
        let x1 = ((cx + r).ceil().max(0.0) as usize).min(w);
        for y in y0..y1 {
            for x in x0..x1 {
                let dx = x as f32 + 0.5 - cx;
                let dy = y as f32 + 0.5 - cy;
                let d = (dx * dx + dy * dy).sqrt();
                if d >= r {
                    continue;
                }
                let k = intensity * (1.0 - d / r).powf(falloff);
                let i = (y * w + x) * 3;
                for c in 0..3 {
                    buf[i + c] = clamp255(buf[i + c] + k * light.color[c] as f32);
                }
            }
        }
    }
}

#[inline]
fn quantize(v: f32) -> u8 {
    // Round half up; truncation equals floor on the clamped, non-negative value.
    (v.clamp(0.0, 255.0) + 0.5) as u8
}

/// Reusable float buffers for one worker.
#[derive(Default)]
pub struct Scratch {
    buf: Vec<f32>,
    tmp: Vec<f32>,
}

/// Lights, then every filter pass, in place on an 8-bit frame.
pub fn postprocess(
    frame: &mut [u8],
    h: usize,
    w: usize,
    lights: Option<(&EffectsConfig, &[PointLight])>,
    passes: &[FilterParams],
    key: RngKey,
    scratch: &mut Scratch,
) {
    let lit = lights.filter(|(_, l)| !l.is_empty());
    if lit.is_none() && passes.is_empty() {
        return;
    }
    let Scratch { buf, tmp } = scratch;
    buf.clear();
    buf.extend(frame.iter().map(|&v| v as f32));
    if let Some((fx, l)) = lit {
        point_lights_pass(buf, h, w, fx, l);
    }
    for (i, p) in passes.iter().enumerate() {
        filter_pass(buf, tmp, h, w, p, key.fold_in(i as u64));
    }
    for (o, v) in frame.iter_mut().zip(buf.iter()) {
        *o = quantize(*v);
    }
}

/// Apply `params` (and its presets) to a frame.
pub fn apply_filters(frame: &Frame, params: &FilterParams, key: RngKey) -> Frame {
    let mut out = frame.clone();
    postprocess(
        &mut out.data,
        frame.height,
        frame.width,
        None,
        &resolve_filters(params),
        key,
        &mut Scratch::default(),
    );
    out
}

/// Apply point lights to a frame.
pub fn apply_point_lights(frame: &Frame, params: &EffectsConfig, lights: &[PointLight]) -> Frame {
    let mut out = frame.clone();
    postprocess(
        &mut out.data,
        frame.height,
        frame.width,
        Some((params, lights)),
        &[],
        RngKey::from_seed(0),
        &mut Scratch::default(),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngKey;
    use proptest::prelude::*;

    fn random_frame(seed: u64, h: usize, w: usize) -> Frame {
        let mut s = RngKey::from_seed(seed).stream();
        Frame::from_raw(h, w, (0..h * w * 3).map(|_| s.below(256) as u8).collect())
    }

    fn only(f: impl FnOnce(&mut FilterParams)) -> FilterParams {
        let mut p = FilterParams::default();
        f(&mut p);
        p
    }

    fn key() -> RngKey {
        RngKey::from_seed(11)
    }

    #[test]
    fn defaults_are_identity() {
        let f = random_frame(1, 32, 32);
        assert_eq!(apply_filters(&f, &FilterParams::default(), key()), f);
    }

    #[test]
    fn contrast_pivot() {
        let f = Frame::from_raw(8, 8, vec![128; 192]);
        assert_eq!(apply_filters(&f, &only(|p| p.contrast = 128.0), key()), f);
    }

    #[test]
    fn hue_wraps() {
        let f = random_frame(2, 16, 16);
        let a = apply_filters(&f, &only(|p| p.hue_shift = 180.0), key());
        let b = apply_filters(&f, &only(|p| p.hue_shift = -180.0), key());
        assert_eq!(a, b);
        assert_ne!(a, f);
    }

    #[test]
    fn pixelate_blocks_constant() {
        let f = random_frame(3, 128, 128);
        let out = apply_filters(&f, &only(|p| p.pixelate_factor = 3), key());
        for y in 0..128 {
            for x in 0..128 {
                assert_eq!(out.pixel(y, x), out.pixel(y - y % 3, x - x % 3));
            }
        }
    }

    #[test]
    fn saturation_zero_is_gray() {
        let f = random_frame(4, 8, 8);
        let out = apply_filters(&f, &only(|p| p.saturation = 0.0), key());
        for px in out.data.chunks_exact(3) {
            assert!(px[0] == px[1] && px[1] == px[2]);
        }
    }

    #[test]
    fn single_identity_values() {
        let f = random_frame(5, 8, 8);
        for p in [
            only(|p| p.gamma = 1.0),
            only(|p| p.contrast = 1.0),
            only(|p| p.saturation = 1.0),
            only(|p| p.hue_shift = 360.0),
            only(|p| p.color_temp = 0.0),
        ] {
            assert_eq!(apply_filters(&f, &p, key()), f);
        }
    }

    #[test]
    fn stochastic_filters_are_keyed() {
        let f = random_frame(6, 16, 16);
        for p in [
            only(|p| p.gaussian_noise_std = 20.0),
            only(|p| p.color_jitter_std = 2.0),
            only(|p| p.poisson_noise_scale = 0.5),
            only(|p| p.poisson_noise_scale = 0.05),
        ] {
            let a = apply_filters(&f, &p, key());
            assert_eq!(a, apply_filters(&f, &p, key()));
            assert_ne!(a, apply_filters(&f, &p, RngKey::from_seed(12)));
            assert_ne!(a, f);
        }
    }

    #[test]
    fn gaussian_noise_scale() {
        let f = Frame::from_raw(64, 64, vec![128; 64 * 64 * 3]);
        let out = apply_filters(&f, &only(|p| p.gaussian_noise_std = 10.0), key());
        let n = out.data.len() as f64;
        let mean = out.data.iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = out.data.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        assert!((mean - 128.0).abs() < 0.5, "{mean}");
        assert!((var.sqrt() - 10.0).abs() < 0.5, "{}", var.sqrt());
    }

    #[test]
    fn poisson_mean_preserved() {
        for scale in [0.05f64, 1.0] {
            let f = Frame::from_raw(64, 64, vec![100; 64 * 64 * 3]);
            let out = apply_filters(&f, &only(|p| p.poisson_noise_scale = scale), key());
            let mean = out.data.iter().map(|&v| v as f64).sum::<f64>() / out.data.len() as f64;
            assert!((mean - 100.0).abs() < 2.0, "scale {scale}: {mean}");
        }
    }

    #[test]
    fn blur_and_sharpen() {
        let mut f = Frame::new(9, 9);
        f.data[(4 * 9 + 4) * 3] = 255;
        let b = apply_filters(&f, &only(|p| p.blur_sigma = 1.0), key());
        assert!(b.pixel(4, 4)[0] < 255 && b.pixel(4, 5)[0] > 0);
        let flat = Frame::from_raw(9, 9, vec![77; 243]);
        assert_eq!(apply_filters(&flat, &only(|p| p.blur_sigma = 3.0), key()), flat);
        assert_eq!(apply_filters(&flat, &only(|p| p.sharpen_amount = 2.0), key()), flat);
        let s = apply_filters(&b, &only(|p| p.sharpen_amount = 1.0), key());
        assert!(s.pixel(4, 4)[0] > b.pixel(4, 4)[0]);
    }

    #[test]
    fn presets() {
        assert_eq!(preset_bundle("noir").unwrap().saturation, 0.0);
        assert_eq!(preset_bundle("unknown"), Err(PostfxError::UnknownPreset("unknown".into())));
        for name in crate::config::PRESET_NAMES {
            let p = preset_bundle(name).unwrap();
            p.validate().unwrap();
            assert!(p.pop_filter_list.is_empty());
            assert_eq!(p.color_jitter_std + p.gaussian_noise_std + p.poisson_noise_scale, 0.0);
        }
    }

    #[test]
    fn preset_twice_equals_two_passes() {
        let f = random_frame(7, 16, 16);
        let noir = preset_bundle("noir").unwrap();
        let twice = apply_filters(&f, &FilterParams { pop_filter_list: vec!["noir".into(), "noir".into()], ..Default::default() }, key());
        let mut out = f.clone();
        postprocess(&mut out.data, 16, 16, None, &[noir.clone(), noir], key(), &mut Scratch::default());
        assert_eq!(twice, out);
    }

    #[test]
    fn lights_support_and_zero_limit() {
        let f = Frame::new(32, 32);
        let fx = EffectsConfig { point_light_radius: 0.25, ..Default::default() };
        let light = PointLight { cx: 16.0, cy: 16.0, color: [255, 255, 255] };
        let out = apply_point_lights(&f, &fx, std::slice::from_ref(&light));
        assert!(out.pixel(15, 15)[0] > 200);
        assert_eq!(out.pixel(0, 0), [0, 0, 0]);
        assert_eq!(out.pixel(16, 26), [0, 0, 0]);
        let dim = EffectsConfig { point_light_intensity: 1e-6, ..fx.clone() };
        assert_eq!(apply_point_lights(&f, &dim, &[light.clone()]), f);
        let sharp = EffectsConfig { point_light_falloff: 4.0, ..fx };
        let s = apply_point_lights(&f, &sharp, &[light]);
        assert!(s.pixel(16, 19)[0] < out.pixel(16, 19)[0]);
        assert!(s.pixel(16, 17)[0] >= s.pixel(16, 19)[0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn vignette_never_brightens(seed in any::<u64>(), s in 0.0f64..3.0) {
            let f = random_frame(seed, 16, 16);
            let out = apply_filters(&f, &only(|p| p.vignette_strength = s), key());
            prop_assert!(out.data.iter().zip(&f.data).all(|(o, i)| o <= i));
        }

        #[test]
        fn radial_never_darkens(seed in any::<u64>(), s in 0.0f64..2.0) {
            let f = random_frame(seed, 16, 16);
            let out = apply_filters(&f, &only(|p| p.radial_light_strength = s), key());
            prop_assert!(out.data.iter().zip(&f.data).all(|(o, i)| o >= i));
        }

        #[test]
        fn brightness_monotone(seed in any::<u64>(), b1 in -1.0f64..1.0, b2 in -1.0f64..1.0) {
            let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
            let f = random_frame(seed, 8, 8);
            let a = apply_filters(&f, &only(|p| p.brightness = lo), key());
            let b = apply_filters(&f, &only(|p| p.brightness = hi), key());
            prop_assert!(a.data.iter().zip(&b.data).all(|(x, y)| x <= y));
        }
    }
}
