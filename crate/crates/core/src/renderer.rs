//! Scene composition: background, terrain, NPCs, distractors and agent.
//!
//! Layer order, back to front: background, terrain band, world NPCs,
//! distractors, sticky NPCs, agent. Sprites use 1-bit alpha (drawn iff alpha
//! >= 128). Rendering reads the latent state and never writes it.

use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use image::{RgbImage, RgbaImage};

use crate::assets::{resolve_backgrounds, resolve_skins, AssetError, SpriteSet};
use crate::config::{
    light_color, palette_color, shape_color, BackgroundMode, EnvConfig, Rgb, SHAPE_NAMES,
};
use crate::dynamics::Facing;
use crate::postfx::{resolve_filters, FilterParams};
use crate::state::LatentState;

/// Simulation ticks per second, for converting `animation_fps` and
/// per-second rotation speeds into per-step quantities.
pub const TICKS_PER_SECOND: f64 = 30.0;

// ---------------------------------------------------------------------------
// Frames
// ---------------------------------------------------------------------------

/// An `height × width × 3` image, row-major, 8 bits per channel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub height: usize,
    pub width: usize,
    pub data: Vec<u8>,
}

impl Frame {
    pub fn new(height: usize, width: usize) -> Self {
        Frame { height, width, data: vec![0; height * width * 3] }
    }

    pub fn from_raw(height: usize, width: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), height * width * 3, "buffer size");
        Frame { height, width, data }
    }

    #[inline]
    pub fn pixel(&self, y: usize, x: usize) -> Rgb {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn to_image(&self) -> RgbImage {
        RgbImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("frame dimensions")
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> image::ImageResult<()> {
        self.to_image().save_with_format(path, image::ImageFormat::Png)
    }
}

/// Raw dump: `H`, `W`, `N` as little-endian u32, then `N·H·W·3` bytes.
pub fn write_raw<W: Write>(mut w: W, frames: &[Frame]) -> std::io::Result<()> {
    let (h, wd) = frames.first().map(|f| (f.height, f.width)).unwrap_or((0, 0));
    for v in [h as u32, wd as u32, frames.len() as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    for f in frames {
        assert_eq!((f.height, f.width), (h, wd), "frames share dimensions");
        w.write_all(&f.data)?;
    }
    Ok(())
}

pub fn read_raw<R: Read>(mut r: R) -> std::io::Result<Vec<Frame>> {
    let mut hdr = [0u8; 12];
    r.read_exact(&mut hdr)?;
    let field = |i: usize| u32::from_le_bytes(hdr[i * 4..i * 4 + 4].try_into().unwrap()) as usize;
    let (h, w, n) = (field(0), field(1), field(2));
    (0..n)
        .map(|_| {
            let mut data = vec![0u8; h * w * 3];
            r.read_exact(&mut data)?;
            Ok(Frame::from_raw(h, w, data))
        })
        .collect()
}

/// Mutable view of one frame inside a larger buffer.
pub struct Canvas<'a> {
    pub height: usize,
    pub width: usize,
    pub data: &'a mut [u8],
}

impl<'a> Canvas<'a> {
    pub fn new(height: usize, width: usize, data: &'a mut [u8]) -> Self {
        debug_assert_eq!(data.len(), height * width * 3);
        Canvas { height, width, data }
    }

    #[inline]
    pub fn put(&mut self, y: i64, x: i64, c: Rgb) {
        if y >= 0 && x >= 0 && (y as usize) < self.height && (x as usize) < self.width {
            let i = (y as usize * self.width + x as usize) * 3;
            self.data[i..i + 3].copy_from_slice(&c);
        }
    }

    pub fn fill(&mut self, c: Rgb) {
        for px in self.data.chunks_exact_mut(3) {
            px.copy_from_slice(&c);
        }
    }
}

// ---------------------------------------------------------------------------
// Shapes
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    Circle,
    Cross,
    Diamond,
    Ellipse,
    Line,
    Polygon,
    Square,
    Star,
    Triangle,
}

impl FromStr for Shape {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        const ALL: [Shape; 9] = [
            Shape::Circle,
            Shape::Cross,
            Shape::Diamond,
            Shape::Ellipse,
            Shape::Line,
            Shape::Polygon,
            Shape::Square,
            Shape::Star,
            Shape::Triangle,
        ];
        SHAPE_NAMES
            .iter()
            .position(|n| *n == s)
            .map(|i| ALL[i])
            .ok_or_else(|| format!("unknown shape `{s}`"))
    }
}

fn inside_convex(u: f64, v: f64, verts: &[(f64, f64)]) -> bool {
    let n = verts.len();
    (0..n).all(|i| {
        let (ax, ay) = verts[i];
        let (bx, by) = verts[(i + 1) % n];
        (bx - ax) * (v - ay) - (by - ay) * (u - ax) >= 0.0
    })
}

/// Membership test in shape-local coordinates; `h` is half the size.
fn shape_contains(shape: Shape, u: f64, v: f64, h: f64) -> bool {
    match shape {
        Shape::Circle => u * u + v * v < h * h,
        Shape::Square => u.abs() < h && v.abs() < h,
        Shape::Diamond => u.abs() + v.abs() < h,
        Shape::Ellipse => (u / h).powi(2) + (v / (0.6 * h)).powi(2) < 1.0,
        Shape::Cross => {
            let arm = h / 3.0;
            (u.abs() < h && v.abs() < arm) || (v.abs() < h && u.abs() < arm)
        }
        Shape::Line => u.abs() < h && v.abs() < (0.15 * h).max(0.6),
        Shape::Triangle => {
            let s = 3f64.sqrt() / 2.0 * h;
            inside_convex(u, v, &[(0.0, -h), (s, h / 2.0), (-s, h / 2.0)])
        }
        Shape::Polygon => {
            let verts: Vec<(f64, f64)> = (0..6)
                .map(|k| {
                    let a = std::f64::consts::FRAC_PI_3 * k as f64;
                    (h * a.cos(), h * a.sin())
                })
                .collect();
            inside_convex(u, v, &verts)
        }
        Shape::Star => {
            let r = (u * u + v * v).sqrt();
            if r >= h {
                return false;
            }
            // Radius alternates between h (tips) and 0.4h (notches) every 36°.
            let theta = v.atan2(u) + std::f64::consts::FRAC_PI_2;
            let sector = std::f64::consts::PI / 5.0;
            let phase = theta.rem_euclid(2.0 * sector) / sector;
            let w = if phase <= 1.0 { phase } else { 2.0 - phase };
            r < h * (1.0 - 0.6 * w)
        }
    }
}

/// Draw a filled shape of `size` pixels centered at `(cx, cy)`, rotated by
/// `angle_deg`. Pixels are tested at their centers; off-canvas pixels clip.
pub fn rasterize_shape(
    canvas: &mut Canvas<'_>,
    shape: Shape,
    color: Rgb,
    center: (f64, f64),
    size: f64,
    angle_deg: f64,
) {
    let h = size / 2.0;
    let (cx, cy) = center;
    let reach = h * 1.5 + 1.0;
    let x0 = ((cx - reach).floor() as i64).max(0);
    let x1 = ((cx + reach).ceil() as i64).min(canvas.width as i64 - 1);
    let y0 = ((cy - reach).floor() as i64).max(0);
    let y1 = ((cy + reach).ceil() as i64).min(canvas.height as i64 - 1);
    let rotate = shape != Shape::Circle && angle_deg != 0.0;
    let (s, c) = (-angle_deg.to_radians()).sin_cos();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let dx = x as f64 + 0.5 - cx;
            let dy = y as f64 + 0.5 - cy;
            let (u, v) = if rotate { (c * dx - s * dy, s * dx + c * dy) } else { (dx, dy) };
            if shape_contains(shape, u, v, h) {
                canvas.put(y, x, color);
            }
        }
    }
}

/// Draw `frame` scaled (nearest) into the `dw × dh` box at `(left, top)`.
pub fn blit_sprite(
    canvas: &mut Canvas<'_>,
    frame: &RgbaImage,
    left: i64,
    top: i64,
    dw: u32,
    dh: u32,
    mirror: bool,
) {
    let (fw, fh) = frame.dimensions();
    for dy in 0..dh as i64 {
        let y = top + dy;
        if y < 0 || y >= canvas.height as i64 {
            continue;
        }
        let sy = (dy as u64 * fh as u64 / dh as u64) as u32;
        for dx in 0..dw as i64 {
            let x = left + dx;
            if x < 0 || x >= canvas.width as i64 {
                continue;
            }
            let mut sx = (dx as u64 * fw as u64 / dw as u64) as u32;
            if mirror {
                sx = fw - 1 - sx;
            }
            let p = frame.get_pixel(sx, sy);
            if p[3] >= 128 {
                canvas.put(y, x, [p[0], p[1], p[2]]);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Scene
// ---------------------------------------------------------------------------

/// A validated config with its palettes and assets resolved.
#[derive(Clone, Debug)]
pub struct Scene {
    pub config: EnvConfig,
    pub backgrounds: Vec<RgbImage>,
    pub agent_skins: Vec<SpriteSet>,
    pub npc_skins: Vec<SpriteSet>,
    pub sticky_skins: Vec<SpriteSet>,
    pub background_colors: Vec<Rgb>,
    pub layout_colors: Vec<Rgb>,
    pub agent_shapes: Vec<Shape>,
    pub agent_colors: Vec<Rgb>,
    pub distractor_shapes: Vec<Shape>,
    pub distractor_colors: Vec<Rgb>,
    pub light_colors: Vec<Rgb>,
    /// Filters with presets folded in.
    pub filters: Vec<FilterParams>,
}

fn colors(names: &[String], f: fn(&str) -> Option<Rgb>) -> Vec<Rgb> {
    names.iter().filter_map(|n| f(n)).collect()
}

fn shapes(names: &[String]) -> Vec<Shape> {
    names.iter().filter_map(|n| n.parse().ok()).collect()
}

impl Scene {
    pub fn new(config: &EnvConfig) -> Result<Scene, AssetError> {
        let c = config;
        let bg = &c.background;
        let backgrounds = if bg.mode == BackgroundMode::Image {
            resolve_backgrounds(
                bg.image_dir.as_deref(),
                bg.image_paths.as_deref(),
                bg.image_path.as_deref(),
                c.height,
                c.width,
            )?
        } else {
            Vec::new()
        };
        let ch = &c.character;
        let agent_skins = if ch.use_sprites {
            resolve_skins(ch.sprite_dir.as_deref(), ch.sprite_paths.as_deref(), ch.sprite_path.as_deref())?
        } else {
            Vec::new()
        };
        let n = &c.npc;
        let npc_skins = if n.enabled {
            resolve_skins(n.sprite_dir.as_deref(), n.sprite_paths.as_deref(), n.sprite_path.as_deref())?
        } else {
            Vec::new()
        };
        let sticky_skins = if n.sticky_enabled {
            resolve_skins(
                n.sticky_sprite_dir.as_deref(),
                n.sticky_sprite_dirs.as_deref(),
                n.sticky_sprite_path.as_deref(),
            )?
        } else {
            Vec::new()
        };
        Ok(Scene {
            config: c.clone(),
            backgrounds,
            agent_skins,
            npc_skins,
            sticky_skins,
            background_colors: colors(&bg.color_names, palette_color),
            layout_colors: colors(&c.layout.layout_colors, palette_color),
            agent_shapes: shapes(&ch.shape_types),
            agent_colors: colors(&ch.shape_colors, shape_color),
            distractor_shapes: shapes(&c.distractors.shape_types),
            distractor_colors: colors(&c.distractors.shape_colors, shape_color),
            light_colors: colors(&c.effects.point_light_color_names, light_color),
            filters: resolve_filters(&c.filters),
        })
    }

    pub fn frame_len(&self) -> usize {
        self.config.height as usize * self.config.width as usize * 3
    }
}

fn anim_index(ticks: u64, fps: f64, n: usize) -> usize {
    ((ticks as f64 * fps / TICKS_PER_SECOND).floor() as u64 % n as u64) as usize
}

fn draw_background(canvas: &mut Canvas<'_>, state: &LatentState, scene: &Scene) {
    let bg = &scene.config.background;
    match bg.mode {
        BackgroundMode::Black => canvas.fill([0, 0, 0]),
        BackgroundMode::Color => canvas.fill(state.visuals.background_color),
        BackgroundMode::Noise => match &state.visuals.noise {
            Some(n) => canvas.data.copy_from_slice(n),
            None => canvas.fill([0, 0, 0]),
        },
        BackgroundMode::Image => {
            let img = &scene.backgrounds[state.visuals.background_index % scene.backgrounds.len()];
            let (iw, ih) = (img.width() as i64, img.height() as i64);
            let off = (state.camera_x * bg.parallax_factor).floor() as i64;
            let raw = img.as_raw();
            for y in 0..canvas.height {
                let row = (y * canvas.width) * 3;
                if y as i64 >= ih {
                    canvas.data[row..row + canvas.width * 3].fill(0);
                    continue;
                }
                for x in 0..canvas.width {
                    let sx = x as i64 + off;
                    let sx = if bg.tile_horizontal {
                        Some(sx.rem_euclid(iw))
                    } else {
                        (0..iw).contains(&sx).then_some(sx)
                    };
                    let dst = row + x * 3;
                    match sx {
                        Some(sx) => {
                            let src = ((y as i64 * iw + sx) * 3) as usize;
                            canvas.data[dst..dst + 3].copy_from_slice(&raw[src..src + 3]);
                        }
                        None => canvas.data[dst..dst + 3].fill(0),
                    }
                }
            }
        }
    }
}

fn draw_terrain(canvas: &mut Canvas<'_>, state: &LatentState, scene: &Scene) {
    let color = scene.layout_colors[state.heightfield.color_index % scene.layout_colors.len()];
    let cam = state.camera_x.floor() as i64;
    let thick = scene.config.layout.ground_thickness as i64;
    let hf = &state.heightfield;
    for x in 0..canvas.width as i64 {
        let wx = cam + x;
        if wx < 0 || wx >= hf.len() as i64 {
            continue;
        }
        let g = hf.ground_y[wx as usize] as i64;
        for y in g..g + thick {
            canvas.put(y, x, color);
        }
    }
}

/// Core observation before lights and filters.
pub fn render_core(state: &LatentState, scene: &Scene, out: &mut [u8]) {
    let cfg = &scene.config;
    let (h, w) = (cfg.height as usize, cfg.width as usize);
    let mut canvas = Canvas::new(h, w, out);
    draw_background(&mut canvas, state, scene);
    draw_terrain(&mut canvas, state, scene);

    let cam = state.camera_x.floor();
    let (cw, chh) = (cfg.character.width, cfg.character.height);
    let t = state.t as u64;

    for npc in &state.npcs {
        let sx = npc.x - cam;
        if sx + cw as f64 <= 0.0 || sx - cw as f64 >= w as f64 {
            continue;
        }
        let skin = &scene.npc_skins[npc.skin % scene.npc_skins.len()];
        let f = anim_index(t + npc.anim_offset as u64, cfg.npc.animation_fps, skin.frames.len());
        let left = (sx - cw as f64 / 2.0).round() as i64;
        let top = npc.y.round() as i64 - chh as i64;
        blit_sprite(&mut canvas, &skin.frames[f], left, top, cw, chh, false);
    }

    for d in &state.distractors {
        let shape = scene.distractor_shapes[d.shape % scene.distractor_shapes.len()];
        let color = scene.distractor_colors[d.color % scene.distractor_colors.len()];
        rasterize_shape(&mut canvas, shape, color, (d.x, d.y), d.size as f64, d.angle);
    }

    for s in &state.sticky {
        let skin = &scene.sticky_skins[s.skin % scene.sticky_skins.len()];
        let f = anim_index(t + s.anim_offset as u64, cfg.npc.animation_fps, skin.frames.len());
        let cx = w as f64 / 2.0 + s.x_offset as f64;
        let feet = (cfg.layout.base_ground_y + s.y_offset) as f64 + s.dy;
        let left = (cx - cw as f64 / 2.0).round() as i64;
        let top = feet.round() as i64 - chh as i64;
        blit_sprite(&mut canvas, &skin.frames[f], left, top, cw, chh, false);
    }

    let a = &state.agent;
    let ax = a.x - cam;
    if cfg.character.use_sprites {
        let skin = &scene.agent_skins[state.visuals.agent_skin % scene.agent_skins.len()];
        let n = skin.frames.len();
        let f = if !cfg.character.enable_animation {
            0
        } else if !a.moving {
            cfg.character.idle_sprite_idx as usize % n
        } else {
            anim_index(a.anim_ticks as u64, cfg.character.animation_fps, n)
        };
        let left = (ax - cw as f64 / 2.0).round() as i64;
        let top = a.y.round() as i64 - chh as i64;
        blit_sprite(&mut canvas, &skin.frames[f], left, top, cw, chh, a.facing == Facing::Left);
    } else {
        let shape = scene.agent_shapes[state.visuals.agent_shape % scene.agent_shapes.len()];
        let color = scene.agent_colors[state.visuals.agent_color % scene.agent_colors.len()];
        let angle = if cfg.character.shape_rotate {
            t as f64 * cfg.character.shape_rotation_speed / TICKS_PER_SECOND
        } else {
            0.0
        };
        let center = (ax, a.y - chh as f64 / 2.0);
        rasterize_shape(&mut canvas, shape, color, center, cw as f64, angle);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn blank(n: usize) -> Vec<u8> {
        vec![0; n * n * 3]
    }

    fn count(buf: &[u8], c: Rgb) -> usize {
        buf.chunks_exact(3).filter(|p| *p == c).count()
    }

    #[test]
    fn square_is_axis_aligned_block() {
        let mut buf = blank(32);
        let mut cv = Canvas::new(32, 32, &mut buf);
        rasterize_shape(&mut cv, Shape::Square, [255, 0, 0], (10.0, 10.0), 4.0, 0.0);
        assert_eq!(count(&buf, [255, 0, 0]), 16);
        let f = Frame::from_raw(32, 32, buf);
        for y in 8..12 {
            for x in 8..12 {
                assert_eq!(f.pixel(y, x), [255, 0, 0]);
            }
        }
    }

    #[test]
    fn off_canvas_shape_is_clipped() {
        let mut buf = blank(16);
        let mut cv = Canvas::new(16, 16, &mut buf);
        rasterize_shape(&mut cv, Shape::Star, [1, 2, 3], (-50.0, 80.0), 10.0, 17.0);
        assert!(buf.iter().all(|&b| b == 0));
    }

    #[test]
    fn every_shape_draws_something_inside_its_box() {
        for name in SHAPE_NAMES {
            let shape: Shape = name.parse().unwrap();
            let mut buf = blank(32);
            let mut cv = Canvas::new(32, 32, &mut buf);
            rasterize_shape(&mut cv, shape, [9, 9, 9], (16.0, 16.0), 12.0, 30.0);
            let n = count(&buf, [9, 9, 9]);
            assert!(n > 4 && n <= 12 * 12, "{name}: {n}");
        }
    }

    proptest! {
        #[test]
        fn circle_ignores_angle(cx in 0.0f64..32.0, cy in 0.0f64..32.0, size in 1.0f64..20.0, angle in -360.0f64..360.0) {
            let mut a = blank(32);
            let mut b = blank(32);
            rasterize_shape(&mut Canvas::new(32, 32, &mut a), Shape::Circle, [5, 6, 7], (cx, cy), size, 0.0);
            rasterize_shape(&mut Canvas::new(32, 32, &mut b), Shape::Circle, [5, 6, 7], (cx, cy), size, angle);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn sprite_mirror_and_alpha() {
        let mut img = RgbaImage::new(2, 1);
        img.put_pixel(0, 0, image::Rgba([10, 20, 30, 255]));
        img.put_pixel(1, 0, image::Rgba([99, 99, 99, 100]));
        let mut buf = blank(4);
        blit_sprite(&mut Canvas::new(4, 4, &mut buf), &img, 0, 0, 2, 1, false);
        assert_eq!(&buf[0..6], &[10, 20, 30, 0, 0, 0]);
        let mut buf = blank(4);
        blit_sprite(&mut Canvas::new(4, 4, &mut buf), &img, 0, 0, 2, 1, true);
        assert_eq!(&buf[0..6], &[0, 0, 0, 10, 20, 30]);
    }

    #[test]
    fn raw_round_trip() {
        let frames: Vec<Frame> = (0..3u8)
            .map(|i| Frame::from_raw(2, 3, (0..18).map(|v| v * i).collect()))
            .collect();
        let mut bytes = Vec::new();
        write_raw(&mut bytes, &frames).unwrap();
        assert_eq!(&bytes[0..12], &[2, 0, 0, 0, 3, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(bytes.len(), 12 + 3 * 18);
        assert_eq!(read_raw(&bytes[..]).unwrap(), frames);
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = Frame::from_raw(4, 5, (0..60).map(|v| v as u8 * 4).collect());
        let p = dir.path().join("f.png");
        f.save_png(&p).unwrap();
        let back = image::open(&p).unwrap().to_rgb8();
        assert_eq!(back.dimensions(), (5, 4));
        assert_eq!(back.into_raw(), f.data);
    }
}
