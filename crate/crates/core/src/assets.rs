//! Background images and sprite sets.
//!
//! Paths in configuration may name files on disk or built-in procedural
//! placeholders using the `builtin:` scheme:
//!
//! - `builtin:backgrounds`: all built-in backgrounds (as an image directory);
//! - `builtin:bg-N`: background `N`, 1-based, `N` in `1..=128`;
//! - `builtin:sprites`: all built-in skins (as a sprite directory);
//! - `builtin:<skin>`: one skin by name, e.g. `builtin:skeleton`.
//!
//! A sprite directory on disk holds one subdirectory per skin; a skin
//! directory holds its animation frames, ordered by file name.

use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage, Rgba, RgbaImage};
use thiserror::Error;

use crate::rng::{hash_uniform, RngKey};

pub const BUILTIN_PREFIX: &str = "builtin:";
pub const N_BUILTIN_BACKGROUNDS: usize = 128;
pub const BUILTIN_SKINS: [&str; 27] = [
    "boy",
    "chibi",
    "clown",
    "cowboy",
    "cowboy_2",
    "dark_knight",
    "dark_knight_2",
    "dark_skeleton",
    "dog",
    "elder_skeleton",
    "elf",
    "enchanter",
    "farmer",
    "girl",
    "girl_2",
    "girl_3",
    "knight",
    "man",
    "robot",
    "scientist",
    "skeleton",
    "spy",
    "thief",
    "warrior",
    "woman",
    "woman_2",
    "woman_wizard",
];

const SKIN_W: u32 = 16;
const SKIN_H: u32 = 24;
const WALK_FRAMES: usize = 4;
const BUILTIN_ROOT: u64 = 0x6b61_6765;

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("{0}: no usable assets")]
    Empty(String),
    #[error("unknown built-in asset `{0}`")]
    UnknownBuiltin(String),
    #[error("failed to read {path}: {reason}")]
    Load { path: String, reason: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpriteSet {
    pub name: String,
    pub frames: Vec<RgbaImage>,
}

impl SpriteSet {
    pub fn frame_size(&self) -> (u32, u32) {
        self.frames[0].dimensions()
    }
}

// ---------------------------------------------------------------------------
// Procedural placeholders
// ---------------------------------------------------------------------------

/// Mean color of background `idx` on an 8×4×4 RGB lattice.
fn background_mean(idx: usize) -> [f64; 3] {
    let r = idx % 8;
    let g = (idx / 8) % 4;
    let b = (idx / 32) % 4;
    [40.0 + 25.0 * r as f64, 40.0 + 58.0 * g as f64, 40.0 + 58.0 * b as f64]
}

/// Bilinear value noise on a lattice of `cell` pixels.
fn value_noise(key: RngKey, x: u32, y: u32, cell: u32, lattice_w: u64) -> f64 {
    let fx = x as f64 / cell as f64;
    let fy = y as f64 / cell as f64;
    let (x0, y0) = (fx.floor() as u64, fy.floor() as u64);
    let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
    let at = |i: u64, j: u64| hash_uniform(key, j * lattice_w + (i % lattice_w)) * 2.0 - 1.0;
    let top = at(x0, y0) * (1.0 - tx) + at(x0 + 1, y0) * tx;
    let bot = at(x0, y0 + 1) * (1.0 - tx) + at(x0 + 1, y0 + 1) * tx;
    top * (1.0 - ty) + bot * ty
}

/// Background `idx` (0-based) at `height × width`. Horizontally periodic so
/// tiling has no seam.
pub fn placeholder_background(key: RngKey, idx: usize, height: u32, width: u32) -> RgbImage {
    let k = key.fold_in(idx as u64);
    let mean = background_mean(idx);
    let octaves: [(u32, f64); 3] = [(32, 14.0), (8, 6.0), (2, 3.0)];
    RgbImage::from_fn(width, height, |x, y| {
        let mut px = [0u8; 3];
        for (c, out) in px.iter_mut().enumerate() {
            let ck = k.fold_in(c as u64);
            let mut v = mean[c];
            for (o, &(cell, amp)) in octaves.iter().enumerate() {
                let lw = (width as u64).div_ceil(cell as u64).max(1);
                v += amp * value_noise(ck.fold_in(o as u64), x, y, cell, lw);
            }
            let grad = (y as f64 / height.max(1) as f64 - 0.5) * 16.0;
            *out = (v + grad).round().clamp(0.0, 255.0) as u8;
        }
        Rgb(px)
    })
}

fn skin_colors(idx: usize) -> [[u8; 3]; 4] {
    // Spread hues around the wheel so mean colors differ between skins.
    let hue = (idx as f64 * 137.507_764) % 360.0;
    let body = hsv_to_rgb(hue, 0.75, 0.85);
    let limbs = hsv_to_rgb((hue + 30.0) % 360.0, 0.6, 0.55);
    let hair = hsv_to_rgb((hue + 180.0) % 360.0, 0.5, 0.35 + 0.02 * (idx % 10) as f64);
    let face = [236, 200, 160];
    [body, limbs, hair, face]
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r, g, b].map(|u| ((u + m) * 255.0).round() as u8)
}

/// A 16×24 walk cycle: head, torso, swinging arms and legs.
pub fn placeholder_skin(idx: usize) -> SpriteSet {
    let [body, limbs, hair, face] = skin_colors(idx);
    let name = BUILTIN_SKINS
        .get(idx)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("skin-{idx}"));
    let swing: [i32; WALK_FRAMES] = [0, 1, 0, -1];
    let frames = swing
        .iter()
        .map(|&s| {
            let mut img = RgbaImage::new(SKIN_W, SKIN_H);
            let mut fill = |x0: i32, y0: i32, x1: i32, y1: i32, c: [u8; 3]| {
                for y in y0.max(0)..y1.min(SKIN_H as i32) {
                    for x in x0.max(0)..x1.min(SKIN_W as i32) {
                        img.put_pixel(x as u32, y as u32, Rgba([c[0], c[1], c[2], 255]));
                    }
                }
            };
            fill(5, 0, 11, 2, hair);
            fill(5, 2, 11, 8, face);
            fill(9, 4, 10, 5, [20, 20, 20]);
            fill(4, 8, 12, 16, body);
            fill(2, 9 + s, 4, 15 + s, limbs);
            fill(12, 9 - s, 14, 15 - s, limbs);
            fill(5 - s, 16, 7 - s, 24, limbs);
            fill(9 + s, 16, 11 + s, 24, limbs);
            img
        })
        .collect();
    SpriteSet { name, frames }
}

/// Deterministic placeholder assets: `n_backgrounds` images and `n_skins`
/// sprite sets, each with at least two frames.
pub fn generate_placeholder_assets(
    key: RngKey,
    n_backgrounds: usize,
    n_skins: usize,
    height: u32,
    width: u32,
) -> (Vec<RgbImage>, Vec<SpriteSet>) {
    let bgs = (0..n_backgrounds)
        .map(|i| placeholder_background(key, i, height, width))
        .collect();
    let skins = (0..n_skins).map(placeholder_skin).collect();
    (bgs, skins)
}

fn builtin_key() -> RngKey {
    RngKey::from_seed(BUILTIN_ROOT)
}

// ---------------------------------------------------------------------------
// Resolution of configured sources
// ---------------------------------------------------------------------------

fn builtin_name(path: &str) -> Option<&str> {
    path.strip_prefix(BUILTIN_PREFIX)
}

fn is_image_file(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
        Some("png" | "jpg" | "jpeg")
    )
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, AssetError> {
    let rd = std::fs::read_dir(dir).map_err(|e| AssetError::Load {
        path: dir.display().to_string(),
        reason: e.to_string(),
    })?;
    let mut v: Vec<PathBuf> = rd.filter_map(|e| e.ok().map(|e| e.path())).collect();
    v.sort();
    Ok(v)
}

fn load_image(path: &Path) -> Result<image::DynamicImage, AssetError> {
    image::open(path).map_err(|e| AssetError::Load {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

/// Scale to `height` rows with nearest sampling, keeping the aspect ratio.
fn fit_height(img: RgbImage, height: u32) -> RgbImage {
    if img.height() == height {
        return img;
    }
    let w = ((img.width() as u64 * height as u64) / img.height() as u64).max(1) as u32;
    image::imageops::resize(&img, w, height, image::imageops::FilterType::Nearest)
}

fn background_from(path: &str, height: u32, width: u32) -> Result<Vec<RgbImage>, AssetError> {
    if let Some(name) = builtin_name(path) {
        if name == "backgrounds" {
            return Ok((0..N_BUILTIN_BACKGROUNDS)
                .map(|i| placeholder_background(builtin_key(), i, height, width))
                .collect());
        }
        let idx = name
            .strip_prefix("bg-")
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|n| (1..=N_BUILTIN_BACKGROUNDS).contains(n))
            .ok_or_else(|| AssetError::UnknownBuiltin(path.to_string()))?;
        return Ok(vec![placeholder_background(builtin_key(), idx - 1, height, width)]);
    }
    let p = Path::new(path);
    if p.is_dir() {
        sorted_entries(p)?
            .into_iter()
            .filter(|e| is_image_file(e))
            .map(|e| Ok(fit_height(load_image(&e)?.to_rgb8(), height)))
            .collect()
    } else {
        Ok(vec![fit_height(load_image(p)?.to_rgb8(), height)])
    }
}

/// Backgrounds for the image mode, in a fixed order.
pub fn resolve_backgrounds(
    dir: Option<&str>,
    paths: Option<&[String]>,
    single: Option<&str>,
    height: u32,
    width: u32,
) -> Result<Vec<RgbImage>, AssetError> {
    let mut out = Vec::new();
    let label;
    if let Some(d) = dir {
        label = d.to_string();
        out = background_from(d, height, width)?;
    } else if let Some(ps) = paths {
        label = ps.join(", ");
        for p in ps {
            out.extend(background_from(p, height, width)?);
        }
    } else if let Some(p) = single {
        label = p.to_string();
        out = background_from(p, height, width)?;
    } else {
        label = "builtin:backgrounds".into();
        out = background_from(&label, height, width)?;
    }
    if out.is_empty() {
        return Err(AssetError::Empty(label));
    }
    Ok(out)
}

fn skin_from_builtin(name: &str) -> Result<SpriteSet, AssetError> {
    BUILTIN_SKINS
        .iter()
        .position(|s| *s == name)
        .map(placeholder_skin)
        .ok_or_else(|| AssetError::UnknownBuiltin(format!("{BUILTIN_PREFIX}{name}")))
}

/// One skin: a `builtin:<skin>` name or a directory of frame images.
fn load_skin(path: &str) -> Result<SpriteSet, AssetError> {
    if let Some(name) = builtin_name(path) {
        return skin_from_builtin(name);
    }
    let p = Path::new(path);
    let frames: Vec<RgbaImage> = sorted_entries(p)?
        .into_iter()
        .filter(|e| is_image_file(e))
        .map(|e| Ok(load_image(&e)?.to_rgba8()))
        .collect::<Result<_, AssetError>>()?;
    if frames.is_empty() {
        return Err(AssetError::Empty(path.to_string()));
    }
    let dims = frames[0].dimensions();
    let frames: Vec<RgbaImage> = frames
        .into_iter()
        .map(|f| {
            if f.dimensions() == dims {
                f
            } else {
                image::imageops::resize(&f, dims.0, dims.1, image::imageops::FilterType::Nearest)
            }
        })
        .collect();
    let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(SpriteSet { name, frames })
}

/// Every skin under a sprite directory.
fn load_skin_dir(path: &str) -> Result<Vec<SpriteSet>, AssetError> {
    if builtin_name(path) == Some("sprites") {
        return Ok((0..BUILTIN_SKINS.len()).map(placeholder_skin).collect());
    }
    if builtin_name(path).is_some() {
        return Ok(vec![load_skin(path)?]);
    }
    sorted_entries(Path::new(path))?
        .into_iter()
        .filter(|e| e.is_dir())
        .map(|e| load_skin(&e.to_string_lossy()))
        .collect()
}

/// Skins for a sprite source group. With no option set, every built-in skin.
pub fn resolve_skins(
    dir: Option<&str>,
    paths: Option<&[String]>,
    single: Option<&str>,
) -> Result<Vec<SpriteSet>, AssetError> {
    let (label, skins) = if let Some(d) = dir {
        (d.to_string(), load_skin_dir(d)?)
    } else if let Some(ps) = paths {
        (ps.join(", "), ps.iter().map(|p| load_skin(p)).collect::<Result<_, _>>()?)
    } else if let Some(p) = single {
        (p.to_string(), vec![load_skin(p)?])
    } else {
        ("builtin:sprites".to_string(), load_skin_dir("builtin:sprites")?)
    };
    if skins.is_empty() {
        return Err(AssetError::Empty(label));
    }
    Ok(skins)
}
