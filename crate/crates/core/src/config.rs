//! The configuration surface of the environment.
//!
//! One YAML document configures everything: episode/reward settings and the
//! screen size at the top level, then the groups `background`, `character`,
//! `npc`, `distractors`, `filters`, `effects`, `layout` and `physics`. Field
//! names are a stable contract; suite files and error messages use the same
//! dotted paths (`filters.hue_shift`, `layout.p_change`, `H`, ...).
//!
//! Absent fields take their documented defaults. Unknown keys are reported as
//! warnings and otherwise ignored; range violations are fatal.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub type Rgb = [u8; 3];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to parse configuration: {0}")]
    Parse(String),
    #[error("invalid value for {path}: {reason}")]
    Validation { path: String, reason: String },
    #[error("unknown axis group `{0}` (expected one of background, character, npc, distractors, filters, effects, layout)")]
    UnknownAxis(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(path: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Validation { path: path.to_string(), reason: reason.into() }
}

// ---------------------------------------------------------------------------
// Palettes (CSS RGB for every listed name)
// ---------------------------------------------------------------------------

/// Background and layout colors.
pub const COLOR_PALETTE: [(&str, Rgb); 16] = [
    ("black", [0, 0, 0]),
    ("white", [255, 255, 255]),
    ("red", [255, 0, 0]),
    ("orange", [255, 165, 0]),
    ("yellow", [255, 255, 0]),
    ("green", [0, 128, 0]),
    ("cyan", [0, 255, 255]),
    ("blue", [0, 0, 255]),
    ("purple", [128, 0, 128]),
    ("pink", [255, 192, 203]),
    ("brown", [165, 42, 42]),
    ("gray", [128, 128, 128]),
    ("lime", [0, 255, 0]),
    ("teal", [0, 128, 128]),
    ("indigo", [75, 0, 130]),
    ("magenta", [255, 0, 255]),
];

/// Colors for agent and distractor shapes.
pub const SHAPE_COLORS: [(&str, Rgb); 21] = [
    ("red", [255, 0, 0]),
    ("green", [0, 128, 0]),
    ("blue", [0, 0, 255]),
    ("orange", [255, 165, 0]),
    ("yellow", [255, 255, 0]),
    ("violet", [238, 130, 238]),
    ("magenta", [255, 0, 255]),
    ("cyan", [0, 255, 255]),
    ("pink", [255, 192, 203]),
    ("brown", [165, 42, 42]),
    ("purple", [128, 0, 128]),
    ("lime", [0, 255, 0]),
    ("navy", [0, 0, 128]),
    ("maroon", [128, 0, 0]),
    ("olive", [128, 128, 0]),
    ("teal", [0, 128, 128]),
    ("indigo", [75, 0, 130]),
    ("coral", [255, 127, 80]),
    ("gold", [255, 215, 0]),
    ("silver", [192, 192, 192]),
    ("white", [255, 255, 255]),
];

/// Point-light colors.
pub const LIGHT_COLORS: [(&str, Rgb); 12] = [
    ("warm_white", [255, 244, 229]),
    ("cool_white", [230, 240, 255]),
    ("yellow", [255, 255, 0]),
    ("orange", [255, 165, 0]),
    ("red", [255, 0, 0]),
    ("green", [0, 255, 0]),
    ("cyan", [0, 255, 255]),
    ("blue", [0, 0, 255]),
    ("purple", [128, 0, 128]),
    ("pink", [255, 192, 203]),
    ("gold", [255, 215, 0]),
    ("fire", [255, 90, 20]),
];

pub const SHAPE_NAMES: [&str; 9] = [
    "circle", "cross", "diamond", "ellipse", "line", "polygon", "square", "star", "triangle",
];

pub const PRESET_NAMES: [&str; 5] = ["vintage", "retro", "cyberpunk", "horror", "noir"];

fn lookup(table: &[(&str, Rgb)], name: &str) -> Option<Rgb> {
    table.iter().find(|(n, _)| *n == name).map(|(_, c)| *c)
}

pub fn palette_color(name: &str) -> Option<Rgb> {
    lookup(&COLOR_PALETTE, name)
}

pub fn shape_color(name: &str) -> Option<Rgb> {
    lookup(&SHAPE_COLORS, name)
}

pub fn light_color(name: &str) -> Option<Rgb> {
    lookup(&LIGHT_COLORS, name)
}

// ---------------------------------------------------------------------------
// Groups
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackgroundMode {
    Black,
    Image,
    Noise,
    Color,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackgroundConfig {
    pub mode: BackgroundMode,
    pub image_dir: Option<String>,
    pub image_paths: Option<Vec<String>>,
    pub image_path: Option<String>,
    pub parallax_factor: f64,
    pub tile_horizontal: bool,
    pub switch_frequency: f64,
    pub color_names: Vec<String>,
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        Self {
            mode: BackgroundMode::Black,
            image_dir: None,
            image_paths: None,
            image_path: None,
            parallax_factor: 0.5,
            tile_horizontal: true,
            switch_frequency: 0.0,
            color_names: strings(&["purple", "teal", "indigo"]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CharacterConfig {
    pub width: u32,
    pub height: u32,
    pub use_sprites: bool,
    pub sprite_dir: Option<String>,
    pub sprite_paths: Option<Vec<String>>,
    pub sprite_path: Option<String>,
    pub enable_animation: bool,
    pub animation_fps: f64,
    pub idle_sprite_idx: u32,
    pub use_shape: bool,
    pub shape_types: Vec<String>,
    pub shape_colors: Vec<String>,
    pub shape_rotate: bool,
    /// Degrees per second.
    pub shape_rotation_speed: f64,
}

impl Default for CharacterConfig {
    fn default() -> Self {
        Self {
            width: 16,
            height: 24,
            use_sprites: true,
            sprite_dir: None,
            sprite_paths: None,
            sprite_path: None,
            enable_animation: true,
            animation_fps: 12.0,
            idle_sprite_idx: 0,
            use_shape: false,
            shape_types: strings(&["circle", "star"]),
            shape_colors: strings(&["teal", "indigo"]),
            shape_rotate: true,
            shape_rotation_speed: 5.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NpcConfig {
    pub enabled: bool,
    pub min_npc_count: u32,
    pub max_npc_count: u32,
    pub spawn_y_offset: i32,
    pub animation_fps: f64,
    pub sprite_dir: Option<String>,
    pub sprite_paths: Option<Vec<String>>,
    pub sprite_path: Option<String>,
    pub sticky_enabled: bool,
    pub min_sticky_count: u32,
    pub max_sticky_count: u32,
    pub sticky_sprite_dir: Option<String>,
    pub sticky_sprite_dirs: Option<Vec<String>>,
    pub sticky_sprite_path: Option<String>,
    pub sticky_can_jump: bool,
    pub sticky_jump_probability: f64,
    pub sticky_y_min_offset: i32,
    pub sticky_y_max_offset: i32,
    pub sticky_x_offsets: Vec<i32>,
    pub sticky_x_min: i32,
    pub sticky_x_max: i32,
}

impl Default for NpcConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            min_npc_count: 5,
            max_npc_count: 20,
            spawn_y_offset: 0,
            animation_fps: 12.0,
            sprite_dir: None,
            sprite_paths: None,
            sprite_path: None,
            sticky_enabled: false,
            min_sticky_count: 1,
            max_sticky_count: 5,
            sticky_sprite_dir: None,
            sticky_sprite_dirs: None,
            sticky_sprite_path: None,
            sticky_can_jump: true,
            sticky_jump_probability: 0.01,
            sticky_y_min_offset: -40,
            sticky_y_max_offset: -10,
            sticky_x_offsets: Vec::new(),
            sticky_x_min: -60,
            sticky_x_max: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistractorConfig {
    pub enabled: bool,
    pub count: u32,
    pub shape_types: Vec<String>,
    pub shape_colors: Vec<String>,
    pub can_move: bool,
    /// Pixels per step.
    pub min_speed: f64,
    pub max_speed: f64,
    pub can_rotate: bool,
    /// Degrees per step.
    pub min_rotation_speed: f64,
    pub max_rotation_speed: f64,
    pub min_size: u32,
    pub max_size: u32,
}

impl Default for DistractorConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            count: 5,
            shape_types: strings(&["circle", "star", "cross"]),
            shape_colors: strings(&["red", "green", "blue"]),
            can_move: true,
            min_speed: 0.0,
            max_speed: 2.0,
            can_rotate: true,
            min_rotation_speed: -3.0,
            max_rotation_speed: 3.0,
            min_size: 4,
            max_size: 12,
        }
    }
}

/// The photometric filter group. All-default values are the identity map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterParams {
    pub brightness: f64,
    pub contrast: f64,
    pub gamma: f64,
    pub saturation: f64,
    pub hue_shift: f64,
    pub color_temp: f64,
    pub color_jitter_std: f64,
    pub gaussian_noise_std: f64,
    pub poisson_noise_scale: f64,
    pub blur_sigma: f64,
    pub sharpen_amount: f64,
    pub pixelate_factor: u32,
    pub vignette_strength: f64,
    pub radial_light_strength: f64,
    pub pop_filter_list: Vec<String>,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            brightness: 0.0,
            contrast: 1.0,
            gamma: 1.0,
            saturation: 1.0,
            hue_shift: 0.0,
            color_temp: 0.0,
            color_jitter_std: 0.0,
            gaussian_noise_std: 0.0,
            poisson_noise_scale: 0.0,
            blur_sigma: 0.0,
            sharpen_amount: 0.0,
            pixelate_factor: 1,
            vignette_strength: 0.0,
            radial_light_strength: 0.0,
            pop_filter_list: Vec::new(),
        }
    }
}

impl FilterParams {
    pub fn is_identity(&self) -> bool {
        *self == FilterParams::default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EffectsConfig {
    pub point_light_enabled: bool,
    pub point_light_intensity: f64,
    /// Fraction of `min(H, W)`.
    pub point_light_radius: f64,
    pub point_light_falloff: f64,
    pub point_light_count: u32,
    pub point_light_color_names: Vec<String>,
}

impl Default for EffectsConfig {
    fn default() -> Self {
        Self {
            point_light_enabled: false,
            point_light_intensity: 1.0,
            point_light_radius: 0.1,
            point_light_falloff: 2.0,
            point_light_count: 1,
            point_light_color_names: strings(&["warm_white"]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    pub length: u32,
    pub height_px: u32,
    pub base_ground_y: i32,
    pub pix_per_unit: u32,
    pub ground_thickness: u32,
    pub run_width: u32,
    pub p_change: f64,
    pub p_up_given_change: f64,
    pub min_step_height: u32,
    pub max_step_height: u32,
    pub layout_colors: Vec<String>,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            length: 2048,
            height_px: 128,
            base_ground_y: 96,
            pix_per_unit: 2,
            ground_thickness: 2,
            run_width: 20,
            p_change: 0.7,
            p_up_given_change: 0.5,
            min_step_height: 5,
            max_step_height: 10,
            layout_colors: strings(&["cyan"]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicsConfig {
    pub gravity: f64,
    pub move_speed: u32,
    /// Negative is upwards.
    pub jump_force: f64,
    pub ground_friction: f64,
    pub air_resistance: f64,
    pub max_fall_speed: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            gravity: 0.75,
            move_speed: 1,
            jump_force: -7.5,
            ground_friction: 0.8,
            air_resistance: 0.95,
            max_fall_speed: 8.0,
        }
    }
}

/// The full configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub episode_length: u32,
    pub forward_reward_scale: f64,
    pub jump_penalty: f64,
    pub timestep_penalty: f64,
    pub idle_penalty: f64,
    /// Pixels travelled from the spawn point that count as success.
    pub dist_to_success: f64,
    #[serde(rename = "H")]
    pub height: u32,
    #[serde(rename = "W")]
    pub width: u32,
    pub background: BackgroundConfig,
    pub character: CharacterConfig,
    pub npc: NpcConfig,
    pub distractors: DistractorConfig,
    pub filters: FilterParams,
    pub effects: EffectsConfig,
    pub layout: LayoutConfig,
    pub physics: PhysicsConfig,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            episode_length: 500,
            forward_reward_scale: 0.2,
            jump_penalty: 10.0,
            timestep_penalty: 0.1,
            idle_penalty: 5.0,
            dist_to_success: 490.0,
            height: 128,
            width: 128,
            background: Default::default(),
            character: Default::default(),
            npc: Default::default(),
            distractors: Default::default(),
            filters: Default::default(),
            effects: Default::default(),
            layout: Default::default(),
            physics: Default::default(),
        }
    }
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

/// A key present in the document that the schema does not know.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigWarning {
    pub path: String,
}

impl fmt::Display for ConfigWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown configuration key `{}` ignored", self.path)
    }
}

/// Parse, default and validate a YAML document. Unknown keys are logged.
pub fn load_config(document: &str) -> Result<EnvConfig, ConfigError> {
    let (config, warnings) = load_config_with_warnings(document)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(config)
}

pub fn load_config_with_warnings(
    document: &str,
) -> Result<(EnvConfig, Vec<ConfigWarning>), ConfigError> {
    let raw: serde_yaml::Value =
        serde_yaml::from_str(document).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let raw = match raw {
        serde_yaml::Value::Null => serde_yaml::Value::Mapping(Default::default()),
        v @ serde_yaml::Value::Mapping(_) => v,
        _ => return Err(ConfigError::Parse("top level must be a mapping".into())),
    };
    let as_json = serde_json::to_value(&raw).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let known = serde_json::to_value(EnvConfig::default()).expect("default config serializes");
    let mut warnings = Vec::new();
    collect_unknown(&as_json, &known, "", &mut warnings);

    let config: EnvConfig =
        serde_yaml::from_value(raw).map_err(|e| ConfigError::Parse(e.to_string()))?;
    config.validate()?;
    Ok((config, warnings))
}

pub fn load_config_file(path: impl AsRef<std::path::Path>) -> Result<EnvConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_config(&text)
}

fn collect_unknown(doc: &Value, known: &Value, prefix: &str, out: &mut Vec<ConfigWarning>) {
    let (Value::Object(doc), Value::Object(known)) = (doc, known) else {
        return;
    };
    for (k, v) in doc {
        let path = join(prefix, k);
        match known.get(k) {
            None => out.push(ConfigWarning { path }),
            Some(kv) => collect_unknown(v, kv, &path, out),
        }
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

/// Serialize to a YAML document that `load_config` reads back unchanged.
pub fn to_yaml(config: &EnvConfig) -> String {
    serde_yaml::to_string(config).expect("config serializes")
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

fn finite(path: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, "must be finite"))
    }
}

fn in_range(path: &str, v: f64, lo: f64, hi: f64) -> Result<(), ConfigError> {
    finite(path, v)?;
    if v < lo || v > hi {
        return Err(invalid(path, format!("{v} outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn at_least(path: &str, v: f64, lo: f64) -> Result<(), ConfigError> {
    finite(path, v)?;
    if v < lo {
        return Err(invalid(path, format!("{v} must be >= {lo}")));
    }
    Ok(())
}

fn int_range(path: &str, v: i64, lo: i64, hi: i64) -> Result<(), ConfigError> {
    if v < lo || v > hi {
        return Err(invalid(path, format!("{v} outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn ordered<T: PartialOrd + fmt::Display>(
    path_min: &str,
    min: T,
    path_max: &str,
    max: T,
) -> Result<(), ConfigError> {
    if min > max {
        return Err(invalid(path_min, format!("{min} exceeds {path_max} = {max}")));
    }
    Ok(())
}

fn names_in(
    path: &str,
    names: &[String],
    valid: &[&str],
    require_nonempty: bool,
) -> Result<(), ConfigError> {
    if require_nonempty && names.is_empty() {
        return Err(invalid(path, "must list at least one entry"));
    }
    for n in names {
        if !valid.contains(&n.as_str()) {
            return Err(invalid(path, format!("unknown name `{n}`")));
        }
    }
    Ok(())
}

fn exclusive_sources(path: &str, set: &[bool]) -> Result<(), ConfigError> {
    if set.iter().filter(|&&b| b).count() > 1 {
        return Err(invalid(path, "choose only one source option (directory, path list, or single path)"));
    }
    Ok(())
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let palette: Vec<&str> = COLOR_PALETTE.iter().map(|(n, _)| *n).collect();
        let shape_palette: Vec<&str> = SHAPE_COLORS.iter().map(|(n, _)| *n).collect();
        let light_palette: Vec<&str> = LIGHT_COLORS.iter().map(|(n, _)| *n).collect();

        int_range("episode_length", self.episode_length as i64, 1, i64::MAX)?;
        finite("forward_reward_scale", self.forward_reward_scale)?;
        finite("jump_penalty", self.jump_penalty)?;
        finite("timestep_penalty", self.timestep_penalty)?;
        finite("idle_penalty", self.idle_penalty)?;
        finite("dist_to_success", self.dist_to_success)?;
        if self.dist_to_success <= 0.0 {
            return Err(invalid("dist_to_success", "must be > 0"));
        }
        int_range("H", self.height as i64, 1, 4096)?;
        int_range("W", self.width as i64, 1, 4096)?;

        let bg = &self.background;
        finite("background.parallax_factor", bg.parallax_factor)?;
        in_range("background.switch_frequency", bg.switch_frequency, 0.0, 1.0)?;
        names_in("background.color_names", &bg.color_names, &palette, bg.mode == BackgroundMode::Color)?;
        if bg.mode == BackgroundMode::Image {
            exclusive_sources(
                "background.image_dir",
                &[bg.image_dir.is_some(), bg.image_paths.is_some(), bg.image_path.is_some()],
            )?;
        }

        let ch = &self.character;
        int_range("character.width", ch.width as i64, 1, 1024)?;
        int_range("character.height", ch.height as i64, 1, 1024)?;
        at_least("character.animation_fps", ch.animation_fps, 0.0)?;
        finite("character.shape_rotation_speed", ch.shape_rotation_speed)?;
        if ch.use_sprites && ch.use_shape {
            return Err(invalid("character.use_shape", "use_sprites and use_shape are mutually exclusive"));
        }
        let shape_mode = !ch.use_sprites;
        names_in("character.shape_types", &ch.shape_types, &SHAPE_NAMES, shape_mode)?;
        names_in("character.shape_colors", &ch.shape_colors, &shape_palette, shape_mode)?;
        if ch.use_sprites {
            exclusive_sources(
                "character.sprite_dir",
                &[ch.sprite_dir.is_some(), ch.sprite_paths.is_some(), ch.sprite_path.is_some()],
            )?;
        }

        let npc = &self.npc;
        ordered("npc.min_npc_count", npc.min_npc_count, "npc.max_npc_count", npc.max_npc_count)?;
        int_range("npc.max_npc_count", npc.max_npc_count as i64, 0, 1024)?;
        at_least("npc.animation_fps", npc.animation_fps, 0.0)?;
        ordered("npc.min_sticky_count", npc.min_sticky_count, "npc.max_sticky_count", npc.max_sticky_count)?;
        int_range("npc.max_sticky_count", npc.max_sticky_count as i64, 0, 1024)?;
        in_range("npc.sticky_jump_probability", npc.sticky_jump_probability, 0.0, 1.0)?;
        ordered("npc.sticky_y_min_offset", npc.sticky_y_min_offset, "npc.sticky_y_max_offset", npc.sticky_y_max_offset)?;
        ordered("npc.sticky_x_min", npc.sticky_x_min, "npc.sticky_x_max", npc.sticky_x_max)?;
        if npc.enabled {
            exclusive_sources(
                "npc.sprite_dir",
                &[npc.sprite_dir.is_some(), npc.sprite_paths.is_some(), npc.sprite_path.is_some()],
            )?;
        }
        if npc.sticky_enabled {
            exclusive_sources(
                "npc.sticky_sprite_dir",
                &[
                    npc.sticky_sprite_dir.is_some(),
                    npc.sticky_sprite_dirs.is_some(),
                    npc.sticky_sprite_path.is_some(),
                ],
            )?;
        }

        let d = &self.distractors;
        int_range("distractors.count", d.count as i64, 0, 1024)?;
        names_in("distractors.shape_types", &d.shape_types, &SHAPE_NAMES, d.enabled)?;
        names_in("distractors.shape_colors", &d.shape_colors, &shape_palette, d.enabled)?;
        at_least("distractors.min_speed", d.min_speed, 0.0)?;
        at_least("distractors.max_speed", d.max_speed, 0.0)?;
        ordered("distractors.min_speed", d.min_speed, "distractors.max_speed", d.max_speed)?;
        finite("distractors.min_rotation_speed", d.min_rotation_speed)?;
        finite("distractors.max_rotation_speed", d.max_rotation_speed)?;
        ordered(
            "distractors.min_rotation_speed",
            d.min_rotation_speed,
            "distractors.max_rotation_speed",
            d.max_rotation_speed,
        )?;
        int_range("distractors.min_size", d.min_size as i64, 1, 1024)?;
        ordered("distractors.min_size", d.min_size, "distractors.max_size", d.max_size)?;

        self.filters.validate()?;

        let e = &self.effects;
        in_range("effects.point_light_intensity", e.point_light_intensity, 0.1, 5.0)?;
        in_range("effects.point_light_radius", e.point_light_radius, 0.01, 1.0)?;
        in_range("effects.point_light_falloff", e.point_light_falloff, 1.0, 4.0)?;
        int_range("effects.point_light_count", e.point_light_count as i64, 1, 5)?;
        names_in("effects.point_light_color_names", &e.point_light_color_names, &light_palette, e.point_light_enabled)?;

        let l = &self.layout;
        int_range("layout.length", l.length as i64, 1, 1 << 20)?;
        int_range("layout.height_px", l.height_px as i64, 1, 4096)?;
        int_range("layout.base_ground_y", l.base_ground_y as i64, 70, 127)?;
        int_range("layout.pix_per_unit", l.pix_per_unit as i64, 0, 3)?;
        int_range("layout.ground_thickness", l.ground_thickness as i64, 1, 10)?;
        int_range("layout.run_width", l.run_width as i64, 1, 60)?;
        in_range("layout.p_change", l.p_change, 0.0, 1.0)?;
        in_range("layout.p_up_given_change", l.p_up_given_change, 0.0, 1.0)?;
        int_range("layout.min_step_height", l.min_step_height as i64, 1, 17)?;
        int_range("layout.max_step_height", l.max_step_height as i64, 1, 17)?;
        ordered("layout.min_step_height", l.min_step_height, "layout.max_step_height", l.max_step_height)?;
        names_in("layout.layout_colors", &l.layout_colors, &palette, true)?;
        if l.base_ground_y as i64 > l.height_px as i64 - l.ground_thickness as i64 {
            return Err(invalid(
                "layout.base_ground_y",
                "ground band would extend below layout.height_px",
            ));
        }

        let p = &self.physics;
        in_range("physics.gravity", p.gravity, 0.1, 1.0)?;
        int_range("physics.move_speed", p.move_speed as i64, 1, 1024)?;
        in_range("physics.jump_force", p.jump_force, -10.0, 0.0)?;
        in_range("physics.ground_friction", p.ground_friction, 0.1, 1.0)?;
        in_range("physics.air_resistance", p.air_resistance, 0.1, 1.0)?;
        in_range("physics.max_fall_speed", p.max_fall_speed, 0.1, 10.0)?;
        Ok(())
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        in_range("filters.brightness", self.brightness, -1.0, 1.0)?;
        finite("filters.contrast", self.contrast)?;
        if self.contrast <= 0.0 {
            return Err(invalid("filters.contrast", "must be > 0"));
        }
        in_range("filters.gamma", self.gamma, 0.5, 2.0)?;
        in_range("filters.saturation", self.saturation, 0.0, 2.0)?;
        in_range("filters.hue_shift", self.hue_shift, -180.0, 180.0)?;
        in_range("filters.color_temp", self.color_temp, -1.0, 1.0)?;
        at_least("filters.color_jitter_std", self.color_jitter_std, 0.0)?;
        at_least("filters.gaussian_noise_std", self.gaussian_noise_std, 0.0)?;
        in_range("filters.poisson_noise_scale", self.poisson_noise_scale, 0.0, 1.0)?;
        at_least("filters.blur_sigma", self.blur_sigma, 0.0)?;
        at_least("filters.sharpen_amount", self.sharpen_amount, 0.0)?;
        int_range("filters.pixelate_factor", self.pixelate_factor as i64, 1, 1024)?;
        at_least("filters.vignette_strength", self.vignette_strength, 0.0)?;
        at_least("filters.radial_light_strength", self.radial_light_strength, 0.0)?;
        names_in("filters.pop_filter_list", &self.pop_filter_list, &PRESET_NAMES, false)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Field paths, axis split, diff
// ---------------------------------------------------------------------------

/// Configuration group a field path belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfigGroup {
    Episode,
    Screen,
    Background,
    Character,
    Npc,
    Distractors,
    Filters,
    Effects,
    Layout,
    Physics,
}

/// The seven visual groups that a known-axis shift may touch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisGroup {
    Background,
    Character,
    Npc,
    Distractors,
    Filters,
    Effects,
    Layout,
}

impl AxisGroup {
    pub const ALL: [AxisGroup; 7] = [
        AxisGroup::Background,
        AxisGroup::Character,
        AxisGroup::Npc,
        AxisGroup::Distractors,
        AxisGroup::Filters,
        AxisGroup::Effects,
        AxisGroup::Layout,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AxisGroup::Background => "background",
            AxisGroup::Character => "character",
            AxisGroup::Npc => "npc",
            AxisGroup::Distractors => "distractors",
            AxisGroup::Filters => "filters",
            AxisGroup::Effects => "effects",
            AxisGroup::Layout => "layout",
        }
    }

    pub fn group(self) -> ConfigGroup {
        match self {
            AxisGroup::Background => ConfigGroup::Background,
            AxisGroup::Character => ConfigGroup::Character,
            AxisGroup::Npc => ConfigGroup::Npc,
            AxisGroup::Distractors => ConfigGroup::Distractors,
            AxisGroup::Filters => ConfigGroup::Filters,
            AxisGroup::Effects => ConfigGroup::Effects,
            AxisGroup::Layout => ConfigGroup::Layout,
        }
    }
}

impl fmt::Display for AxisGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AxisGroup {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AxisGroup::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| ConfigError::UnknownAxis(s.to_string()))
    }
}

/// Group of a canonical dotted path.
pub fn group_of_path(path: &str) -> ConfigGroup {
    match path.split('.').next().unwrap_or("") {
        "H" | "W" => ConfigGroup::Screen,
        "background" => ConfigGroup::Background,
        "character" => ConfigGroup::Character,
        "npc" => ConfigGroup::Npc,
        "distractors" => ConfigGroup::Distractors,
        "filters" => ConfigGroup::Filters,
        "effects" => ConfigGroup::Effects,
        "layout" => ConfigGroup::Layout,
        "physics" => ConfigGroup::Physics,
        _ => ConfigGroup::Episode,
    }
}

/// Flatten a config into `(dotted path, value)` leaves. Lists are leaves.
pub fn flatten(config: &EnvConfig) -> BTreeMap<String, Value> {
    let mut out = BTreeMap::new();
    let v = serde_json::to_value(config).expect("config serializes");
    flatten_into(&v, "", &mut out);
    out
}

fn flatten_into(v: &Value, prefix: &str, out: &mut BTreeMap<String, Value>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten_into(child, &join(prefix, k), out);
            }
        }
        leaf => {
            out.insert(prefix.to_string(), leaf.clone());
        }
    }
}

fn unflatten(fields: impl IntoIterator<Item = (String, Value)>) -> Value {
    let mut root = serde_json::Map::new();
    for (path, value) in fields {
        let mut parts: Vec<&str> = path.split('.').collect();
        let last = parts.pop().expect("non-empty path");
        let mut node = &mut root;
        for p in parts {
            node = node
                .entry(p.to_string())
                .or_insert_with(|| Value::Object(Default::default()))
                .as_object_mut()
                .expect("path prefix is an object");
        }
        node.insert(last.to_string(), value);
    }
    Value::Object(root)
}

/// A configuration decomposed into one visual axis and everything else.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisSplit {
    pub axis_group: AxisGroup,
    pub axis_fields: BTreeMap<String, Value>,
    pub rest: BTreeMap<String, Value>,
}

impl AxisSplit {
    /// Reassemble the configuration.
    pub fn merge(&self) -> Result<EnvConfig, ConfigError> {
        let all = self
            .axis_fields
            .iter()
            .chain(self.rest.iter())
            .map(|(k, v)| (k.clone(), v.clone()));
        serde_json::from_value(unflatten(all)).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Replace the axis part with another configuration's axis part.
    pub fn with_axis_from(&self, other: &EnvConfig) -> AxisSplit {
        let theirs = split_axis(other, self.axis_group);
        AxisSplit { axis_fields: theirs.axis_fields, ..self.clone() }
    }
}

pub fn split_axis(config: &EnvConfig, axis: AxisGroup) -> AxisSplit {
    let (axis_fields, rest) = flatten(config)
        .into_iter()
        .partition(|(path, _)| group_of_path(path) == axis.group());
    AxisSplit { axis_group: axis, axis_fields, rest }
}

/// `split_axis` with the group given by name.
pub fn split_axis_named(config: &EnvConfig, axis: &str) -> Result<AxisSplit, ConfigError> {
    Ok(split_axis(config, axis.parse()?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldDiff {
    pub path: String,
    pub a: Value,
    pub b: Value,
}

/// Field-level differences between two configs, in canonical path order.
pub fn diff_configs(a: &EnvConfig, b: &EnvConfig) -> Vec<FieldDiff> {
    let fa = flatten(a);
    let fb = flatten(b);
    fa.into_iter()
        .filter_map(|(path, va)| {
            let vb = fb.get(&path).cloned().unwrap_or(Value::Null);
            (va != vb).then_some(FieldDiff { path, a: va, b: vb })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = load_config("").unwrap();
        assert_eq!(c, EnvConfig::default());
        assert_eq!(c.episode_length, 500);
        assert_eq!(c.physics.gravity, 0.75);
        assert_eq!((c.height, c.width), (128, 128));
    }

    #[test]
    fn listed_defaults() {
        let c = EnvConfig::default();
        assert_eq!(c.forward_reward_scale, 0.2);
        assert_eq!(c.jump_penalty, 10.0);
        assert_eq!(c.timestep_penalty, 0.1);
        assert_eq!(c.idle_penalty, 5.0);
        assert_eq!(c.dist_to_success, 490.0);
        assert_eq!(c.background.mode, BackgroundMode::Black);
        assert_eq!(c.background.parallax_factor, 0.5);
        assert!(c.character.use_sprites && !c.character.use_shape);
        assert_eq!((c.character.width, c.character.height), (16, 24));
        assert!(c.npc.enabled && !c.npc.sticky_enabled);
        assert!(!c.distractors.enabled);
        assert_eq!(c.distractors.max_speed, 2.0);
        assert_eq!(c.distractors.min_rotation_speed, -3.0);
        assert_eq!(c.effects.point_light_count, 1);
        assert_eq!(c.effects.point_light_color_names, vec!["warm_white"]);
        assert_eq!(c.layout.run_width, 20);
        assert_eq!(c.layout.max_step_height, 10);
        assert_eq!(c.physics.jump_force, -7.5);
        assert_eq!(c.physics.air_resistance, 0.95);
        assert!(c.filters.is_identity());
        c.validate().unwrap();
    }

    #[test]
    fn pixelate_zero_rejected() {
        let err = load_config("filters:\n  pixelate_factor: 0\n").unwrap_err();
        match err {
            ConfigError::Validation { path, .. } => assert_eq!(path, "filters.pixelate_factor"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_field_override() {
        let c = load_config("layout:\n  p_change: 0.7\n").unwrap();
        assert_eq!(c, EnvConfig::default());
        let c = load_config("layout:\n  p_change: 0.25\n").unwrap();
        let d = diff_configs(&EnvConfig::default(), &c);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].path, "layout.p_change");
    }

    #[test]
    fn sprite_and_shape_exclusive() {
        let err = load_config("character:\n  use_sprites: true\n  use_shape: true\n").unwrap_err();
        assert!(matches!(err, ConfigError::Validation { ref path, .. } if path == "character.use_shape"));
    }

    #[test]
    fn min_above_max_rejected() {
        let err = load_config("npc:\n  min_npc_count: 30\n").unwrap_err();
        assert!(matches!(err, ConfigError::Validation { ref path, .. } if path == "npc.min_npc_count"));
    }

    #[test]
    fn two_image_sources_rejected() {
        let doc = "background:\n  mode: image\n  image_dir: a\n  image_path: b\n";
        assert!(matches!(load_config(doc), Err(ConfigError::Validation { .. })));
        // Inactive group: not checked.
        let doc = "background:\n  image_dir: a\n  image_path: b\n";
        assert!(load_config(doc).is_ok());
    }

    #[test]
    fn unknown_keys_warn() {
        let doc = "character:\n  mode: sprite\nfoo: 1\n";
        let (c, w) = load_config_with_warnings(doc).unwrap();
        assert_eq!(c, EnvConfig::default());
        let paths: Vec<_> = w.iter().map(|w| w.path.as_str()).collect();
        assert_eq!(paths, vec!["character.mode", "foo"]);
    }

    #[test]
    fn malformed_is_parse_error() {
        assert!(matches!(load_config("layout: [1, 2"), Err(ConfigError::Parse(_))));
        assert!(matches!(load_config("layout:\n  length: abc\n"), Err(ConfigError::Parse(_))));
        assert!(matches!(load_config("- 1\n- 2\n"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn bad_color_name() {
        let err = load_config("layout:\n  layout_colors: [chartreuse]\n").unwrap_err();
        assert!(matches!(err, ConfigError::Validation { ref path, .. } if path == "layout.layout_colors"));
    }

    #[test]
    fn split_filters_has_fifteen_fields() {
        let s = split_axis(&EnvConfig::default(), AxisGroup::Filters);
        assert_eq!(s.axis_fields.len(), 15);
        assert!(s.axis_fields.keys().all(|k| k.starts_with("filters.")));
        assert!(s.rest.keys().all(|k| !k.starts_with("filters.")));
        assert!(s.rest.contains_key("physics.gravity"));
        assert!(s.rest.contains_key("episode_length"));
        assert_eq!(s.merge().unwrap(), EnvConfig::default());
    }

    #[test]
    fn physics_is_not_an_axis() {
        assert!(matches!(
            split_axis_named(&EnvConfig::default(), "physics"),
            Err(ConfigError::UnknownAxis(_))
        ));
        assert!(split_axis_named(&EnvConfig::default(), "npc").is_ok());
    }

    #[test]
    fn diff_single_edit() {
        let a = EnvConfig::default();
        assert!(diff_configs(&a, &a).is_empty());
        let mut b = a.clone();
        b.filters.hue_shift = 180.0;
        let d = diff_configs(&a, &b);
        assert_eq!(
            d,
            vec![FieldDiff {
                path: "filters.hue_shift".into(),
                a: serde_json::json!(0.0),
                b: serde_json::json!(180.0)
            }]
        );
    }

    #[test]
    fn with_axis_from_swaps_only_axis() {
        let a = EnvConfig::default();
        let mut b = a.clone();
        b.filters.saturation = 0.0;
        b.physics.gravity = 0.5;
        let merged = split_axis(&a, AxisGroup::Filters).with_axis_from(&b).merge().unwrap();
        assert_eq!(merged.filters.saturation, 0.0);
        assert_eq!(merged.physics.gravity, 0.75);
    }

    #[test]
    fn yaml_round_trip_defaults() {
        let c = EnvConfig::default();
        assert_eq!(load_config(&to_yaml(&c)).unwrap(), c);
    }
}
