//! Latent state of one environment.

use std::sync::Arc;

use crate::dynamics::AgentKinematics;
use crate::layout::Heightfield;
use crate::rng::RngKey;

/// World-fixed NPC standing on the terrain.
#[derive(Clone, Debug, PartialEq)]
pub struct Npc {
    pub x: f64,
    /// Feet row.
    pub y: f64,
    pub skin: usize,
    pub anim_offset: u32,
}

/// NPC fixed in camera coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct StickyNpc {
    /// Offset of the sprite center from the screen center.
    pub x_offset: i32,
    /// Offset of the resting feet row from `base_ground_y`.
    pub y_offset: i32,
    /// Current jump displacement (non-positive) and vertical velocity.
    pub dy: f64,
    pub vy: f64,
    pub skin: usize,
    pub anim_offset: u32,
}

/// Moving shape in screen coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Distractor {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub angle: f64,
    pub omega: f64,
    pub shape: usize,
    pub color: usize,
    pub size: u32,
}

/// Subkeys for each independent random subsystem of an episode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EpisodeKeys {
    pub episode: RngKey,
    pub layout: RngKey,
    pub visuals: RngKey,
    pub npcs: RngKey,
    pub sticky: RngKey,
    pub distractors: RngKey,
    pub filters: RngKey,
    pub lights: RngKey,
}

impl EpisodeKeys {
    pub fn derive(episode: RngKey) -> Self {
        EpisodeKeys {
            episode,
            layout: episode.child(0),
            visuals: episode.child(1),
            npcs: episode.child(2),
            sticky: episode.child(3),
            distractors: episode.child(4),
            filters: episode.child(5),
            lights: episode.child(6),
        }
    }

    /// Key for the episode that follows an auto-reset.
    pub fn next_episode(&self) -> RngKey {
        self.episode.child(7)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointLight {
    pub cx: f64,
    pub cy: f64,
    pub color: [u8; 3],
}

/// Per-episode choices that only affect rendering.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeVisuals {
    pub background_index: usize,
    pub background_color: [u8; 3],
    /// Frozen H×W×3 noise field for the noise background mode.
    pub noise: Option<Arc<Vec<u8>>>,
    pub agent_skin: usize,
    pub agent_shape: usize,
    pub agent_color: usize,
    pub lights: Vec<PointLight>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatentState {
    pub agent: AgentKinematics,
    pub x_max: f64,
    pub x_init: f64,
    pub heightfield: Arc<Heightfield>,
    pub npcs: Vec<Npc>,
    pub sticky: Vec<StickyNpc>,
    pub distractors: Vec<Distractor>,
    pub camera_x: f64,
    pub t: u32,
    pub keys: EpisodeKeys,
    pub visuals: EpisodeVisuals,
}
