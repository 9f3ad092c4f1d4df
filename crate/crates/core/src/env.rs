//! Single and batched environments.
//!
//! Every random choice in an episode is drawn from a subkey of the episode
//! key (see [`EpisodeKeys`]), so results depend only on `(config, key,
//! actions)` and never on batch size, batch composition or thread schedule.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets::AssetError;
use crate::config::{BackgroundMode, ConfigError, EnvConfig};
use crate::dynamics::{
    compute_reward, is_truncated, physics_step, Action, AgentKinematics, DynamicsError,
    RewardParams,
};
use crate::layout::{generate_layout, ground_height_at};
use crate::postfx::{postprocess, Scratch};
use crate::renderer::{render_core, Frame, Scene};
use crate::rng::{KeyStream, RngKey};
use crate::state::{
    Distractor, EpisodeKeys, EpisodeVisuals, LatentState, Npc, PointLight, StickyNpc,
};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("n_episodes must be at least 1")]
    NoEpisodes,
    #[error("expected {expected} actions, got {got}")]
    BatchSize { expected: usize, got: usize },
}

/// Latent metrics exposed alongside each observation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Info {
    /// `x - x_init`, pixels.
    pub distance: f64,
    /// `distance / dist_to_success`, unclamped.
    pub progress: f64,
    /// Whether the furthest point reached is at least `dist_to_success` from
    /// the spawn. Stays true for the rest of the episode.
    pub success: bool,
    pub x: f64,
    pub t: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub obs: Frame,
    pub reward: f64,
    /// Always false: episodes end only by truncation.
    pub terminated: bool,
    pub truncated: bool,
    pub info: Info,
}

/// Compensated (Neumaier) running sum, so long sums of equal rewards are exact
/// whenever the exact total is representable.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

const SWITCH_TAG: u64 = 0x5357;

fn pick(s: &mut KeyStream, n: usize) -> usize {
    if n == 0 {
        0
    } else {
        s.below(n as u64) as usize
    }
}

/// An environment definition: validated config plus resolved assets.
#[derive(Clone, Debug)]
pub struct Env {
    scene: Arc<Scene>,
}

impl Env {
    pub fn new(config: &EnvConfig) -> Result<Env, EnvError> {
        config.validate()?;
        Ok(Env { scene: Arc::new(Scene::new(config)?) })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.scene.config
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn frame_len(&self) -> usize {
        self.scene.frame_len()
    }

    pub fn new_frame(&self) -> Frame {
        Frame::new(self.config().height as usize, self.config().width as usize)
    }

    fn sample_visuals(&self, keys: &EpisodeKeys) -> EpisodeVisuals {
        let c = self.config();
        let sc = &self.scene;
        let sub = |i: u64| keys.visuals.fold_in(i).stream();
        let noise = (c.background.mode == BackgroundMode::Noise).then(|| {
            let mut s = sub(2);
            let n = c.height as usize * c.width as usize * 3;
            Arc::new((0..n).map(|_| s.below(256) as u8).collect::<Vec<u8>>())
        });
        let lights = if c.effects.point_light_enabled {
            let mut s = keys.lights.stream();
            (0..c.effects.point_light_count)
                .map(|_| PointLight {
                    cx: s.uniform() * c.width as f64,
                    cy: s.uniform() * c.height as f64,
                    color: sc.light_colors[pick(&mut s, sc.light_colors.len())],
                })
                .collect()
        } else {
            Vec::new()
        };
        EpisodeVisuals {
            background_index: pick(&mut sub(0), sc.backgrounds.len()),
            background_color: sc
                .background_colors
                .get(pick(&mut sub(1), sc.background_colors.len()))
                .copied()
                .unwrap_or([0, 0, 0]),
            noise,
            agent_skin: pick(&mut sub(3), sc.agent_skins.len()),
            agent_shape: pick(&mut sub(4), sc.agent_shapes.len()),
            agent_color: pick(&mut sub(5), sc.agent_colors.len()),
            lights,
        }
    }

    /// Initial latent state for an episode key.
    pub fn reset_state(&self, key: RngKey) -> LatentState {
        let c = self.config();
        let keys = EpisodeKeys::derive(key);
        let hf = Arc::new(generate_layout(&c.layout, keys.layout));
        let x_init = c.character.width as f64;
        let agent = AgentKinematics::spawn(x_init, &hf);

        let mut npcs = Vec::new();
        if c.npc.enabled {
            let mut s = keys.npcs.stream();
            let n = s.int_inclusive(c.npc.min_npc_count as i64, c.npc.max_npc_count as i64);
            // Stratified over the span an episode can bring into view: NPC i
            // is uniform in the i-th of n equal segments.
            let reach = x_init + c.episode_length as f64 * c.physics.move_speed as f64 + c.width as f64;
            let seg = reach.min(c.layout.length as f64) / n.max(1) as f64;
            for i in 0..n {
                let x = (i as f64 + s.uniform()) * seg;
                let g = ground_height_at(&hf, x.round() as i64);
                npcs.push(Npc {
                    x,
                    y: (g - c.npc.spawn_y_offset) as f64,
                    skin: pick(&mut s, self.scene.npc_skins.len()),
                    anim_offset: s.below(1 << 16) as u32,
                });
            }
        }

        let mut sticky = Vec::new();
        if c.npc.sticky_enabled {
            let n = &c.npc;
            let mut s = keys.sticky.stream();
            let count = s.int_inclusive(n.min_sticky_count as i64, n.max_sticky_count as i64);
            for i in 0..count as usize {
                let x_offset = if n.sticky_x_offsets.is_empty() {
                    s.int_inclusive(n.sticky_x_min as i64, n.sticky_x_max as i64) as i32
                } else {
                    n.sticky_x_offsets[i % n.sticky_x_offsets.len()]
                };
                sticky.push(StickyNpc {
                    x_offset,
                    y_offset: s.int_inclusive(n.sticky_y_min_offset as i64, n.sticky_y_max_offset as i64) as i32,
                    dy: 0.0,
                    vy: 0.0,
                    skin: pick(&mut s, self.scene.sticky_skins.len()),
                    anim_offset: s.below(1 << 16) as u32,
                });
            }
        }

        let mut distractors = Vec::new();
        if c.distractors.enabled {
            let d = &c.distractors;
            let mut s = keys.distractors.stream();
            for _ in 0..d.count {
                let speed = if d.can_move { s.uniform_range(d.min_speed, d.max_speed) } else { 0.0 };
                let dir = s.uniform() * std::f64::consts::TAU;
                let (angle, omega) = if d.can_rotate {
                    (s.uniform() * 360.0, s.uniform_range(d.min_rotation_speed, d.max_rotation_speed))
                } else {
                    (0.0, 0.0)
                };
                distractors.push(Distractor {
                    x: s.uniform() * c.width as f64,
                    y: s.uniform() * c.height as f64,
                    vx: speed * dir.cos(),
                    vy: speed * dir.sin(),
                    angle,
                    omega,
                    shape: pick(&mut s, self.scene.distractor_shapes.len()),
                    color: pick(&mut s, self.scene.distractor_colors.len()),
                    size: s.int_inclusive(d.min_size as i64, d.max_size as i64) as u32,
                });
            }
        }

        let visuals = self.sample_visuals(&keys);
        let mut state = LatentState {
            agent,
            x_max: x_init,
            x_init,
            heightfield: hf,
            npcs,
            sticky,
            distractors,
            camera_x: 0.0,
            t: 0,
            keys,
            visuals,
        };
        state.camera_x = self.camera_target(&state, 0.0);
        state
    }

    fn camera_target(&self, s: &LatentState, current: f64) -> f64 {
        let c = self.config();
        let margin = c.width as f64 / 4.0;
        let max_cam = (c.layout.length as f64 - c.width as f64).max(0.0);
        current.max(s.agent.x - margin).clamp(0.0, max_cam)
    }

    pub fn info(&self, s: &LatentState) -> Info {
        let d = self.config().dist_to_success;
        let distance = s.agent.x - s.x_init;
        Info {
            distance,
            progress: distance / d,
            success: s.x_max - s.x_init >= d,
            x: s.agent.x,
            t: s.t,
        }
    }

    /// Render the observation of `s` into `out` (length `H·W·3`).
    pub fn observe_into(&self, s: &LatentState, out: &mut [u8], scratch: &mut Scratch) {
        let c = self.config();
        render_core(s, &self.scene, out);
        let lights = c.effects.point_light_enabled.then_some((&c.effects, &s.visuals.lights[..]));
        postprocess(
            out,
            c.height as usize,
            c.width as usize,
            lights,
            &self.scene.filters,
            s.keys.filters.fold_in(s.t as u64),
            scratch,
        );
    }

    pub fn observe(&self, s: &LatentState) -> Frame {
        let mut f = self.new_frame();
        self.observe_into(s, &mut f.data, &mut Scratch::default());
        f
    }

    pub fn reset(&self, key: RngKey) -> (Frame, LatentState) {
        let s = self.reset_state(key);
        (self.observe(&s), s)
    }

    /// Latent transition and reward, without rendering.
    pub fn transition(&self, s: &LatentState, action: i64) -> Result<(LatentState, f64), EnvError> {
        let c = self.config();
        let action = Action::new(action)?;
        if is_truncated(s.t, c.episode_length) {
            return Err(DynamicsError::EpisodeFinished { t: s.t, episode_length: c.episode_length }.into());
        }
        let mut n = s.clone();
        n.agent = physics_step(&s.agent, action, &c.physics, &s.heightfield);
        let reward = compute_reward(s.agent.x, s.x_max, n.agent.x, action, &RewardParams::from(c));
        n.x_max = s.x_max.max(n.agent.x);
        n.t = s.t + 1;
        n.camera_x = self.camera_target(&n, s.camera_x);
        self.advance_entities(&mut n, s.t);
        Ok((n, reward))
    }

    fn advance_entities(&self, n: &mut LatentState, t: u32) {
        let c = self.config();
        if !n.sticky.is_empty() {
            let mut s = n.keys.sticky.fold_in(t as u64 + 1).stream();
            for st in &mut n.sticky {
                let jump = s.bernoulli(c.npc.sticky_jump_probability);
                if c.npc.sticky_can_jump && jump && st.dy == 0.0 && st.vy == 0.0 {
                    st.vy = c.physics.jump_force;
                }
                if st.vy != 0.0 || st.dy < 0.0 {
                    st.vy = (st.vy + c.physics.gravity).min(c.physics.max_fall_speed);
                    st.dy += st.vy;
                    if st.dy >= 0.0 {
                        st.dy = 0.0;
                        st.vy = 0.0;
                    }
                }
            }
        }
        let (w, h) = (c.width as f64, c.height as f64);
        for d in &mut n.distractors {
            d.x += d.vx;
            d.y += d.vy;
            if d.x < 0.0 || d.x > w {
                d.vx = -d.vx;
                d.x = if d.x < 0.0 { -d.x } else { 2.0 * w - d.x };
            }
            if d.y < 0.0 || d.y > h {
                d.vy = -d.vy;
                d.y = if d.y < 0.0 { -d.y } else { 2.0 * h - d.y };
            }
            d.angle = (d.angle + d.omega).rem_euclid(360.0);
        }
        let bg = &c.background;
        if bg.mode == BackgroundMode::Image && bg.switch_frequency > 0.0 {
            let mut s = n.keys.visuals.fold_in(SWITCH_TAG).fold_in(t as u64).stream();
            if s.bernoulli(bg.switch_frequency) {
                n.visuals.background_index = pick(&mut s, self.scene.backgrounds.len());
            }
        }
    }

    /// One step from `s`: returns the next state and its step result.
    pub fn step(&self, s: &LatentState, action: i64) -> Result<(LatentState, StepResult), EnvError> {
        let (n, reward) = self.transition(s, action)?;
        let obs = self.observe(&n);
        let result = StepResult {
            obs,
            reward,
            terminated: false,
            truncated: is_truncated(n.t, self.config().episode_length),
            info: self.info(&n),
        };
        Ok((n, result))
    }

    pub fn batched_reset(&self, keys: &[RngKey]) -> (Vec<Frame>, Vec<LatentState>) {
        keys.par_iter().map(|&k| self.reset(k)).unzip()
    }

    pub fn batched_step(
        &self,
        states: &[LatentState],
        actions: &[i64],
    ) -> Result<Vec<Result<(LatentState, StepResult), EnvError>>, EnvError> {
        if states.len() != actions.len() {
            return Err(EnvError::BatchSize { expected: states.len(), got: actions.len() });
        }
        Ok(states.par_iter().zip(actions.par_iter()).map(|(s, &a)| self.step(s, a)).collect())
    }
}

// ---------------------------------------------------------------------------
// Batch with a flat observation buffer
// ---------------------------------------------------------------------------

/// Per-environment outcome of a batch step. On truncation with auto-reset,
/// `info` describes the finished episode and the stored state and
/// observation already belong to the next one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: Info,
}

/// N environments sharing one config. Observations live in one contiguous
/// `N × H × W × 3` row-major buffer.
pub struct BatchEnv {
    env: Env,
    states: Vec<LatentState>,
    obs: Vec<u8>,
    auto_reset: bool,
}

impl BatchEnv {
    pub fn new(env: Env, keys: &[RngKey], auto_reset: bool) -> Self {
        let fl = env.frame_len();
        let mut b = BatchEnv { env, states: Vec::new(), obs: vec![0; fl * keys.len()], auto_reset };
        b.reset(keys);
        b
    }

    pub fn from_seed(env: Env, n: usize, seed: u64, auto_reset: bool) -> Self {
        let keys = RngKey::from_seed(seed).split(n);
        Self::new(env, &keys, auto_reset)
    }

    pub fn reset(&mut self, keys: &[RngKey]) {
        let fl = self.env.frame_len();
        self.obs.resize(fl * keys.len(), 0);
        let env = &self.env;
        self.states = self
            .obs
            .par_chunks_mut(fl)
            .zip(keys.par_iter())
            .map_init(Scratch::default, |scratch, (out, &k)| {
                let s = env.reset_state(k);
                env.observe_into(&s, out, scratch);
                s
            })
            .collect();
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    pub fn states(&self) -> &[LatentState] {
        &self.states
    }

    pub fn obs(&self) -> &[u8] {
        &self.obs
    }

    pub fn frame(&self, i: usize) -> Frame {
        let fl = self.env.frame_len();
        let c = self.env.config();
        Frame::from_raw(c.height as usize, c.width as usize, self.obs[i * fl..(i + 1) * fl].to_vec())
    }

    /// Step every environment. Invalid actions fail per index and leave that
    /// environment unchanged.
    pub fn step(&mut self, actions: &[i64]) -> Result<Vec<Result<Transition, EnvError>>, EnvError> {
        if actions.len() != self.states.len() {
            return Err(EnvError::BatchSize { expected: self.states.len(), got: actions.len() });
        }
        let fl = self.env.frame_len();
        let env = &self.env;
        let auto = self.auto_reset;
        let ep_len = env.config().episode_length;
        Ok(self
            .obs
            .par_chunks_mut(fl)
            .zip(self.states.par_iter_mut())
            .zip(actions.par_iter())
            .map_init(Scratch::default, |scratch, ((out, state), &a)| {
                let (next, reward) = env.transition(state, a)?;
                let truncated = is_truncated(next.t, ep_len);
                let info = env.info(&next);
                *state = if truncated && auto { env.reset_state(next.keys.next_episode()) } else { next };
                env.observe_into(state, out, scratch);
                Ok(Transition { reward, terminated: false, truncated, info })
            })
            .collect())
    }
}

// ---------------------------------------------------------------------------
// Policies and rollouts
// ---------------------------------------------------------------------------

/// Maps an observation to an action bitmask.
pub trait Policy: Send {
    fn act(&mut self, obs: &Frame) -> i64;
}

impl<F: FnMut(&Frame) -> i64 + Send> Policy for F {
    fn act(&mut self, obs: &Frame) -> i64 {
        self(obs)
    }
}

/// Serializable description of a scripted policy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PolicySpec {
    Idle,
    Right,
    Random,
    Constant { action: u8 },
    /// Cycles through `actions`, one per step.
    Periodic { actions: Vec<u8> },
}

impl PolicySpec {
    pub fn from_name(name: &str) -> Option<PolicySpec> {
        match name {
            "idle" => Some(PolicySpec::Idle),
            "right" => Some(PolicySpec::Right),
            "random" => Some(PolicySpec::Random),
            _ => None,
        }
    }

    /// A policy instance; `key` seeds any randomness it uses.
    pub fn instantiate(&self, key: RngKey) -> Box<dyn Policy> {
        match self.clone() {
            PolicySpec::Idle => Box::new(|_: &Frame| 0),
            PolicySpec::Right => Box::new(|_: &Frame| Action::RIGHT.bits() as i64),
            PolicySpec::Constant { action } => Box::new(move |_: &Frame| action as i64),
            PolicySpec::Random => {
                let mut s = key.stream();
                Box::new(move |_: &Frame| s.below(8) as i64)
            }
            PolicySpec::Periodic { actions } => {
                let mut i = 0usize;
                Box::new(move |_: &Frame| {
                    let a = actions.get(i % actions.len().max(1)).copied().unwrap_or(0);
                    i += 1;
                    a as i64
                })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub distance: f64,
    pub progress: f64,
    pub success: bool,
    /// Undiscounted sum of rewards.
    pub episode_return: f64,
    /// `Σ γ^t r_t` for the rollout's `gamma` (equals `episode_return` at 1).
    pub discounted_return: f64,
    pub steps: u32,
}

/// Run `n_episodes` full episodes; episode `i` uses `key.child(i)`.
pub fn rollout(
    env: &Env,
    policy: &mut dyn Policy,
    key: RngKey,
    n_episodes: usize,
) -> Result<Vec<EpisodeSummary>, EnvError> {
    rollout_discounted(env, policy, key, n_episodes, 1.0)
}

pub fn rollout_discounted(
    env: &Env,
    policy: &mut dyn Policy,
    key: RngKey,
    n_episodes: usize,
    gamma: f64,
) -> Result<Vec<EpisodeSummary>, EnvError> {
    if n_episodes == 0 {
        return Err(EnvError::NoEpisodes);
    }
    let mut scratch = Scratch::default();
    let mut frame = env.new_frame();
    (0..n_episodes)
        .map(|i| {
            let mut s = env.reset_state(key.child(i as u64));
            env.observe_into(&s, &mut frame.data, &mut scratch);
            let mut ret = NeumaierSum::default();
            let mut disc = NeumaierSum::default();
            let mut g = 1.0;
            while !is_truncated(s.t, env.config().episode_length) {
                let a = policy.act(&frame);
                let (n, r) = env.transition(&s, a)?;
                s = n;
                env.observe_into(&s, &mut frame.data, &mut scratch);
                ret.add(r);
                disc.add(g * r);
                g *= gamma;
            }
            let info = env.info(&s);
            Ok(EpisodeSummary {
                distance: info.distance,
                progress: info.progress,
                success: info.success,
                episode_return: ret.value(),
                discounted_return: disc.value(),
                steps: s.t,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bench_base() -> EnvConfig {
        let mut c = EnvConfig::default();
        c.npc.enabled = false;
        c
    }

    #[test]
    fn neumaier_exact_on_repeated_rewards() {
        let mut s = NeumaierSum::default();
        for _ in 0..500 {
            s.add(-5.1);
        }
        assert_eq!(s.value(), -2550.0);
    }

    #[test]
    fn idle_policy_return() {
        let env = Env::new(&EnvConfig::default()).unwrap();
        let mut p = PolicySpec::Idle.instantiate(RngKey::from_seed(0));
        let r = rollout(&env, p.as_mut(), RngKey::from_seed(1), 1).unwrap();
        assert_eq!(r[0].episode_return, -2550.0);
        assert_eq!(r[0].distance, 0.0);
        assert!(!r[0].success);
        assert_eq!(r[0].steps, 500);
    }

    #[test]
    fn reset_metrics_and_determinism() {
        let env = Env::new(&EnvConfig::default()).unwrap();
        let (o1, s1) = env.reset(RngKey::from_seed(5));
        let (o2, s2) = env.reset(RngKey::from_seed(5));
        assert_eq!(o1, o2);
        assert_eq!(s1, s2);
        let i = env.info(&s1);
        assert_eq!((i.distance, i.progress, i.success, i.t), (0.0, 0.0, false, 0));
        let (_, s3) = env.reset(RngKey::from_seed(6));
        assert_ne!(s1.heightfield, s3.heightfield);
    }

    #[test]
    fn invalid_action_and_finished_episode() {
        let mut c = bench_base();
        c.episode_length = 2;
        let env = Env::new(&c).unwrap();
        let s = env.reset_state(RngKey::from_seed(0));
        assert!(matches!(env.step(&s, 9), Err(EnvError::Dynamics(DynamicsError::InvalidAction(9)))));
        let (s, r) = env.step(&s, 2).unwrap();
        assert!(!r.truncated && !r.terminated);
        let (s, r) = env.step(&s, 2).unwrap();
        assert!(r.truncated && !r.terminated);
        assert!(matches!(env.step(&s, 0), Err(EnvError::Dynamics(DynamicsError::EpisodeFinished { .. }))));
    }

    #[test]
    fn progress_unclamped_and_success() {
        let env = Env::new(&bench_base()).unwrap();
        let mut s = env.reset_state(RngKey::from_seed(0));
        s.agent.x = s.x_init + 498.0;
        s.x_max = s.agent.x;
        let i = env.info(&s);
        assert!((i.progress - 498.0 / 490.0).abs() < 1e-15);
        assert!(i.success);
        s.agent.x = s.x_init + 490.0;
        s.x_max = s.agent.x;
        assert!(env.info(&s).success);
    }

    #[test]
    fn right_policy_on_flat_terrain() {
        let mut c = bench_base();
        c.layout.p_change = 0.0;
        let env = Env::new(&c).unwrap();
        let mut p = PolicySpec::Right.instantiate(RngKey::from_seed(0));
        let r = rollout(&env, p.as_mut(), RngKey::from_seed(2), 1).unwrap()[0];
        assert_eq!(r.distance, 500.0);
        assert!(r.success);
        assert_eq!(r.episode_return, 0.2 * 500.0 - 0.1 * 500.0);
    }

    #[test]
    fn zero_episodes_rejected() {
        let env = Env::new(&bench_base()).unwrap();
        let mut p = PolicySpec::Idle.instantiate(RngKey::from_seed(0));
        assert!(matches!(rollout(&env, p.as_mut(), RngKey::from_seed(0), 0), Err(EnvError::NoEpisodes)));
    }

    #[test]
    fn batch_matches_scalar_and_reports_per_index_errors() {
        let env = Env::new(&EnvConfig::default()).unwrap();
        let keys = RngKey::from_seed(3).split(4);
        let mut b = BatchEnv::new(env.clone(), &keys, false);
        let (frames, mut states) = env.batched_reset(&keys);
        for (i, f) in frames.iter().enumerate() {
            assert_eq!(&b.frame(i), f);
        }
        let res = b.step(&[2, 8, 4, 6]).unwrap();
        assert!(res[1].is_err());
        for i in [0usize, 2, 3] {
            let (n, r) = env.step(&states[i], [2, 8, 4, 6][i]).unwrap();
            let t = res[i].as_ref().unwrap();
            assert_eq!(t.reward, r.reward);
            assert_eq!(b.frame(i), r.obs);
            states[i] = n;
        }
        assert_eq!(b.states()[1], states[1]);
        assert!(b.step(&[0, 0]).is_err());
    }

    #[test]
    fn auto_reset_starts_next_episode() {
        let mut c = bench_base();
        c.episode_length = 3;
        let env = Env::new(&c).unwrap();
        let mut b = BatchEnv::from_seed(env, 2, 0, true);
        for _ in 0..2 {
            b.step(&[2, 2]).unwrap();
        }
        let r = b.step(&[2, 2]).unwrap();
        let t = r[0].as_ref().unwrap();
        assert!(t.truncated);
        assert_eq!(t.info.t, 3);
        assert_eq!(b.states()[0].t, 0);
        assert!(b.step(&[0, 0]).unwrap().iter().all(|r| r.is_ok()));
    }

    #[test]
    fn policy_specs_parse() {
        let p: PolicySpec = serde_json::from_str(r#"{"kind":"constant","action":2}"#).unwrap();
        assert_eq!(p, PolicySpec::Constant { action: 2 });
        let p: PolicySpec = serde_json::from_str(r#"{"kind":"periodic","actions":[2,6]}"#).unwrap();
        let mut pol = p.instantiate(RngKey::from_seed(0));
        let f = Frame::new(1, 1);
        assert_eq!([pol.act(&f), pol.act(&f), pol.act(&f)], [2, 6, 2]);
    }
}
