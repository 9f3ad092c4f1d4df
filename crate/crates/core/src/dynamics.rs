//! Latent transition kernel and reward. Nothing here reads visual settings.
//!
//! Update order per step:
//! 1. horizontal input sets `vx = move_speed * (RIGHT - LEFT)`;
//! 2. JUMP while grounded sets `vy = jump_force`;
//! 3. gravity: `vy = min(vy + gravity, max_fall_speed)`;
//! 4. without horizontal input, `vx` decays by `ground_friction` when grounded,
//!    `air_resistance` otherwise;
//! 5. `x += vx`, clamped to the level, unless the target column's ground is
//!    above the feet (a wall); then `y += vy`;
//! 6. feet at or below the ground snap onto it, zeroing `vy`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{EnvConfig, PhysicsConfig};
use crate::layout::{ground_height_at, Heightfield};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("invalid action {0}: expected a bitmask in 0..=7")]
    InvalidAction(i64),
    #[error("episode finished: t = {t} >= episode_length = {episode_length}")]
    EpisodeFinished { t: u32, episode_length: u32 },
}

/// Bitmask action: LEFT = 1, RIGHT = 2, JUMP = 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action(u8);

impl Action {
    pub const NOOP: Action = Action(0);
    pub const LEFT: Action = Action(1);
    pub const RIGHT: Action = Action(2);
    pub const JUMP: Action = Action(4);

    pub fn new(bits: i64) -> Result<Action, DynamicsError> {
        if (0..=7).contains(&bits) {
            Ok(Action(bits as u8))
        } else {
            Err(DynamicsError::InvalidAction(bits))
        }
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn left(self) -> bool {
        self.0 & 1 != 0
    }

    pub fn right(self) -> bool {
        self.0 & 2 != 0
    }

    pub fn jump(self) -> bool {
        self.0 & 4 != 0
    }

    /// Horizontal input in {-1, 0, 1}; LEFT and RIGHT together cancel.
    pub fn direction(self) -> i32 {
        self.right() as i32 - self.left() as i32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Facing {
    Left,
    Right,
}

/// `x` is the horizontal center of the agent; `y` is the feet row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentKinematics {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub grounded: bool,
    pub facing: Facing,
    /// Steps spent moving horizontally; drives walk-cycle animation.
    pub anim_ticks: u32,
    /// Whether the last step changed the integer column.
    pub moving: bool,
}

impl AgentKinematics {
    pub fn spawn(x: f64, hf: &Heightfield) -> Self {
        AgentKinematics {
            x,
            y: ground_height_at(hf, x.round() as i64) as f64,
            vx: 0.0,
            vy: 0.0,
            grounded: true,
            facing: Facing::Right,
            anim_ticks: 0,
            moving: false,
        }
    }
}

pub fn physics_step(
    agent: &AgentKinematics,
    action: Action,
    physics: &PhysicsConfig,
    hf: &Heightfield,
) -> AgentKinematics {
    let mut a = *agent;
    let dir = action.direction();
    if dir != 0 {
        a.vx = physics.move_speed as f64 * dir as f64;
        a.facing = if dir > 0 { Facing::Right } else { Facing::Left };
    }
    if action.jump() && a.grounded {
        a.vy = physics.jump_force;
        a.grounded = false;
    }
    a.vy = (a.vy + physics.gravity).min(physics.max_fall_speed);
    if dir == 0 {
        a.vx *= if a.grounded { physics.ground_friction } else { physics.air_resistance };
    }

    let max_x = (hf.len() - 1) as f64;
    let nx = (a.x + a.vx).clamp(0.0, max_x);
    let target_ground = ground_height_at(hf, nx.round() as i64) as f64;
    if target_ground < a.y {
        a.vx = 0.0;
    } else {
        a.x = nx;
    }
    a.y += a.vy;

    let g = ground_height_at(hf, a.x.round() as i64) as f64;
    if a.y >= g {
        a.y = g;
        a.vy = 0.0;
        a.grounded = true;
    } else {
        a.grounded = false;
    }
    a.moving = a.x.round() != agent.x.round();
    if a.moving {
        a.anim_ticks += 1;
    }
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub forward_reward_scale: f64,
    pub jump_penalty: f64,
    pub timestep_penalty: f64,
    pub idle_penalty: f64,
}

impl From<&EnvConfig> for RewardParams {
    fn from(c: &EnvConfig) -> Self {
        RewardParams {
            forward_reward_scale: c.forward_reward_scale,
            jump_penalty: c.jump_penalty,
            timestep_penalty: c.timestep_penalty,
            idle_penalty: c.idle_penalty,
        }
    }
}

/// `r = a1 * max(0, x_next - x_max_prev) - (a2 * jump + a3 + a4 * idle)`,
/// where idle means the rounded position did not change.
pub fn compute_reward(
    x_prev: f64,
    x_max_prev: f64,
    x_next: f64,
    action: Action,
    p: &RewardParams,
) -> f64 {
    let progress = (x_next - x_max_prev).max(0.0);
    let jump = if action.jump() { p.jump_penalty } else { 0.0 };
    let idle = if x_next.round() == x_prev.round() { p.idle_penalty } else { 0.0 };
    p.forward_reward_scale * progress - (jump + p.timestep_penalty + idle)
}

pub fn is_truncated(t: u32, episode_length: u32) -> bool {
    t >= episode_length
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::LayoutConfig;
    use crate::layout::generate_layout;
    use crate::rng::RngKey;
    use proptest::prelude::*;

    fn flat(len: usize, y: i32) -> Heightfield {
        Heightfield { ground_y: vec![y; len], color_index: 0 }
    }

    fn defaults() -> (PhysicsConfig, RewardParams) {
        let c = EnvConfig::default();
        (c.physics.clone(), RewardParams::from(&c))
    }

    #[test]
    fn action_decoding() {
        assert!(Action::new(9).is_err());
        assert!(Action::new(-1).is_err());
        assert_eq!(Action::new(3).unwrap().direction(), 0);
        assert_eq!(Action::new(6).unwrap().direction(), 1);
        assert!(Action::new(5).unwrap().jump());
    }

    #[test]
    fn right_moves_full_speed_when_grounded() {
        let (p, _) = defaults();
        let hf = flat(100, 96);
        let a = AgentKinematics::spawn(16.0, &hf);
        let b = physics_step(&a, Action::RIGHT, &p, &hf);
        assert_eq!(b.x, 17.0);
        assert_eq!(b.vx, 1.0);
        assert!(b.grounded);
        let c = physics_step(&b, Action::NOOP, &p, &hf);
        assert_eq!(c.vx, 0.8);
        assert_eq!(c.x, 17.8);
    }

    #[test]
    fn jump_from_ground() {
        let (p, _) = defaults();
        let hf = flat(100, 96);
        let a = AgentKinematics::spawn(16.0, &hf);
        let b = physics_step(&a, Action::JUMP, &p, &hf);
        assert_eq!(b.vy, -6.75);
        assert!(!b.grounded);
        assert_eq!(b.y, 96.0 - 6.75);
        let c = physics_step(&b, Action::JUMP, &p, &hf);
        assert_eq!(c.vy, -6.0);
    }

    #[test]
    fn wall_blocks_and_jump_clears() {
        let (p, _) = defaults();
        let mut g = vec![96; 40];
        for y in g.iter_mut().skip(20) {
            *y = 76;
        }
        let hf = Heightfield { ground_y: g, color_index: 0 };
        let mut a = AgentKinematics::spawn(19.0, &hf);
        a = physics_step(&a, Action::RIGHT, &p, &hf);
        assert_eq!(a.x, 19.0);
        assert_eq!(a.vx, 0.0);
        a = physics_step(&a, Action::new(6).unwrap(), &p, &hf);
        for _ in 0..25 {
            a = physics_step(&a, Action::RIGHT, &p, &hf);
        }
        assert!(a.x > 20.0);
        assert_eq!(a.y, 76.0);
    }

    #[test]
    fn falls_off_a_ledge() {
        let (p, _) = defaults();
        let mut g = vec![76; 40];
        for y in g.iter_mut().skip(20) {
            *y = 96;
        }
        let hf = Heightfield { ground_y: g, color_index: 0 };
        let mut a = AgentKinematics::spawn(19.0, &hf);
        a = physics_step(&a, Action::RIGHT, &p, &hf);
        assert!(!a.grounded);
        for _ in 0..20 {
            a = physics_step(&a, Action::NOOP, &p, &hf);
        }
        assert_eq!(a.y, 96.0);
        assert!(a.grounded);
    }

    #[test]
    fn reward_closed_forms() {
        let (_, r) = defaults();
        assert_eq!(compute_reward(20.0, 20.0, 21.0, Action::RIGHT, &r), 0.1);
        assert_eq!(compute_reward(20.0, 20.0, 20.0, Action::JUMP, &r), -15.1);
        assert_eq!(compute_reward(20.0, 20.0, 19.0, Action::LEFT, &r), -0.1);
        assert_eq!(compute_reward(20.0, 20.0, 20.0, Action::NOOP, &r), -5.1);
    }

    #[test]
    fn truncation() {
        assert!(!is_truncated(499, 500));
        assert!(is_truncated(500, 500));
    }

    proptest! {
        #[test]
        fn random_rollout_invariants(seed in any::<u64>(), actions in prop::collection::vec(0i64..8, 1..300)) {
            let (p, r) = defaults();
            let hf = generate_layout(&LayoutConfig::default(), RngKey::from_seed(seed));
            let mut a = AgentKinematics::spawn(16.0, &hf);
            let mut x_max = a.x;
            for bits in actions {
                let act = Action::new(bits).unwrap();
                let b = physics_step(&a, act, &p, &hf);
                prop_assert_eq!(b, physics_step(&a, act, &p, &hf));
                prop_assert!(b.vy <= p.max_fall_speed);
                prop_assert!(b.x >= 0.0 && b.x <= (hf.len() - 1) as f64);
                if b.grounded {
                    prop_assert_eq!(b.y, ground_height_at(&hf, b.x.round() as i64) as f64);
                }
                if act.direction() == 0 {
                    prop_assert!(b.vx.abs() <= a.vx.abs());
                }
                let rew = compute_reward(a.x, x_max, b.x, act, &r);
                prop_assert!(rew <= r.forward_reward_scale * p.move_speed as f64 + 1e-12);
                let new_max = x_max.max(b.x);
                prop_assert!(new_max >= x_max);
                x_max = new_max;
                a = b;
            }
        }
    }
}
