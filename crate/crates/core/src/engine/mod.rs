//! Gravity-point particle simulation.
//!
//! Particles are split into twelve groups, one per frequency bin. Each group
//! is pulled toward its own moving gravity point with a constant-magnitude
//! force, and integrated with semi-implicit Euler plus per-step drag. There
//! are no inter-particle forces, so the update is independent per particle.
//!
//! The colour buffer's alpha channel does not carry opacity: it stores the
//! particle's group index as an exact small integer.

pub mod gravity;

pub use gravity::{cube_center, cube_contains, derive_group_params, y_center, GravityPoints, CUBE_SIDE};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::NUM_BINS;
use crate::audio::HOP_SECONDS;
use crate::palette::Rgb;
use crate::InvalidValue;

pub type Vec3 = [f64; 3];

pub const NUM_GROUPS: usize = NUM_BINS;

/// Below this distance a particle is treated as sitting on its gravity point.
pub const ARRIVAL_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_particles: usize,
    pub seed: u64,
    /// Seconds per step; one step per hop by default.
    pub dt: f64,
    /// Fraction of velocity retained per step.
    pub drag: f64,
    pub base_force: f64,
    pub target_walk_scale: f64,
}

pub const DEFAULT_PARTICLES: usize = 100_000;
pub const DEFAULT_DRAG: f64 = 0.98;

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_particles: DEFAULT_PARTICLES,
            seed: 0,
            dt: HOP_SECONDS,
            drag: DEFAULT_DRAG,
            base_force: 1.0,
            target_walk_scale: 1.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), InvalidValue> {
        if self.n_particles < NUM_GROUPS {
            return Err(InvalidValue::new("particles", format!("{} is fewer than {NUM_GROUPS}", self.n_particles)));
        }
        if u32::try_from(self.n_particles).is_err() {
            return Err(InvalidValue::new("particles", "does not fit the 32-bit particle count"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(InvalidValue::new("dt", format!("{} must be positive", self.dt)));
        }
        if !(self.drag > 0.0 && self.drag <= 1.0) {
            return Err(InvalidValue::new("drag", format!("{} is outside (0, 1]", self.drag)));
        }
        if !(self.base_force.is_finite() && self.base_force >= 0.0) {
            return Err(InvalidValue::new("base-force", format!("{} must be non-negative", self.base_force)));
        }
        if !(self.target_walk_scale.is_finite() && self.target_walk_scale >= 0.0) {
            return Err(InvalidValue::new(
                "target-walk-scale",
                format!("{} must be non-negative", self.target_walk_scale),
            ));
        }
        Ok(())
    }

    /// Largest force any group can receive: full averaged bin, doubled by emphasis.
    pub fn max_force(&self) -> f64 {
        2.0 * self.base_force * 1.5
    }

    /// Upper bound on particle speed for forces up to `max_force`:
    /// the fixed point of `v = drag · (v + F·dt)`.
    pub fn speed_bound(&self, max_force: f64) -> f64 {
        if self.drag >= 1.0 {
            return f64::INFINITY;
        }
        max_force * self.dt * self.drag / (1.0 - self.drag)
    }
}

/// Inputs for one group of particles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupParams {
    pub color_rgb: Rgb,
    /// Gravity point the group is pulled toward.
    pub target: Vec3,
    /// Magnitude of the attraction.
    pub force_amt: f64,
    /// Colour brightness multiplier in `[0, 1]`.
    pub color_mag: f64,
    /// A trigger fired for this group's bin this hop.
    pub emphasis: bool,
    pub y_center: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineParams {
    pub groups: [GroupParams; NUM_GROUPS],
    /// Global brightness multiplier shared by all groups.
    pub color_sensitivity: f64,
}

/// Per-particle state streams fed back each step.
pub const STATE_STREAMS: [&str; 3] = ["position", "velocity", "color"];
/// Inputs each group receives.
pub const GROUP_INPUTS: [&str; 6] = ["target", "color_rgb", "y_center", "emphasis", "color_mag", "force_amt"];
/// Inputs shared by every group.
pub const GLOBAL_INPUTS: [&str; 1] = ["color_sensitivity"];

/// Every named input of the simulation: 3 state streams, 12 × 6 group
/// inputs, and 1 global, 76 in total.
pub fn declared_inputs() -> Vec<String> {
    let mut out: Vec<String> = STATE_STREAMS.iter().map(|s| s.to_string()).collect();
    for g in 0..NUM_GROUPS {
        out.extend(GROUP_INPUTS.iter().map(|i| format!("group[{g}].{i}")));
    }
    out.extend(GLOBAL_INPUTS.iter().map(|s| s.to_string()));
    out
}

/// Structure-of-arrays particle buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    /// RGBA; alpha holds the group index.
    pub colors: Vec<[f64; 4]>,
}

impl ParticleState {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn group_of(&self, particle: usize) -> usize {
        self.colors[particle][3] as usize
    }

    pub fn speed(&self, particle: usize) -> f64 {
        norm(self.velocities[particle])
    }

    pub fn max_speed(&self) -> f64 {
        self.velocities.iter().map(|&v| norm(v)).fold(0.0, f64::max)
    }

    /// Particle count per group.
    pub fn populations(&self) -> [usize; NUM_GROUPS] {
        let mut counts = [0; NUM_GROUPS];
        for c in &self.colors {
            counts[c[3] as usize] += 1;
        }
        counts
    }

    /// Buffers agree in length and every alpha decodes to a valid group.
    pub fn is_consistent(&self) -> bool {
        self.velocities.len() == self.positions.len()
            && self.colors.len() == self.positions.len()
            && self.colors.iter().all(|c| c[3].fract() == 0.0 && (0.0..NUM_GROUPS as f64).contains(&c[3]))
    }
}

/// Seeds `n_particles` particles: particle `i` joins group `i mod 12` and is
/// placed uniformly in that group's cube, at rest, in its base colour.
pub fn init_particles(cfg: &SimConfig, base_colors: &[Rgb; NUM_GROUPS]) -> ParticleState {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let h = CUBE_SIDE / 2.0;
    let n = cfg.n_particles;
    let mut state = ParticleState {
        positions: Vec::with_capacity(n),
        velocities: vec![[0.0; 3]; n],
        colors: Vec::with_capacity(n),
    };
    for i in 0..n {
        let g = i % NUM_GROUPS;
        let c = cube_center(g);
        state.positions.push(std::array::from_fn(|k| c[k] + rng.random_range(-h..=h)));
        let [r, gr, b] = base_colors[g].channels();
        state.colors.push([r, gr, b, g as f64]);
    }
    state
}

fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Acceleration of a particle at `position` under `group`'s parameters.
pub fn acceleration(position: Vec3, group: &GroupParams) -> Vec3 {
    let d = [group.target[0] - position[0], group.target[1] - position[1], group.target[2] - position[2]];
    let dist = norm(d);
    if dist < ARRIVAL_EPSILON {
        return [0.0; 3];
    }
    let k = group.force_amt / dist;
    [d[0] * k, d[1] * k, d[2] * k]
}

/// Rendered colour of a group: `clamp(base · magnitude · sensitivity, 0, 1)` per channel.
pub fn group_color(group: &GroupParams, color_sensitivity: f64) -> [f64; 3] {
    group.color_rgb.channels().map(|c| (c * group.color_mag * color_sensitivity).clamp(0.0, 1.0))
}

/// Advances every particle by one step of `cfg.dt`.
pub fn step(state: &mut ParticleState, params: &EngineParams, cfg: &SimConfig) {
    let colors: [[f64; 3]; NUM_GROUPS] =
        std::array::from_fn(|g| group_color(&params.groups[g], params.color_sensitivity));
    let dt = cfg.dt;
    let drag = cfg.drag;
    for ((p, v), c) in state.positions.iter_mut().zip(state.velocities.iter_mut()).zip(state.colors.iter_mut()) {
        let g = c[3] as usize;
        let a = acceleration(*p, &params.groups[g]);
        for k in 0..3 {
            v[k] = drag * (v[k] + a[k] * dt);
            p[k] += v[k] * dt;
        }
        let [r, gr, b] = colors[g];
        c[0] = r;
        c[1] = gr;
        c[2] = b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::palette::default_bin_palette;

    fn idle_params(force: f64) -> EngineParams {
        let base = default_bin_palette();
        EngineParams {
            groups: std::array::from_fn(|g| GroupParams {
                color_rgb: base[g],
                target: cube_center(g),
                force_amt: force,
                color_mag: 0.0,
                emphasis: false,
                y_center: y_center(g),
            }),
            color_sensitivity: 2.0,
        }
    }

    fn single(position: Vec3, velocity: Vec3) -> ParticleState {
        ParticleState { positions: vec![position], velocities: vec![velocity], colors: vec![[0.0, 0.0, 0.0, 0.0]] }
    }

    #[test]
    fn modular_group_assignment() {
        let base = default_bin_palette();
        let s = init_particles(&SimConfig { n_particles: 12, ..Default::default() }, &base);
        assert_eq!(s.populations(), [1; 12]);
        let s = init_particles(&SimConfig { n_particles: 100_000, ..Default::default() }, &base);
        let pops = s.populations();
        assert!(pops.iter().max().unwrap() - pops.iter().min().unwrap() <= 1);
        assert!(s.is_consistent());
        for i in 0..s.len() {
            assert!(cube_contains(s.group_of(i), s.positions[i]));
            assert_eq!(s.velocities[i], [0.0; 3]);
        }
    }

    #[test]
    fn same_seed_same_state() {
        let base = default_bin_palette();
        let cfg = SimConfig { n_particles: 500, seed: 42, ..Default::default() };
        assert_eq!(init_particles(&cfg, &base), init_particles(&cfg, &base));
        let other = SimConfig { seed: 43, ..cfg };
        assert_ne!(init_particles(&cfg, &base), init_particles(&other, &base));
    }

    #[test]
    fn ballistic_motion_without_force() {
        let mut s = single([0.0; 3], [1.0, 0.0, 0.0]);
        let mut params = idle_params(0.0);
        params.groups[0].target = [5.0, 5.0, 5.0];
        let cfg = SimConfig { drag: 1.0, dt: 1.0, ..Default::default() };
        step(&mut s, &params, &cfg);
        assert_eq!(s.positions[0], [1.0, 0.0, 0.0]);
        assert_eq!(s.velocities[0], [1.0, 0.0, 0.0]);
    }

    #[test]
    fn particle_on_target_feels_no_force() {
        let mut s = single([0.0, -12.0, 0.0], [0.5, 0.0, 0.0]);
        let cfg = SimConfig::default();
        step(&mut s, &idle_params(100.0), &cfg);
        let v = 0.5 * cfg.drag;
        assert_eq!(s.velocities[0], [v, 0.0, 0.0]);
        assert_eq!(s.positions[0], [v * cfg.dt, -12.0, 0.0]);
    }

    #[test]
    fn hand_evaluated_single_step() {
        let mut s = single([1.0, -12.0, 0.0], [0.0; 3]);
        let cfg = SimConfig { drag: 1.0, dt: 0.02322, ..Default::default() };
        step(&mut s, &idle_params(1.0), &cfg);
        assert!((s.velocities[0][0] + 0.02322).abs() < 1e-12);
        assert!((s.positions[0][0] - 0.999_460_848_4).abs() < 1e-6);
        assert_eq!(s.positions[0][1], -12.0);
        assert_eq!(s.positions[0][2], 0.0);
    }

    #[test]
    fn colour_law_and_alpha_preserved() {
        let base = default_bin_palette();
        let mut s = init_particles(&SimConfig { n_particles: 24, ..Default::default() }, &base);
        let mut params = idle_params(1.0);
        params.groups[4].color_mag = 0.5;
        params.groups[11].color_mag = 1.0;
        step(&mut s, &params, &SimConfig::default());
        for i in 0..s.len() {
            let g = s.group_of(i);
            let expect = base[g].channels().map(|c| (c * params.groups[g].color_mag * 2.0).clamp(0.0, 1.0));
            assert_eq!(&s.colors[i][..3], &expect);
            assert_eq!(s.colors[i][3], g as f64);
            if params.groups[g].color_mag == 0.0 {
                assert_eq!(&s.colors[i][..3], &[0.0; 3]);
            }
        }
    }

    #[test]
    fn parameter_inventory_is_76() {
        let inputs = declared_inputs();
        assert_eq!(inputs.len(), 3 + 12 * 6 + 1);
        let unique: std::collections::HashSet<_> = inputs.iter().collect();
        assert_eq!(unique.len(), inputs.len());
    }

    #[test]
    fn config_validation() {
        SimConfig::default().validate().unwrap();
        assert!(SimConfig { n_particles: 11, ..Default::default() }.validate().is_err());
        assert!(SimConfig { drag: 0.0, ..Default::default() }.validate().is_err());
        assert!(SimConfig { drag: 1.01, ..Default::default() }.validate().is_err());
        assert!(SimConfig { dt: 0.0, ..Default::default() }.validate().is_err());
    }
}
