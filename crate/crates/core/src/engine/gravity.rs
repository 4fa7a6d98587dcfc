//! Gravity points and per-group parameter derivation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EngineParams, GroupParams, SimConfig, Vec3, NUM_GROUPS};
use crate::analysis::{AnalysisConfig, AnalysisFrame};
use crate::palette::Rgb;

/// Vertical centre of the lowest group's gravity point.
pub const Y_LOWEST: f64 = -12.0;
/// Vertical centre of the highest group's gravity point.
pub const Y_HIGHEST: f64 = 10.0;
/// Side of the cube each gravity point is confined to.
pub const CUBE_SIDE: f64 = 3.0;

/// Vertical centre of `group`: evenly spaced from −12 (group 0) to 10 (group 11).
pub fn y_center(group: usize) -> f64 {
    assert!(group < NUM_GROUPS, "group {group} out of range");
    Y_LOWEST + (Y_HIGHEST - Y_LOWEST) / (NUM_GROUPS - 1) as f64 * group as f64
}

/// Centre of the cube that confines `group`'s gravity point.
pub fn cube_center(group: usize) -> Vec3 {
    [0.0, y_center(group), 0.0]
}

pub fn cube_contains(group: usize, p: Vec3) -> bool {
    let c = cube_center(group);
    p.iter().zip(c).all(|(&v, c)| (v - c).abs() <= CUBE_SIDE / 2.0)
}

fn clamp_to_cube(group: usize, p: Vec3) -> Vec3 {
    let c = cube_center(group);
    let h = CUBE_SIDE / 2.0;
    std::array::from_fn(|i| p[i].clamp(c[i] - h, c[i] + h))
}

/// Uniform direction on the unit sphere. Always draws exactly two values.
fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), z, r * phi.sin()]
}

/// Maps one analysis frame to the twelve group parameter sets.
///
/// Colour magnitude tracks the averaged bins, force is affine in them and
/// doubles on a trigger, and each gravity point takes a random step whose
/// length grows with the bin's averaged volatility.
#[allow(clippy::too_many_arguments)]
pub fn derive_group_params<R: Rng + ?Sized>(
    frame: &AnalysisFrame,
    base_colors: &[Rgb; NUM_GROUPS],
    color_sensitivity: f64,
    analysis: &AnalysisConfig,
    sim: &SimConfig,
    prev_targets: &[Vec3; NUM_GROUPS],
    rng: &mut R,
) -> EngineParams {
    let groups = std::array::from_fn(|g| {
        let avg = frame.avg_bins[g];
        let emphasis = frame.triggers.get(g);
        let force = sim.base_force * (0.5 + avg);
        let step_len = sim.target_walk_scale * (frame.avg_volatility[g] / analysis.max_trigger) * sim.dt;
        let dir = random_direction(rng);
        let prev = prev_targets[g];
        let moved = std::array::from_fn(|i| prev[i] + step_len * dir[i]);
        GroupParams {
            color_rgb: base_colors[g],
            target: clamp_to_cube(g, moved),
            force_amt: if emphasis { 2.0 * force } else { force },
            color_mag: (avg / analysis.max_average).clamp(0.0, 1.0),
            emphasis,
            y_center: y_center(g),
        }
    });
    EngineParams { groups, color_sensitivity }
}

/// The twelve moving gravity points and the random stream that moves them.
#[derive(Debug, Clone)]
pub struct GravityPoints {
    targets: [Vec3; NUM_GROUPS],
    rng: ChaCha8Rng,
}

/// Stream id separating gravity-point randomness from particle placement.
const TARGET_STREAM: u64 = 1;

impl GravityPoints {
    /// All points at their cube centres, random stream seeded from `seed`.
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(TARGET_STREAM);
        Self { targets: std::array::from_fn(cube_center), rng }
    }

    pub fn targets(&self) -> &[Vec3; NUM_GROUPS] {
        &self.targets
    }

    /// Derives parameters for `frame` and advances the points to the new targets.
    pub fn advance(
        &mut self,
        frame: &AnalysisFrame,
        base_colors: &[Rgb; NUM_GROUPS],
        color_sensitivity: f64,
        analysis: &AnalysisConfig,
        sim: &SimConfig,
    ) -> EngineParams {
        let params =
            derive_group_params(frame, base_colors, color_sensitivity, analysis, sim, &self.targets, &mut self.rng);
        self.targets = params.groups.map(|g| g.target);
        params
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{BinFrame, Triggers};
    use crate::palette::default_bin_palette;

    #[test]
    fn y_centre_endpoints() {
        assert_eq!(y_center(0), -12.0);
        assert_eq!(y_center(11), 10.0);
        assert_eq!(y_center(6), 0.0);
        for g in 0..NUM_GROUPS {
            assert_eq!(y_center(g), -12.0 + 2.0 * g as f64);
        }
    }

    fn derive(frame: &AnalysisFrame, seed: u64) -> EngineParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let targets = std::array::from_fn(cube_center);
        derive_group_params(
            frame,
            &default_bin_palette(),
            2.0,
            &AnalysisConfig::default(),
            &SimConfig::default(),
            &targets,
            &mut rng,
        )
    }

    #[test]
    fn silent_frame_gives_idle_parameters() {
        let p = derive(&AnalysisFrame::silent(0), 3);
        for (g, gp) in p.groups.iter().enumerate() {
            assert_eq!(gp.color_mag, 0.0);
            assert_eq!(gp.force_amt, 0.5);
            assert_eq!(gp.target, cube_center(g));
            assert!(!gp.emphasis);
            assert_eq!(gp.y_center, y_center(g));
        }
    }

    #[test]
    fn trigger_doubles_only_its_group() {
        let mut frame = AnalysisFrame::silent(0);
        frame.avg_bins = BinFrame::new([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 0.0, 0.25]).unwrap();
        let quiet = derive(&frame, 9);
        frame.triggers = Triggers::NONE;
        frame.triggers.set(3, true);
        let loud = derive(&frame, 9);
        assert_eq!(loud.groups[3].force_amt, 2.0 * quiet.groups[3].force_amt);
        assert!(loud.groups[3].emphasis);
        for g in (0..NUM_GROUPS).filter(|&g| g != 3) {
            assert_eq!(loud.groups[g], quiet.groups[g]);
        }
    }

    #[test]
    fn colour_magnitude_clamps_at_max_average() {
        let mut frame = AnalysisFrame::silent(0);
        let mut v = [0.0; 12];
        v[5] = 0.3;
        v[6] = 0.9;
        v[7] = 0.15;
        frame.avg_bins = BinFrame::new(v).unwrap();
        let p = derive(&frame, 0);
        assert_eq!(p.groups[5].color_mag, 1.0);
        assert_eq!(p.groups[6].color_mag, 1.0);
        assert!((p.groups[7].color_mag - 0.5).abs() < 1e-12);
    }

    #[test]
    fn volatile_bins_move_their_points_within_the_cube() {
        let mut frame = AnalysisFrame::silent(0);
        frame.avg_volatility = BinFrame::splat(1.0).unwrap();
        let sim = SimConfig { target_walk_scale: 50.0, ..Default::default() };
        let mut points = GravityPoints::new(4);
        for _ in 0..200 {
            points.advance(&frame, &default_bin_palette(), 2.0, &AnalysisConfig::default(), &sim);
            for (g, t) in points.targets().iter().enumerate() {
                assert!(cube_contains(g, *t), "group {g} escaped: {t:?}");
            }
        }
        assert!(points.targets().iter().enumerate().any(|(g, t)| *t != cube_center(g)));
    }
}
