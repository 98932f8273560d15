//! Point robots with clipped double-integrator kinematics.

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;
use crate::grid::BinaryGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    /// px/s
    pub max_vel: f64,
    /// px/s²
    pub max_acc: f64,
    /// s
    pub dt: f64,
    /// px
    pub col_rad: f64,
}

impl Default for KinematicLimits {
    fn default() -> Self {
        Self {
            max_vel: 10.0,
            max_acc: 5.0,
            dt: 0.1,
            col_rad: 3.0,
        }
    }
}

impl KinematicLimits {
    /// Scales the spatial quantities by `factor`, keeping `dt`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            max_vel: self.max_vel * factor,
            max_acc: self.max_acc * factor,
            dt: self.dt,
            col_rad: self.col_rad * factor,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.max_vel, self.max_acc, self.dt, self.col_rad]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }
}

/// Full per-robot state including the four belief maps.
#[derive(Debug, Clone)]
pub struct AgentState {
    pub id: usize,
    pub position: Vec2,
    pub velocity: Vec2,
    pub target: Vec2,
    pub self_obstacles: BinaryGrid,
    pub self_explored: BinaryGrid,
    pub fused_obstacles: BinaryGrid,
    pub fused_explored: BinaryGrid,
    pub odometer: f64,
    pub last_comm_step: Option<u64>,
}

impl AgentState {
    pub fn new(id: usize, position: Vec2, side: usize) -> Self {
        let blank = BinaryGrid::square(side, 0);
        Self {
            id,
            position,
            velocity: Vec2::ZERO,
            target: position,
            self_obstacles: blank.clone(),
            self_explored: blank.clone(),
            fused_obstacles: blank.clone(),
            fused_explored: blank,
            odometer: 0.0,
            last_comm_step: None,
        }
    }

    pub fn side(&self) -> usize {
        self.self_explored.width()
    }

    /// Nearest cell to the continuous position.
    pub fn cell(&self) -> (i64, i64) {
        (self.position.x.round() as i64, self.position.y.round() as i64)
    }

    /// Applies one integration step; `accel` is expected to be clipped already.
    pub fn step_kinematics(&mut self, accel: Vec2, limits: &KinematicLimits) {
        let side = self.side();
        let (position, velocity) = integrate(self.position, self.velocity, accel, limits, side);
        self.odometer += position.distance(self.position);
        self.position = position;
        self.velocity = velocity;
    }
}

/// Rescales `a` to at most `max_acc`, keeping its direction.
pub fn clip_acceleration(a: Vec2, max_acc: f64) -> Vec2 {
    a.clamp_norm(max_acc)
}

/// Semi-implicit Euler with a direction-preserving speed clip and the
/// position clamped to `[0, side - 1]`.
pub fn integrate(position: Vec2, velocity: Vec2, accel: Vec2, limits: &KinematicLimits, side: usize) -> (Vec2, Vec2) {
    let v = (velocity + accel * limits.dt).clamp_norm(limits.max_vel);
    let hi = side.saturating_sub(1) as f64;
    let p = position + v * limits.dt;
    (Vec2::new(p.x.clamp(0.0, hi), p.y.clamp(0.0, hi)), v)
}

/// Whether any obstacle cell centre lies within `radius` of `point`.
pub fn obstacle_within(point: Vec2, grid: &BinaryGrid, radius: f64) -> bool {
    let r2 = radius * radius;
    let x0 = (point.x - radius).floor() as i64;
    let x1 = (point.x + radius).ceil() as i64;
    let y0 = (point.y - radius).floor() as i64;
    let y1 = (point.y + radius).ceil() as i64;
    for y in y0..=y1 {
        for x in x0..=x1 {
            if grid.get_signed(x, y) == Some(1) {
                let (dx, dy) = (x as f64 - point.x, y as f64 - point.y);
                if dx * dx + dy * dy <= r2 {
                    return true;
                }
            }
        }
    }
    false
}

/// Distance from `point` to the nearest obstacle cell centre within `reach`.
pub fn nearest_obstacle(point: Vec2, grid: &BinaryGrid, reach: f64) -> Option<(f64, Vec2)> {
    let x0 = (point.x - reach).floor() as i64;
    let x1 = (point.x + reach).ceil() as i64;
    let y0 = (point.y - reach).floor() as i64;
    let y1 = (point.y + reach).ceil() as i64;
    let mut best: Option<(f64, Vec2)> = None;
    for y in y0..=y1 {
        for x in x0..=x1 {
            if grid.get_signed(x, y) == Some(1) {
                let c = Vec2::new(x as f64, y as f64);
                let d = c.distance(point);
                if d <= reach && best.is_none_or(|(b, _)| d < b) {
                    best = Some((d, c));
                }
            }
        }
    }
    best
}

/// Next-step proximity test against obstacles: is `p + v·dt` within
/// `col_rad` of an obstacle cell centre?
pub fn static_collision(p: Vec2, v: Vec2, grid: &BinaryGrid, limits: &KinematicLimits) -> bool {
    obstacle_within(p + v * limits.dt, grid, limits.col_rad)
}

/// Next-step proximity test between two robots (strictly closer than
/// twice the collision radius).
pub fn agent_collision(pi: Vec2, vi: Vec2, pj: Vec2, vj: Vec2, limits: &KinematicLimits) -> bool {
    let gap = (pi + vi * limits.dt).distance(pj + vj * limits.dt);
    gap < 2.0 * limits.col_rad
}

/// First step `k` in `1..=horizon` at which a constant-velocity rollout
/// brings the robot into collision, if any.
pub fn predict_collision_time(
    position: Vec2,
    velocity: Vec2,
    others: &[(Vec2, Vec2)],
    grid: &BinaryGrid,
    limits: &KinematicLimits,
    horizon: u32,
) -> Option<u32> {
    let mut p = position;
    let mut rolled: Vec<Vec2> = others.iter().map(|&(q, _)| q).collect();
    for k in 1..=horizon {
        if static_collision(p, velocity, grid, limits) {
            return Some(k);
        }
        for (q, &(_, w)) in rolled.iter().zip(others) {
            if agent_collision(p, velocity, *q, w, limits) {
                return Some(k);
            }
        }
        p += velocity * limits.dt;
        for (q, &(_, w)) in rolled.iter_mut().zip(others) {
            *q += w * limits.dt;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn limits() -> KinematicLimits {
        KinematicLimits::default()
    }

    #[test]
    fn clip_cases() {
        assert_eq!(clip_acceleration(Vec2::new(3.0, 4.0), 5.0), Vec2::new(3.0, 4.0));
        let c = clip_acceleration(Vec2::new(6.0, 8.0), 5.0);
        assert!((c.x - 3.0).abs() < 1e-12 && (c.y - 4.0).abs() < 1e-12);
        assert_eq!(clip_acceleration(Vec2::ZERO, 5.0), Vec2::ZERO);
    }

    #[test]
    fn integration_examples() {
        let l = limits();
        let (p, v) = integrate(Vec2::new(10.0, 10.0), Vec2::ZERO, Vec2::new(5.0, 0.0), &l, 64);
        assert!((v.x - 0.5).abs() < 1e-12 && v.y == 0.0);
        assert!((p.x - 10.05).abs() < 1e-12);

        let (_, v) = integrate(Vec2::new(10.0, 10.0), Vec2::new(10.0, 0.0), Vec2::new(5.0, 0.0), &l, 64);
        assert!((v.norm() - 10.0).abs() < 1e-12);

        let mut a = AgentState::new(0, Vec2::new(5.0, 5.0), 64);
        a.velocity = Vec2::new(10.0, 0.0);
        for k in 1..=3 {
            a.step_kinematics(Vec2::ZERO, &l);
            assert!((a.odometer - k as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn position_is_clamped_to_map() {
        let mut a = AgentState::new(0, Vec2::new(0.5, 0.5), 16);
        a.velocity = Vec2::new(-10.0, -10.0);
        a.step_kinematics(Vec2::ZERO, &limits());
        assert_eq!(a.position, Vec2::ZERO);
    }

    #[test]
    fn static_collision_examples() {
        let l = limits();
        let empty = BinaryGrid::square(32, 0);
        assert!(!static_collision(Vec2::new(10.0, 10.0), Vec2::ZERO, &empty, &l));

        let mut g = BinaryGrid::square(32, 0);
        g.set(20, 10, 1);
        // Projected point 4 px (= col_rad + 1) from the obstacle.
        assert!(!static_collision(Vec2::new(15.0, 10.0), Vec2::new(10.0, 0.0), &g, &l));
        assert!(static_collision(Vec2::new(18.0, 10.0), Vec2::ZERO, &g, &l));
    }

    #[test]
    fn agent_collision_is_strict_and_symmetric() {
        let l = limits();
        let a = Vec2::new(0.0, 0.0);
        assert!(agent_collision(a, Vec2::ZERO, Vec2::new(5.9, 0.0), Vec2::ZERO, &l));
        assert!(!agent_collision(a, Vec2::ZERO, Vec2::new(6.0, 0.0), Vec2::ZERO, &l));
        let (pi, vi, pj, vj) = (
            Vec2::new(1.0, 2.0),
            Vec2::new(3.0, -1.0),
            Vec2::new(4.0, 4.0),
            Vec2::new(-2.0, 0.0),
        );
        assert_eq!(agent_collision(pi, vi, pj, vj, &l), agent_collision(pj, vj, pi, vi, &l));
    }

    /// Step-by-step rollout used as the oracle for collision prediction.
    fn rollout_oracle(
        p: Vec2,
        v: Vec2,
        others: &[(Vec2, Vec2)],
        grid: &BinaryGrid,
        l: &KinematicLimits,
        horizon: u32,
    ) -> Option<u32> {
        (1..=horizon).find(|&k| {
            let t = l.dt * k as f64;
            let me = p + v * t;
            let mut hit = false;
            for y in 0..grid.height() {
                for x in 0..grid.width() {
                    if grid.get(x, y) == 1 && Vec2::new(x as f64, y as f64).distance(me) <= l.col_rad {
                        hit = true;
                    }
                }
            }
            hit || others.iter().any(|&(q, w)| (q + w * t).distance(me) < 2.0 * l.col_rad)
        })
    }

    #[test]
    fn wall_ahead_collides_on_second_step() {
        let l = limits();
        let mut g = BinaryGrid::square(32, 0);
        for y in 0..32 {
            g.set(20, y, 1);
        }
        let p = Vec2::new(15.0, 16.0);
        let v = Vec2::new(10.0, 0.0);
        assert_eq!(rollout_oracle(p, v, &[], &g, &l, 15), Some(2));
        assert_eq!(predict_collision_time(p, v, &[], &g, &l, 15), Some(2));
    }

    #[test]
    fn head_on_agents() {
        let l = limits();
        let g = BinaryGrid::square(64, 0);
        // Each robot covers 2 px per step toward the other.
        let others = [(Vec2::new(38.0, 30.0), Vec2::new(-20.0, 0.0))];
        let p = Vec2::new(30.0, 30.0);
        let v = Vec2::new(20.0, 0.0);
        assert_eq!(rollout_oracle(p, v, &others, &g, &l, 15), Some(1));
        assert_eq!(predict_collision_time(p, v, &others, &g, &l, 15), Some(1));
        assert_eq!(predict_collision_time(p, Vec2::ZERO, &[], &g, &l, 15), None);
    }

    #[test]
    fn prediction_matches_rollout_on_random_scenes() {
        use rand::{Rng, SeedableRng};
        let l = limits();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let g = BinaryGrid::from_fn(24, 24, |_, _| u8::from(rng.random::<f64>() < 0.02));
            let mut pt = || Vec2::new(rng.random_range(0.0..24.0), rng.random_range(0.0..24.0));
            let p = pt();
            let others: Vec<(Vec2, Vec2)> = (0..3).map(|_| (pt(), Vec2::ZERO)).collect();
            let others: Vec<(Vec2, Vec2)> = others
                .into_iter()
                .map(|(q, _)| {
                    (
                        q,
                        Vec2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)),
                    )
                })
                .collect();
            let v = Vec2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            assert_eq!(
                predict_collision_time(p, v, &others, &g, &l, 15),
                rollout_oracle(p, v, &others, &g, &l, 15)
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 64, rng_seed: proptest::test_runner::RngSeed::Fixed(5), ..ProptestConfig::default() })]

        #[test]
        fn speed_never_exceeds_limit_and_odometer_sums(actions in proptest::collection::vec((-20.0f64..20.0, -20.0f64..20.0), 1..200)) {
            let l = limits();
            let mut a = AgentState::new(0, Vec2::new(100.0, 100.0), 256);
            let mut travelled = 0.0;
            for (ax, ay) in &actions {
                let before = a.position;
                a.step_kinematics(clip_acceleration(Vec2::new(*ax, *ay), l.max_acc), &l);
                prop_assert!(a.velocity.norm() <= l.max_vel + 1e-9);
                travelled += a.position.distance(before);
            }
            prop_assert!((a.odometer - travelled).abs() <= 1e-6 * actions.len() as f64);
        }

        #[test]
        fn clipping_preserves_direction(ax in -100.0f64..100.0, ay in -100.0f64..100.0, m in 0.1f64..20.0) {
            let a = Vec2::new(ax, ay);
            let c = clip_acceleration(a, m);
            prop_assert!(c.norm() <= m + 1e-9);
            // c = k·a with k >= 0
            let cross = a.x * c.y - a.y * c.x;
            prop_assert!(cross.abs() <= 1e-9 * (1.0 + a.norm() * c.norm()));
            prop_assert!(a.dot(c) >= 0.0);
        }
    }
}
