use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;
use rand_distr::{Distribution, Normal};

use super::{EnvSpec, Environment, Transition};
use crate::{Error, Result, StateVec};

/// Vertical wall spanning `y in [0, 1]` with one opening.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub x: (f64, f64),
    pub hole: (f64, f64),
}

impl Wall {
    fn solid_at(&self, p: &[f64]) -> bool {
        p[0] >= self.x.0 && p[0] <= self.x.1 && (p[1] < self.hole.0 || p[1] > self.hole.1)
    }

    /// The two solid rectangles below and above the hole.
    fn solid_boxes(&self) -> [[f64; 4]; 2] {
        [[self.x.0, self.x.1, 0.0, self.hole.0], [self.x.0, self.x.1, self.hole.1, 1.0]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MazeGeometry {
    pub walls: [Wall; 3],
    /// `[x0, x1, y0, y1]`.
    pub goal: [f64; 4],
    pub start: [f64; 2],
}

impl Default for MazeGeometry {
    fn default() -> Self {
        Self {
            walls: [
                Wall { x: (0.2, 0.3), hole: (0.4, 0.5) },
                Wall { x: (0.4, 0.5), hole: (0.9, 1.0) },
                Wall { x: (0.7, 0.8), hole: (0.1, 0.2) },
            ],
            goal: [0.9, 1.0, 0.9, 1.0],
            start: [0.05, 0.05],
        }
    }
}

/// Centers of the three hole squares.
pub const MAZE_HOLE_CENTERS: [[f64; 2]; 3] = [[0.25, 0.45], [0.45, 0.95], [0.75, 0.15]];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MazeAction {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl MazeAction {
    pub fn delta(self) -> [f64; 2] {
        match self {
            MazeAction::Up => [0.0, 1.0],
            MazeAction::Down => [0.0, -1.0],
            MazeAction::Left => [-1.0, 0.0],
            MazeAction::Right => [1.0, 0.0],
        }
    }

    fn from_index(a: usize) -> Self {
        [MazeAction::Up, MazeAction::Down, MazeAction::Left, MazeAction::Right][a]
    }
}

/// Continuous-state maze on the unit square. Each move is 0.05 in the chosen
/// direction plus Gaussian noise; moves whose path touches wall material are
/// rejected and the agent stays put.
#[derive(Debug, Clone)]
pub struct Maze {
    spec: EnvSpec,
    geometry: MazeGeometry,
    step_size: f64,
    noise_std: f64,
}

impl Default for Maze {
    fn default() -> Self {
        Self::new()
    }
}

impl Maze {
    pub fn new() -> Self {
        Self::with_noise(0.01)
    }

    pub fn with_noise(noise_std: f64) -> Self {
        Self {
            spec: EnvSpec {
                state_dim: 2,
                action_count: 4,
                lower: vec![0.0, 0.0],
                upper: vec![1.0, 1.0],
                step_cap: 2000,
            },
            geometry: MazeGeometry::default(),
            step_size: 0.05,
            noise_std,
        }
    }

    pub fn geometry(&self) -> &MazeGeometry {
        &self.geometry
    }

    pub fn in_wall(&self, p: &[f64]) -> bool {
        self.geometry.walls.iter().any(|w| w.solid_at(p))
    }

    /// True if the straight segment `a -> b` touches any wall material.
    pub fn path_blocked(&self, a: &[f64], b: &[f64]) -> bool {
        self.geometry
            .walls
            .iter()
            .flat_map(|w| w.solid_boxes())
            .any(|r| segment_hits_box(a, b, r))
    }

    fn dynamics(&self, s: &[f64], a: usize, rng: &mut dyn RngCore) -> Result<(StateVec, bool)> {
        self.spec.check_action(a)?;
        if s.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: s.len() });
        }
        let dir = MazeAction::from_index(a).delta();
        let mut next = vec![s[0] + self.step_size * dir[0], s[1] + self.step_size * dir[1]];
        if self.noise_std > 0.0 {
            let noise = Normal::new(0.0, self.noise_std).map_err(|_| Error::invalid("maze noise"))?;
            next[0] += noise.sample(rng);
            next[1] += noise.sample(rng);
        }
        self.spec.clip(&mut next);
        if self.path_blocked(s, &next) {
            next.copy_from_slice(s);
        }
        let terminal = self.is_terminal(&next);
        Ok((next, terminal))
    }
}

/// Liang-Barsky test of a segment against the closed box `[x0, x1, y0, y1]`.
fn segment_hits_box(a: &[f64], b: &[f64], r: [f64; 4]) -> bool {
    let d = [b[0] - a[0], b[1] - a[1]];
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for axis in 0..2 {
        let (lo, hi) = (r[2 * axis], r[2 * axis + 1]);
        if d[axis] == 0.0 {
            if a[axis] < lo || a[axis] > hi {
                return false;
            }
            continue;
        }
        let ta = (lo - a[axis]) / d[axis];
        let tb = (hi - a[axis]) / d[axis];
        let (enter, exit) = if ta < tb { (ta, tb) } else { (tb, ta) };
        t0 = t0.max(enter);
        t1 = t1.min(exit);
        if t0 > t1 {
            return false;
        }
    }
    true
}

impl Environment for Maze {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&self, _rng: &mut dyn RngCore) -> StateVec {
        self.geometry.start.to_vec()
    }

    fn step(&self, s: &[f64], a: usize, rng: &mut dyn RngCore) -> Result<Transition> {
        let (s_next, terminal) = self.dynamics(s, a, rng)?;
        Ok(Transition { s: s.to_vec(), a, s_next, r: -1.0, terminal })
    }

    fn step_mean_reward(&self, s: &[f64], a: usize, rng: &mut dyn RngCore) -> Result<Transition> {
        self.step(s, a, rng)
    }

    fn is_terminal(&self, s: &[f64]) -> bool {
        let g = &self.geometry.goal;
        s[0] >= g[0] && s[0] <= g[1] && s[1] >= g[2] && s[1] <= g[3]
    }

    fn delta_scale(&self) -> Vec<f64> {
        vec![self.step_size; 2]
    }

    fn noiseless(&self) -> Self {
        self.clone()
    }

    /// Waypoints through the three holes; y is corrected before x so that
    /// walls are always crossed horizontally inside a hole.
    fn scripted_action(&self, s: &[f64], waypoint: &mut usize) -> usize {
        const WAYPOINTS: [[f64; 2]; 7] =
            [[0.15, 0.45], [0.35, 0.45], [0.35, 0.95], [0.55, 0.95], [0.6, 0.15], [0.85, 0.15], [0.95, 0.95]];
        let tol = 0.025;
        while *waypoint + 1 < WAYPOINTS.len() {
            let w = WAYPOINTS[*waypoint];
            if (s[0] - w[0]).abs() < tol && (s[1] - w[1]).abs() < tol {
                *waypoint += 1;
            } else {
                break;
            }
        }
        let w = WAYPOINTS[*waypoint];
        let (dx, dy) = (w[0] - s[0], w[1] - s[1]);
        let action = if dy.abs() >= tol {
            if dy > 0.0 {
                MazeAction::Up
            } else {
                MazeAction::Down
            }
        } else if dx > 0.0 {
            MazeAction::Right
        } else {
            MazeAction::Left
        };
        action as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use rand::Rng;

    fn right(maze: &Maze, s: [f64; 2]) -> StateVec {
        maze.step(&s, MazeAction::Right as usize, &mut stream(0, Stream::Env)).unwrap().s_next
    }

    #[test]
    fn open_space_move() {
        let maze = Maze::with_noise(0.0);
        let t = maze.step(&[0.05, 0.05], MazeAction::Right as usize, &mut stream(0, Stream::Env)).unwrap();
        assert!((t.s_next[0] - 0.10).abs() < 1e-15);
        assert_eq!(t.s_next[1], 0.05);
        assert!(!t.terminal);
        assert_eq!(t.r, -1.0);
    }

    #[test]
    fn wall_blocks_and_hole_admits() {
        let maze = Maze::with_noise(0.0);
        assert_eq!(right(&maze, [0.19, 0.7]), vec![0.19, 0.7]);
        let through = right(&maze, [0.19, 0.45]);
        assert!((through[0] - 0.24).abs() < 1e-15);
    }

    #[test]
    fn goal_is_terminal() {
        let maze = Maze::with_noise(0.0);
        let t = maze.step(&[0.88, 0.95], MazeAction::Right as usize, &mut stream(0, Stream::Env)).unwrap();
        assert!(t.terminal);
    }

    #[test]
    fn walls_are_impermeable() {
        // Random proposals from random free states: no accepted move may end
        // in or pass through wall material.
        let maze = Maze::new();
        let mut rng = stream(9, Stream::Env);
        let mut accepted = 0;
        for _ in 0..1_000_000 {
            let s = [rng.random::<f64>(), rng.random::<f64>()];
            if maze.in_wall(&s) {
                continue;
            }
            let a = rng.random_range(0..4);
            let t = maze.step(&s, a, &mut rng).unwrap();
            if t.s_next.as_slice() != s.as_slice() {
                accepted += 1;
                assert!(!maze.in_wall(&t.s_next));
                for k in 1..64 {
                    let f = k as f64 / 64.0;
                    let p = [s[0] + f * (t.s_next[0] - s[0]), s[1] + f * (t.s_next[1] - s[1])];
                    assert!(!maze.in_wall(&p), "{s:?} -> {:?}", t.s_next);
                }
            }
        }
        assert!(accepted > 500_000);
    }

    #[test]
    fn segment_box_cases() {
        let r = [0.2, 0.3, 0.0, 0.4];
        assert!(segment_hits_box(&[0.1, 0.2], &[0.35, 0.2], r));
        assert!(!segment_hits_box(&[0.1, 0.45], &[0.35, 0.45], r));
        assert!(segment_hits_box(&[0.25, 0.5], &[0.25, 0.39], r));
        assert!(!segment_hits_box(&[0.1, 0.1], &[0.19, 0.1], r));
    }

    #[test]
    fn hole_centers_lie_in_holes() {
        let maze = Maze::new();
        for (c, w) in MAZE_HOLE_CENTERS.iter().zip(&maze.geometry().walls) {
            assert!(!maze.in_wall(c));
            assert!(c[0] > w.x.0 && c[0] < w.x.1);
        }
    }
}
