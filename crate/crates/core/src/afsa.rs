//! Artificial fish swarm optimizer.
//!
//! Each fish is a point in a box-bounded real space. Lower objective values
//! are better. Per iteration every fish, in id order, computes a swarm move
//! and a follow move on independent random substreams and commits whichever
//! lands on the lower objective value (follow wins ties). Both behaviors fall
//! back to prey, and prey falls back to a random move.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{RandomSource, StreamTag, Substream};

/// Moves shorter than this are treated as "already at the target".
pub const DEGENERATE_DISTANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwarmError {
    #[error("{name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("objective has dimension {objective} but bounds have {bounds}")]
    DimensionMismatch { objective: usize, bounds: usize },
    #[error("bounds for dimension {0} are not finite")]
    NonFiniteBounds(usize),
    #[error("position has dimension {found}, expected {expected}")]
    PositionDimension { expected: usize, found: usize },
}

/// Closed interval for one search dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn clamp(&self, x: f64) -> f64 {
        if x.is_nan() {
            return self.lo;
        }
        x.clamp(self.lo, self.hi)
    }
}

/// How the vision candidate offsets are drawn.
///
/// `Literal` draws each offset factor from `[0, 1)`, which only explores
/// the positive orthant around the fish. `Symmetric` draws from `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisionDraw {
    Literal,
    #[default]
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmParams {
    /// Perception radius.
    pub visual: f64,
    /// Maximum displacement of a single move.
    pub step: f64,
    /// Prey attempts before a random move.
    pub try_number: usize,
    /// Crowd factor, strictly between 0 and 1.
    pub delta: f64,
    pub population_size: usize,
    pub max_iterations: usize,
    pub bounds: Vec<Bounds>,
    #[serde(default)]
    pub vision_draw: VisionDraw,
}

impl SwarmParams {
    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self) -> Result<(), SwarmError> {
        let invalid = |name, reason: &str| SwarmError::InvalidParam {
            name,
            reason: reason.to_string(),
        };
        if !(self.visual.is_finite() && self.visual > 0.0) {
            return Err(invalid("visual", "must be a positive finite number"));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(invalid("step", "must be a positive finite number"));
        }
        if self.step > self.visual {
            return Err(invalid("step", "must not exceed visual"));
        }
        if self.try_number == 0 {
            return Err(invalid("try_number", "must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", "delta out of (0,1)"));
        }
        if self.population_size == 0 {
            return Err(invalid("population", "must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(invalid("iterations", "must be at least 1"));
        }
        if self.bounds.is_empty() {
            return Err(invalid("bounds", "need at least one dimension"));
        }
        for (i, b) in self.bounds.iter().enumerate() {
            if !(b.lo.is_finite() && b.hi.is_finite()) {
                return Err(SwarmError::NonFiniteBounds(i));
            }
            if b.lo >= b.hi {
                return Err(SwarmError::InvalidParam {
                    name: "bounds",
                    reason: format!("dimension {i}: lower bound must be below upper bound"),
                });
            }
        }
        Ok(())
    }

    pub fn clamp(&self, position: &mut [f64]) {
        for (x, b) in position.iter_mut().zip(&self.bounds) {
            *x = b.clamp(*x);
        }
    }
}

/// Fitness surface searched by the swarm. Lower is better.
pub trait Objective {
    fn dimension(&self) -> usize;
    fn evaluate(&self, position: &[f64]) -> f64;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn evaluate(&self, position: &[f64]) -> f64 {
        (**self).evaluate(position)
    }
}

/// `Σ x_i²`, minimum 0 at the origin.
#[derive(Debug, Clone, Copy)]
pub struct Sphere {
    pub dimension: usize,
}

impl Objective for Sphere {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, position: &[f64]) -> f64 {
        position.iter().map(|x| x * x).sum()
    }
}

/// Adapts a closure into an [`Objective`].
pub struct FnObjective<F> {
    dimension: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnObjective<F> {
    pub fn new(dimension: usize, f: F) -> Self {
        Self { dimension, f }
    }
}

impl<F: Fn(&[f64]) -> f64> Objective for FnObjective<F> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, position: &[f64]) -> f64 {
        (self.f)(position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FishId(pub u64);

impl fmt::Display for FishId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtificialFish {
    pub id: FishId,
    pub position: Vec<f64>,
    pub fitness: f64,
    /// Job carried by this fish, if any.
    pub task_ref: Option<u64>,
}

/// Best solution seen so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bulletin {
    pub position: Vec<f64>,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    /// Kept sorted by id.
    pub fish: Vec<ArtificialFish>,
    pub bulletin: Option<Bulletin>,
    pub iteration: u64,
    pub seed: u64,
    next_id: u64,
}

impl SwarmState {
    /// A swarm with no fish yet.
    pub fn empty(seed: u64) -> Self {
        Self {
            fish: Vec::new(),
            bulletin: None,
            iteration: 0,
            seed,
            next_id: 0,
        }
    }

    pub fn get(&self, id: FishId) -> Option<&ArtificialFish> {
        self.fish
            .binary_search_by_key(&id, |f| f.id)
            .ok()
            .map(|i| &self.fish[i])
    }

    pub fn best_fitness(&self) -> Option<f64> {
        self.bulletin.as_ref().map(|b| b.fitness)
    }

    /// Id the next spawned fish will receive.
    pub fn next_id(&self) -> FishId {
        FishId(self.next_id)
    }

    /// Adds a fish at a uniform random position inside the bounds.
    pub fn spawn_random(&mut self, params: &SwarmParams, objective: &dyn Objective) -> FishId {
        let id = self.next_id;
        let mut rng = Substream::derive(self.seed, self.iteration, id, StreamTag::Spawn);
        let position = params.bounds.iter().map(|b| rng.uniform(b.lo, b.hi)).collect();
        self.push(position, None, params, objective)
    }

    /// Adds a fish at `position` (clamped into the bounds).
    pub fn spawn_at(
        &mut self,
        position: Vec<f64>,
        task_ref: Option<u64>,
        params: &SwarmParams,
        objective: &dyn Objective,
    ) -> Result<FishId, SwarmError> {
        if position.len() != params.dimension() {
            return Err(SwarmError::PositionDimension {
                expected: params.dimension(),
                found: position.len(),
            });
        }
        Ok(self.push(position, task_ref, params, objective))
    }

    fn push(
        &mut self,
        mut position: Vec<f64>,
        task_ref: Option<u64>,
        params: &SwarmParams,
        objective: &dyn Objective,
    ) -> FishId {
        params.clamp(&mut position);
        let fitness = objective.evaluate(&position);
        let id = FishId(self.next_id);
        self.next_id += 1;
        self.offer(&position, fitness);
        self.fish.push(ArtificialFish {
            id,
            position,
            fitness,
            task_ref,
        });
        id
    }

    pub fn remove(&mut self, id: FishId) -> Option<ArtificialFish> {
        let idx = self.fish.binary_search_by_key(&id, |f| f.id).ok()?;
        Some(self.fish.remove(idx))
    }

    /// Recomputes every fitness and resets the bulletin to the current best.
    ///
    /// Only for time-varying objectives; this breaks bulletin monotonicity.
    pub fn reevaluate(&mut self, objective: &dyn Objective) {
        self.bulletin = None;
        for i in 0..self.fish.len() {
            let fitness = objective.evaluate(&self.fish[i].position);
            self.fish[i].fitness = fitness;
            let position = self.fish[i].position.clone();
            self.offer(&position, fitness);
        }
    }

    fn offer(&mut self, position: &[f64], fitness: f64) {
        let better = match &self.bulletin {
            Some(b) => fitness < b.fitness,
            None => true,
        };
        if better {
            self.bulletin = Some(Bulletin {
                position: position.to_vec(),
                fitness,
            });
        }
    }
}

/// Places `population_size` fish uniformly at random inside the bounds.
pub fn init_swarm(params: &SwarmParams, objective: &dyn Objective, seed: u64) -> Result<SwarmState, SwarmError> {
    params.validate()?;
    if objective.dimension() != params.dimension() {
        return Err(SwarmError::DimensionMismatch {
            objective: objective.dimension(),
            bounds: params.dimension(),
        });
    }
    let mut state = SwarmState::empty(seed);
    for _ in 0..params.population_size {
        state.spawn_random(params, objective);
    }
    Ok(state)
}

/// Draws a point within `visual` of the fish, one offset per dimension.
pub fn candidate_in_vision(fish: &ArtificialFish, params: &SwarmParams, rng: &mut dyn RandomSource) -> Vec<f64> {
    let mut candidate: Vec<f64> = fish
        .position
        .iter()
        .map(|x| {
            let s = match params.vision_draw {
                VisionDraw::Literal => rng.unit(),
                VisionDraw::Symmetric => rng.signed(),
            };
            x + params.visual * s
        })
        .collect();
    params.clamp(&mut candidate);
    candidate
}

/// One step of random length in `[0, step)` along the unit direction to
/// `target`. Returns the position unchanged when the target is degenerate.
pub fn move_toward(
    fish: &ArtificialFish,
    target: &[f64],
    params: &SwarmParams,
    rng: &mut dyn RandomSource,
) -> Vec<f64> {
    let dist = distance(&fish.position, target);
    if dist < DEGENERATE_DISTANCE {
        return fish.position.clone();
    }
    let scale = params.step * rng.unit() / dist;
    let mut next: Vec<f64> = fish
        .position
        .iter()
        .zip(target)
        .map(|(x, t)| x + (t - x) * scale)
        .collect();
    params.clamp(&mut next);
    next
}

/// Other fish strictly closer than `visual`, in id order.
pub fn neighbors<'a>(fish: &ArtificialFish, state: &'a SwarmState, params: &SwarmParams) -> Vec<&'a ArtificialFish> {
    state
        .fish
        .iter()
        .filter(|other| other.id != fish.id && distance(&fish.position, &other.position) < params.visual)
        .collect()
}

pub fn behavior_prey(
    fish: &ArtificialFish,
    params: &SwarmParams,
    objective: &dyn Objective,
    rng: &mut dyn RandomSource,
) -> Vec<f64> {
    for _ in 0..params.try_number {
        let candidate = candidate_in_vision(fish, params, rng);
        if objective.evaluate(&candidate) < fish.fitness {
            return move_toward(fish, &candidate, params, rng);
        }
    }
    behavior_move(fish, params, rng)
}

pub fn behavior_swarm(
    fish: &ArtificialFish,
    state: &SwarmState,
    params: &SwarmParams,
    objective: &dyn Objective,
    rng: &mut dyn RandomSource,
) -> Vec<f64> {
    let near = neighbors(fish, state, params);
    if near.is_empty() {
        return behavior_prey(fish, params, objective, rng);
    }
    let n = near.len() as f64;
    let mut center = vec![0.0; fish.position.len()];
    for other in &near {
        for (c, x) in center.iter_mut().zip(&other.position) {
            *c += x;
        }
    }
    center.iter_mut().for_each(|c| *c /= n);
    let center_fitness = objective.evaluate(&center);
    if center_fitness < fish.fitness && !crowded(near.len(), params) {
        move_toward(fish, &center, params, rng)
    } else {
        behavior_prey(fish, params, objective, rng)
    }
}

pub fn behavior_follow(
    fish: &ArtificialFish,
    state: &SwarmState,
    params: &SwarmParams,
    objective: &dyn Objective,
    rng: &mut dyn RandomSource,
) -> Vec<f64> {
    let near = neighbors(fish, state, params);
    // Strict comparison keeps the lowest id among equal leaders.
    let leader = near
        .iter()
        .copied()
        .fold(None::<&ArtificialFish>, |best, f| match best {
            Some(b) if f.fitness >= b.fitness => Some(b),
            _ => Some(f),
        });
    match leader {
        Some(l) if l.fitness < fish.fitness && !crowded(near.len(), params) => {
            move_toward(fish, &l.position, params, rng)
        }
        _ => behavior_prey(fish, params, objective, rng),
    }
}

/// Random move of at most `step` per coordinate.
pub fn behavior_move(fish: &ArtificialFish, params: &SwarmParams, rng: &mut dyn RandomSource) -> Vec<f64> {
    let mut next: Vec<f64> = fish.position.iter().map(|x| x + params.step * rng.signed()).collect();
    params.clamp(&mut next);
    next
}

fn crowded(neighbor_count: usize, params: &SwarmParams) -> bool {
    neighbor_count as f64 / params.population_size as f64 > params.delta
}

/// Advances every fish once, in id order, and updates the bulletin.
pub fn step_iteration(state: &mut SwarmState, params: &SwarmParams, objective: &dyn Objective) {
    let iteration = state.iteration;
    for i in 0..state.fish.len() {
        let fish = state.fish[i].clone();
        let key = fish.id.0;
        let mut swarm_rng = Substream::derive(state.seed, iteration, key, StreamTag::Swarm);
        let mut follow_rng = Substream::derive(state.seed, iteration, key, StreamTag::Follow);
        let swarm_pos = behavior_swarm(&fish, state, params, objective, &mut swarm_rng);
        let follow_pos = behavior_follow(&fish, state, params, objective, &mut follow_rng);
        let swarm_fit = objective.evaluate(&swarm_pos);
        let follow_fit = objective.evaluate(&follow_pos);
        let (position, fitness) = if follow_fit <= swarm_fit {
            (follow_pos, follow_fit)
        } else {
            (swarm_pos, swarm_fit)
        };
        state.offer(&position, fitness);
        let slot = &mut state.fish[i];
        slot.position = position;
        slot.fitness = fitness;
    }
    state.iteration += 1;
}

/// Runs `iterations` iterations and returns the bulletin fitness after each.
pub fn run(state: &mut SwarmState, params: &SwarmParams, objective: &dyn Objective, iterations: usize) -> Vec<f64> {
    let mut history = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        step_iteration(state, params, objective);
        history.push(state.best_fitness().unwrap_or(f64::INFINITY));
    }
    history
}

/// `iteration,best_fitness` table, one row per entry, iterations from 1.
pub fn history_csv(history: &[f64]) -> String {
    let mut out = String::from("iteration,best_fitness\n");
    for (i, f) in history.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, f));
    }
    out
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use std::cell::Cell;

    use super::*;
    use crate::rng::ScriptedSource;

    fn params2(visual: f64, step: f64, lim: f64) -> SwarmParams {
        SwarmParams {
            visual,
            step,
            try_number: 5,
            delta: 0.618,
            population_size: 10,
            max_iterations: 100,
            bounds: vec![Bounds::new(-lim, lim); 2],
            vision_draw: VisionDraw::Symmetric,
        }
    }

    fn fish(id: u64, position: Vec<f64>, objective: &dyn Objective) -> ArtificialFish {
        let fitness = objective.evaluate(&position);
        ArtificialFish {
            id: FishId(id),
            position,
            fitness,
            task_ref: None,
        }
    }

    fn state_of(fish: Vec<ArtificialFish>) -> SwarmState {
        let mut s = SwarmState::empty(0);
        s.next_id = fish.iter().map(|f| f.id.0 + 1).max().unwrap_or(0);
        s.fish = fish;
        s
    }

    struct Counting<'a> {
        inner: &'a dyn Objective,
        calls: Cell<usize>,
    }

    impl Objective for Counting<'_> {
        fn dimension(&self) -> usize {
            self.inner.dimension()
        }
        fn evaluate(&self, p: &[f64]) -> f64 {
            self.calls.set(self.calls.get() + 1);
            self.inner.evaluate(p)
        }
    }

    const SPHERE: Sphere = Sphere { dimension: 2 };

    #[test]
    fn validation_rejects_bad_params() {
        let mut p = params2(2.0, 0.5, 5.0);
        assert!(p.validate().is_ok());
        p.delta = 1.5;
        assert_eq!(p.validate().unwrap_err().to_string(), "delta: delta out of (0,1)");
        p.delta = 0.5;
        p.step = 3.0;
        assert!(matches!(
            p.validate(),
            Err(SwarmError::InvalidParam { name: "step", .. })
        ));
        p.step = 0.5;
        p.bounds[1] = Bounds::new(1.0, 1.0);
        assert!(p.validate().is_err());
        p.bounds[1] = Bounds::new(f64::NEG_INFINITY, 1.0);
        assert_eq!(p.validate(), Err(SwarmError::NonFiniteBounds(1)));
    }

    #[test]
    fn init_checks_dimension() {
        let p = params2(2.0, 0.5, 5.0);
        let err = init_swarm(&p, &Sphere { dimension: 3 }, 1).unwrap_err();
        assert_eq!(
            err,
            SwarmError::DimensionMismatch {
                objective: 3,
                bounds: 2
            }
        );
    }

    #[test]
    fn init_bulletin_is_best_initial_fish() {
        let mut p = params2(2.0, 0.5, 5.0);
        p.population_size = 3;
        let s = init_swarm(&p, &SPHERE, 42).unwrap();
        assert_eq!(s.fish.len(), 3);
        let min = s.fish.iter().map(|f| f.fitness).fold(f64::INFINITY, f64::min);
        assert_eq!(s.best_fitness(), Some(min));
        assert_eq!(s.iteration, 0);

        p.population_size = 1;
        let s = init_swarm(&p, &SPHERE, 9).unwrap();
        let b = s.bulletin.as_ref().unwrap();
        assert_eq!(b.position, s.fish[0].position);
        assert_eq!(b.fitness, s.fish[0].fitness);
    }

    #[test]
    fn init_positions_inside_bounds() {
        let mut p = params2(2.0, 0.5, 5.0);
        p.population_size = 20;
        let s = init_swarm(&p, &SPHERE, 7).unwrap();
        let coords: Vec<f64> = s.fish.iter().flat_map(|f| f.position.clone()).collect();
        assert_eq!(coords.len(), 40);
        assert!(coords.iter().all(|x| (-5.0..=5.0).contains(x)));
    }

    #[test]
    fn vision_candidate_examples() {
        let p = params2(2.0, 0.5, 5.0);
        let f = fish(0, vec![0.0, 0.0], &SPHERE);
        let c = candidate_in_vision(&f, &p, &mut ScriptedSource::new([0.0, -0.5]));
        assert_eq!(c, vec![0.0, -1.0]);

        let mut lit = p.clone();
        lit.vision_draw = VisionDraw::Literal;
        let c = candidate_in_vision(&f, &lit, &mut ScriptedSource::new([0.5, 0.25]));
        assert_eq!(c, vec![1.0, 0.5]);

        let corner = fish(0, vec![5.0, 5.0], &SPHERE);
        let c = candidate_in_vision(&corner, &p, &mut ScriptedSource::new([1.0, 1.0]));
        assert_eq!(c, vec![5.0, 5.0]);
    }

    #[test]
    fn move_toward_examples() {
        let p = params2(2.0, 1.0, 5.0);
        let f = fish(0, vec![0.0, 0.0], &SPHERE);
        let next = move_toward(&f, &[3.0, 4.0], &p, &mut ScriptedSource::new([1.0]));
        assert!((next[0] - 0.6).abs() < 1e-15 && (next[1] - 0.8).abs() < 1e-15);

        // 1 - 0.3/sqrt(2), computed independently.
        let p = params2(2.0, 0.3, 5.0);
        let f = fish(0, vec![1.0, 1.0], &SPHERE);
        let next = move_toward(&f, &[0.5, 0.5], &p, &mut ScriptedSource::new([1.0]));
        for x in next {
            assert!((x - 0.787_867_965_644_035_7).abs() < 1e-12);
        }

        let f = fish(0, vec![2.0, 2.0], &SPHERE);
        let mut rng = ScriptedSource::new([]);
        assert_eq!(move_toward(&f, &[2.0, 2.0], &p, &mut rng), vec![2.0, 2.0]);
        assert_eq!(rng.consumed(), 0);
    }

    #[test]
    fn neighbor_radius_is_strict() {
        let p = params2(1.0, 0.5, 5.0);
        let a = fish(0, vec![0.0, 0.0], &SPHERE);
        let b = fish(1, vec![0.5, 0.0], &SPHERE);
        let s = state_of(vec![a.clone(), b.clone()]);
        assert_eq!(neighbors(&a, &s, &p).len(), 1);
        assert_eq!(neighbors(&b, &s, &p)[0].id, FishId(0));

        let far = fish(1, vec![2.0, 0.0], &SPHERE);
        let s = state_of(vec![a.clone(), far]);
        assert!(neighbors(&a, &s, &p).is_empty());

        let edge = fish(1, vec![1.0, 0.0], &SPHERE);
        let s = state_of(vec![a.clone(), edge]);
        assert!(neighbors(&a, &s, &p).is_empty());
    }

    #[test]
    fn prey_moves_toward_first_improving_candidate() {
        let mut p = params2(2.0, 0.3, 5.0);
        let f = fish(0, vec![1.0, 1.0], &SPHERE);
        // signed draws -0.25 → candidate (0.5, 0.5); then r = 1.
        let next = behavior_prey(&f, &p, &SPHERE, &mut ScriptedSource::new([-0.25, -0.25, 1.0]));
        for x in next {
            assert!((x - 0.787_867_965_644_035_7).abs() < 1e-12);
        }

        p.try_number = 1;
        let counting = Counting {
            inner: &SPHERE,
            calls: Cell::new(0),
        };
        behavior_prey(&f, &p, &counting, &mut ScriptedSource::new([-0.25, -0.25, 1.0]));
        assert_eq!(counting.calls.get(), 1);
    }

    #[test]
    fn prey_falls_back_to_random_move_on_flat_objective() {
        let p = params2(2.0, 0.5, 5.0);
        let flat = FnObjective::new(2, |_| 1.0);
        let f = fish(0, vec![0.0, 0.0], &flat);
        let mut draws: Vec<f64> = vec![0.3; 2 * p.try_number];
        draws.extend([1.0, -1.0]);
        let mut rng = ScriptedSource::new(draws);
        let next = behavior_prey(&f, &p, &flat, &mut rng);
        assert_eq!(next, vec![0.5, -0.5]);
        assert_eq!(rng.remaining(), 0);
    }

    #[test]
    fn swarm_without_neighbors_matches_prey() {
        let p = params2(1.0, 0.5, 5.0);
        let f = fish(0, vec![1.0, 1.0], &SPHERE);
        let s = state_of(vec![f.clone(), fish(1, vec![-4.0, -4.0], &SPHERE)]);
        let a = behavior_swarm(&f, &s, &p, &SPHERE, &mut Substream::from_seed(3));
        let b = behavior_prey(&f, &p, &SPHERE, &mut Substream::from_seed(3));
        assert_eq!(a, b);
    }

    #[test]
    fn swarm_moves_toward_uncrowded_better_center() {
        let p = params2(2.0, 0.3, 5.0);
        let me = fish(0, vec![1.0, 1.0], &SPHERE);
        let s = state_of(vec![
            me.clone(),
            fish(1, vec![0.0, 0.0], &SPHERE),
            fish(2, vec![2.0, 0.0], &SPHERE),
        ]);
        // Center (1, 0) has fitness 1 < 2 and 2/10 <= 0.618.
        let next = behavior_swarm(&me, &s, &p, &SPHERE, &mut ScriptedSource::new([1.0]));
        assert!((next[0] - 1.0).abs() < 1e-15);
        assert!((next[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn swarm_crowded_center_falls_back_to_prey() {
        let mut p = params2(2.0, 0.3, 5.0);
        p.population_size = 3;
        let me = fish(0, vec![1.0, 1.0], &SPHERE);
        let s = state_of(vec![
            me.clone(),
            fish(1, vec![0.0, 0.0], &SPHERE),
            fish(2, vec![2.0, 0.0], &SPHERE),
        ]);
        let a = behavior_swarm(&me, &s, &p, &SPHERE, &mut Substream::from_seed(5));
        let b = behavior_prey(&me, &p, &SPHERE, &mut Substream::from_seed(5));
        assert_eq!(a, b);
    }

    #[test]
    fn follow_picks_lowest_id_among_equal_leaders() {
        let p = params2(3.0, 0.5, 5.0);
        let me = fish(0, vec![2.0, 2.0], &SPHERE);
        let s = state_of(vec![
            me.clone(),
            fish(1, vec![1.0, 0.0], &SPHERE),
            fish(2, vec![0.0, 1.0], &SPHERE),
        ]);
        let next = behavior_follow(&me, &s, &p, &SPHERE, &mut ScriptedSource::new([1.0]));
        let dir = [-1.0 / 5f64.sqrt(), -2.0 / 5f64.sqrt()];
        assert!((next[0] - (2.0 + 0.5 * dir[0])).abs() < 1e-12);
        assert!((next[1] - (2.0 + 0.5 * dir[1])).abs() < 1e-12);
    }

    #[test]
    fn follow_worse_leader_falls_back_to_prey() {
        let p = params2(3.0, 0.5, 5.0);
        let me = fish(0, vec![0.1, 0.1], &SPHERE);
        let s = state_of(vec![me.clone(), fish(1, vec![1.0, 1.0], &SPHERE)]);
        let a = behavior_follow(&me, &s, &p, &SPHERE, &mut Substream::from_seed(8));
        let b = behavior_prey(&me, &p, &SPHERE, &mut Substream::from_seed(8));
        assert_eq!(a, b);
    }

    #[test]
    fn random_move_examples() {
        let p = params2(2.0, 0.5, 5.0);
        let origin = fish(0, vec![0.0, 0.0], &SPHERE);
        assert_eq!(
            behavior_move(&origin, &p, &mut ScriptedSource::new([0.0, 0.0])),
            vec![0.0, 0.0]
        );
        assert_eq!(
            behavior_move(&origin, &p, &mut ScriptedSource::new([1.0, 1.0])),
            vec![0.5, 0.5]
        );
        let corner = fish(0, vec![5.0, -5.0], &SPHERE);
        assert_eq!(
            behavior_move(&corner, &p, &mut ScriptedSource::new([1.0, -1.0])),
            vec![5.0, -5.0]
        );
    }

    #[test]
    fn singleton_population_keeps_count_and_improves_bulletin() {
        let mut p = params2(2.0, 0.5, 5.0);
        p.population_size = 1;
        let mut s = init_swarm(&p, &SPHERE, 4).unwrap();
        let before = s.best_fitness().unwrap();
        step_iteration(&mut s, &p, &SPHERE);
        assert_eq!(s.fish.len(), 1);
        assert_eq!(s.iteration, 1);
        assert!(s.best_fitness().unwrap() <= before);
    }

    #[test]
    fn step_is_deterministic() {
        let p = params2(2.0, 0.5, 5.0);
        let s0 = init_swarm(&p, &SPHERE, 12).unwrap();
        let mut a = s0.clone();
        let mut b = s0;
        step_iteration(&mut a, &p, &SPHERE);
        step_iteration(&mut b, &p, &SPHERE);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn run_zero_iterations_is_noop() {
        let p = params2(2.0, 0.5, 5.0);
        let mut s = init_swarm(&p, &SPHERE, 1).unwrap();
        let before = s.clone();
        assert!(run(&mut s, &p, &SPHERE, 0).is_empty());
        assert_eq!(s, before);
    }

    #[test]
    fn history_csv_has_header() {
        assert_eq!(history_csv(&[2.5, 1.0]), "iteration,best_fitness\n1,2.5\n2,1\n");
    }

    #[test]
    fn remove_and_lookup() {
        let p = params2(2.0, 0.5, 5.0);
        let mut s = init_swarm(&p, &SPHERE, 1).unwrap();
        assert!(s.remove(FishId(3)).is_some());
        assert!(s.get(FishId(3)).is_none());
        assert!(s.remove(FishId(3)).is_none());
        let id = s.spawn_random(&p, &SPHERE);
        assert_eq!(id, FishId(10));
        assert_eq!(s.fish.len(), 10);
    }
}
