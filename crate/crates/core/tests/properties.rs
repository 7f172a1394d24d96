use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;
use shoal_core::afsa::{
    self, candidate_in_vision, move_toward, step_iteration, ArtificialFish, Bounds, FishId, FnObjective, Objective,
    Sphere, SwarmParams, VisionDraw,
};
use shoal_core::dispatcher::{coordinates, KeywordField, TaskItem};
use shoal_core::gridsim::{GridSim, Gridlet, Policy, ResourceId, ResourceSpec, StatsReport};
use shoal_core::rng::Substream;
use shoal_core::scheduling::canvas::{plane_bounds, CanvasRun, FishState};
use shoal_core::scheduling::{decode, estimate_makespan, simulate, Assignment, ScheduleProblem};

fn params(dim: usize, lo: f64, hi: f64, visual: f64, step: f64, draw: VisionDraw) -> SwarmParams {
    SwarmParams {
        visual,
        step,
        try_number: 3,
        delta: 0.618,
        population_size: 8,
        max_iterations: 10,
        bounds: vec![Bounds::new(lo, hi); dim],
        vision_draw: draw,
    }
}

fn fish(position: Vec<f64>) -> ArtificialFish {
    ArtificialFish {
        id: FishId(0),
        position,
        fitness: 0.0,
        task_ref: None,
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn vec_pair(dim: usize, span: f64) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-span..span, dim),
        prop::collection::vec(-span..span, dim),
    )
}

proptest! {
    #[test]
    fn move_toward_is_short_and_collinear(
        (x, t) in (1usize..6).prop_flat_map(|d| vec_pair(d, 10.0)),
        step in 0.01f64..5.0,
        seed in any::<u64>(),
    ) {
        let p = params(x.len(), -1e6, 1e6, step, step, VisionDraw::Symmetric);
        let next = move_toward(&fish(x.clone()), &t, &p, &mut Substream::from_seed(seed));
        let d: Vec<f64> = next.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dir: Vec<f64> = t.iter().zip(&x).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&d) <= step * (1.0 + 1e-12));
        let dot: f64 = d.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let scale = norm(&d) * norm(&dir);
        prop_assert!(dot >= -1e-12);
        prop_assert!(scale - dot <= 1e-9 * scale.max(1e-300));
    }

    #[test]
    fn clamped_moves_stay_in_bounds_and_short(
        (x, t) in (1usize..5).prop_flat_map(|d| vec_pair(d, 2.0)),
        step in 0.01f64..3.0,
        seed in any::<u64>(),
    ) {
        let p = params(x.len(), -1.0, 1.0, step, step, VisionDraw::Symmetric);
        let mut start = x.clone();
        p.clamp(&mut start);
        let next = move_toward(&fish(start.clone()), &t, &p, &mut Substream::from_seed(seed));
        let d: Vec<f64> = next.iter().zip(&start).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&d) <= step * (1.0 + 1e-12));
        prop_assert!(next.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn vision_candidates_are_local(
        x in prop::collection::vec(-5.0f64..5.0, 1..6),
        visual in 0.01f64..3.0,
        literal in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let draw = if literal { VisionDraw::Literal } else { VisionDraw::Symmetric };
        let p = params(x.len(), -5.0, 5.0, visual, visual, draw);
        let c = candidate_in_vision(&fish(x.clone()), &p, &mut Substream::from_seed(seed));
        for (ci, xi) in c.iter().zip(&x) {
            prop_assert!((ci - xi).abs() <= visual * (1.0 + 1e-12));
            prop_assert!((-5.0..=5.0).contains(ci));
        }
    }

    #[test]
    fn swarm_invariants_hold_across_iterations(seed in any::<u64>(), dim in 1usize..4, shifted in any::<bool>()) {
        let p = SwarmParams {
            visual: 1.5,
            step: 0.4,
            try_number: 3,
            delta: 0.618,
            population_size: 8,
            max_iterations: 15,
            bounds: vec![Bounds::new(-3.0, 3.0); dim],
            vision_draw: VisionDraw::Symmetric,
        };
        let obj: Box<dyn Objective> = if shifted {
            Box::new(FnObjective::new(dim, |x: &[f64]| x.iter().map(|v| (v - 1.0).abs() + (3.0 * v).cos()).sum()))
        } else {
            Box::new(Sphere { dimension: dim })
        };
        let mut state = afsa::init_swarm(&p, obj.as_ref(), seed).unwrap();
        let mut twin = state.clone();
        let mut last = state.best_fitness().unwrap();
        for _ in 0..p.max_iterations {
            step_iteration(&mut state, &p, obj.as_ref());
            step_iteration(&mut twin, &p, obj.as_ref());
            let best = state.best_fitness().unwrap();
            prop_assert!(best <= last);
            prop_assert!(state.fish.iter().all(|f| best <= f.fitness));
            prop_assert_eq!(state.fish.len(), 8);
            for f in &state.fish {
                prop_assert!(f.position.iter().all(|v| (-3.0..=3.0).contains(v)));
            }
            last = best;
        }
        prop_assert_eq!(serde_json::to_string(&state).unwrap(), serde_json::to_string(&twin).unwrap());
    }

    #[test]
    fn coordinates_ignore_keyword_order(
        n in 2usize..20,
        mask in any::<u32>(),
        shuffle_seed in any::<u64>(),
    ) {
        let words: Vec<String> = (0..n).map(|i| format!("k{i:02}")).collect();
        let field = KeywordField::new("F", &words).unwrap();
        let mut present: Vec<String> = words.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, w)| w.clone()).collect();
        let a = coordinates(&field, &item(&present)).unwrap();
        let mut rng = Substream::from_seed(shuffle_seed);
        for i in (1..present.len()).rev() {
            let j = (rng.uniform(0.0, (i + 1) as f64) as usize).min(i);
            present.swap(i, j);
        }
        let upper: Vec<String> = present.iter().map(|w| w.to_uppercase()).collect();
        prop_assert_eq!(coordinates(&field, &item(&upper)).unwrap(), a);
        let (w, h) = field.extent();
        prop_assert!(a.x < w && a.y < h);
    }

    #[test]
    fn decode_is_total(
        v in prop::collection::vec(prop_oneof![
            any::<f64>(),
            Just(f64::INFINITY),
            Just(f64::NEG_INFINITY),
            Just(f64::NAN),
            Just(f64::MAX),
            Just(-f64::MAX),
            -10.0f64..10.0,
        ], 0..12),
        m in 1usize..6,
    ) {
        let a = decode(&v, m);
        prop_assert_eq!(a.0.len(), v.len());
        prop_assert!(a.0.iter().all(|&r| r < m));
    }

    #[test]
    fn estimate_matches_simulation_on_single_pe_space_shared(
        lengths in prop::collection::vec(100.0f64..1000.0, 1..9),
        ratings in prop::collection::vec(50.0f64..200.0, 1..4),
        pick in prop::collection::vec(any::<usize>(), 8),
    ) {
        let p = problem(&lengths, &ratings);
        let a = Assignment(lengths.iter().enumerate().map(|(i, _)| pick[i] % ratings.len()).collect());
        let est = estimate_makespan(&p, &a);
        let sim = StatsReport::new(&simulate(&p, &a).unwrap()).makespan();
        prop_assert!((est - sim).abs() <= 1e-9 * est);
    }

    #[test]
    fn optimal_set_is_scale_invariant(
        lengths in prop::collection::vec(100.0f64..1000.0, 1..6),
        ratings in prop::collection::vec(50.0f64..200.0, 1..4),
        c in 0.1f64..10.0,
    ) {
        let base = optimal_set(&problem(&lengths, &ratings));
        let scaled: Vec<f64> = lengths.iter().map(|l| l * c).collect();
        prop_assert_eq!(optimal_set(&problem(&scaled, &ratings)), base);
    }

    #[test]
    fn grid_runs_are_complete_monotone_and_conserving(
        jobs in prop::collection::vec((10.0f64..500.0, 0.0f64..20.0, 0usize..3), 1..20),
        space_pes in prop::collection::vec(50.0f64..200.0, 1..3),
        shared_rating in 50.0f64..200.0,
    ) {
        let resources = vec![
            ResourceSpec::uniform(0, Policy::SpaceShared, &space_pes),
            ResourceSpec::uniform(1, Policy::TimeShared, &[shared_rating]),
            ResourceSpec::uniform(2, Policy::TimeShared, &[shared_rating / 2.0, shared_rating / 2.0]),
        ];
        let mut sim = GridSim::new(resources).unwrap();
        for (i, &(len, at, r)) in jobs.iter().enumerate() {
            sim.submit(Gridlet::new(i as u64, len, at), ResourceId(r)).unwrap();
        }
        let mut last = (f64::NEG_INFINITY, 0u64);
        while let Some(e) = sim.step_event() {
            prop_assert!(e.time > last.0 || (e.time == last.0 && e.seq > last.1));
            last = (e.time, e.seq);
            prop_assert!(sim.capacity_respected());
        }
        let stats = sim.completed().to_vec();
        prop_assert_eq!(stats.len(), jobs.len());
        for s in &stats {
            prop_assert_eq!(s.waiting_time, s.start_time - s.submit_time);
            prop_assert_eq!(s.exec_time, s.finish_time - s.start_time);
            let (len, _, r) = jobs[s.job_id.0 as usize];
            if r == 0 {
                // Space-shared: the job runs alone on one PE.
                let ok = space_pes.iter().any(|pe| ((len / pe) - s.exec_time).abs() <= 1e-9 * s.exec_time);
                prop_assert!(ok);
            }
        }
        let report = StatsReport::new(&stats);
        for agg in report.resources.iter().filter(|a| a.resource_id.0 > 0) {
            let work: f64 = jobs.iter().filter(|j| j.2 == agg.resource_id.0).map(|j| j.0).sum();
            // Both time-shared resources total `shared_rating` and are fully
            // used whenever any job is resident.
            prop_assert!((work - shared_rating * agg.busy_time).abs() <= 1e-9 * work);
        }
    }

    #[test]
    fn canvas_dispatch_is_monotone(seed in any::<u64>(), jobs in 1usize..12) {
        let mut resources = vec![
            ResourceSpec::uniform(0, Policy::SpaceShared, &[100.0]),
            ResourceSpec::uniform(1, Policy::TimeShared, &[80.0]),
        ];
        resources[0].plane_position = Some(shoal_core::dispatcher::TaskCoordinates { x: 2, y: 2 });
        resources[1].plane_position = Some(shoal_core::dispatcher::TaskCoordinates { x: 12, y: 9 });
        let p = SwarmParams {
            visual: 3.0,
            step: 1.0,
            try_number: 4,
            delta: 0.618,
            population_size: 12,
            max_iterations: 40,
            bounds: plane_bounds(16.0, 16.0),
            vision_draw: VisionDraw::Symmetric,
        };
        let mut run = CanvasRun::new(p, resources, 1.0, 1.0, seed).unwrap();
        for j in 0..jobs {
            run.add_task(Gridlet::new(j as u64, 100.0 + 10.0 * j as f64, 0.0), None).unwrap();
        }
        let mut settled: HashSet<FishId> = HashSet::new();
        for _ in 0..40 {
            run.step();
            let fish = run.fish();
            for f in &fish {
                if settled.contains(&f.fish.id) {
                    prop_assert_ne!(f.state, FishState::Swimming);
                }
                if f.state != FishState::Swimming {
                    settled.insert(f.fish.id);
                }
            }
            prop_assert_eq!(run.sim().submitted_count(), settled.len());
            prop_assert_eq!(fish.len(), jobs);
        }
        run.drain();
        prop_assert_eq!(run.sim().completed().len(), jobs);
    }
}

fn item(keywords: &[String]) -> TaskItem {
    TaskItem {
        name: "t".into(),
        field_name: "F".into(),
        keywords: keywords.iter().map(|k| k.to_lowercase()).collect(),
    }
}

/// Presence set recovered from coordinates: bit `i` of `x` marks keyword `i`,
/// bit `i` of `y` marks keyword `⌈n/2⌉ + i`.
fn inverse(field: &KeywordField, x: u64, y: u64) -> BTreeSet<String> {
    let half = field.len().div_ceil(2);
    field
        .keywords()
        .iter()
        .enumerate()
        .filter(|&(i, _)| {
            if i < half {
                x >> i & 1 == 1
            } else {
                y >> (i - half) & 1 == 1
            }
        })
        .map(|(_, k)| k.clone())
        .collect()
}

#[test]
fn presence_sets_biject_onto_the_plane() {
    for n in 2..=12usize {
        let words: Vec<String> = (0..n).map(|i| format!("w{i:02}")).collect();
        let field = KeywordField::new("F", &words).unwrap();
        let (w, h) = field.extent();
        let mut seen = HashSet::new();
        for mask in 0u32..(1 << n) {
            let present: Vec<String> = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| words[i].clone())
                .collect();
            let c = coordinates(&field, &item(&present)).unwrap();
            assert!(c.x < w && c.y < h);
            assert!(seen.insert((c.x, c.y)), "n={n} mask={mask:b} collides");
            assert_eq!(inverse(&field, c.x, c.y), present.into_iter().collect::<BTreeSet<_>>());
        }
        assert_eq!(seen.len() as u64, w * h);
    }
}

fn problem(lengths: &[f64], ratings: &[f64]) -> ScheduleProblem {
    ScheduleProblem::new(
        lengths
            .iter()
            .enumerate()
            .map(|(i, &l)| Gridlet::new(i as u64, l, 0.0))
            .collect(),
        ratings
            .iter()
            .enumerate()
            .map(|(i, &r)| ResourceSpec::uniform(i, Policy::SpaceShared, &[r]))
            .collect(),
    )
    .unwrap()
}

/// Every assignment within 1e-9 relative of the minimum, by enumeration.
fn optimal_set(p: &ScheduleProblem) -> BTreeSet<Vec<usize>> {
    let (j, m) = (p.jobs.len(), p.resources.len());
    let mut all = Vec::new();
    for code in 0..m.pow(j as u32) {
        let mut a = Vec::with_capacity(j);
        let mut c = code;
        for _ in 0..j {
            a.push(c % m);
            c /= m;
        }
        let cost = estimate_makespan(p, &Assignment(a.clone()));
        all.push((a, cost));
    }
    let best = all.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    all.into_iter()
        .filter(|x| x.1 <= best * (1.0 + 1e-9))
        .map(|x| x.0)
        .collect()
}
