use rand::Rng;
use serde::Serialize;

use crate::ids::{AgentId, ClassId, ItemId};
use crate::instance::Instance;
use crate::matching::Matching;
use crate::rng::rng_from_seed;
use crate::valuation::Bundle;

/// What [`run_random_with`] records besides the final matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Keep one [`Step`] per item.
    pub steps: bool,
    /// Build the dummy-augmented bundles `A_i`.
    pub audit: bool,
    /// Track the class-0 count `n1(t)` and the stopping step `tau`
    /// (two-class instances only).
    pub track_class0: bool,
}

impl RunOptions {
    pub fn all() -> Self {
        RunOptions {
            steps: true,
            audit: true,
            track_class0: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    pub item: ItemId,
    /// Classes with an unsaturated agent liking the item, ascending.
    pub candidates: Vec<ClassId>,
    pub class: Option<ClassId>,
    pub agent: Option<AgentId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunTrace {
    pub matching: Matching,
    pub steps: Vec<Step>,
    pub audit: Option<Vec<Bundle>>,
    /// First `t` such that, after `t` items, no remaining item has an
    /// unsaturated class-0 neighbor.
    pub tau: Option<usize>,
    /// `n1[t]` for `t = 0..=m`: unsaturated class-0 agents adjacent to some
    /// item that has not arrived after `t` arrivals.
    pub n1_trajectory: Option<Vec<usize>>,
}

/// RANDOM with every recording option on.
pub fn run_random(inst: &Instance, seed: u64) -> RunTrace {
    run_random_with(inst, seed, RunOptions::all())
}

/// Processes items in arrival order. For each item the candidate classes are
/// listed ascending; one is drawn uniformly, then one of its eligible agents
/// (ascending ids) uniformly. The class draw always precedes the agent draw,
/// and items without candidates consume no randomness.
pub fn run_random_with(inst: &Instance, seed: u64, opts: RunOptions) -> RunTrace {
    let mut rng = rng_from_seed(seed);
    let mut matching = Matching::empty(inst);
    let mut steps = Vec::with_capacity(if opts.steps { inst.num_items() } else { 0 });
    let mut audit = opts.audit.then(|| vec![Bundle::new(); inst.num_classes()]);
    let mut tracker = (opts.track_class0 && inst.num_classes() == 2).then(|| Class0Tracker::new(inst));

    let mut candidates = Vec::with_capacity(inst.num_classes());
    let mut eligible = Vec::new();
    for o in inst.items() {
        candidates.clear();
        for c in inst.classes() {
            let adj = inst.class_neighbors(o, c);
            if adj.iter().any(|&a| !matching.is_saturated(a)) {
                candidates.push(c);
            } else if !adj.is_empty() {
                if let Some(audit) = audit.as_mut() {
                    audit[c.0].push_dummy(o);
                }
            }
        }
        let mut chosen = None;
        if !candidates.is_empty() {
            let class = candidates[rng.gen_range(0..candidates.len())];
            eligible.clear();
            eligible.extend(
                inst.class_neighbors(o, class)
                    .iter()
                    .copied()
                    .filter(|&a| !matching.is_saturated(a)),
            );
            let agent = eligible[rng.gen_range(0..eligible.len())];
            matching
                .assign(inst, o, agent)
                .expect("eligible agents are unsaturated neighbors");
            if let Some(audit) = audit.as_mut() {
                audit[class.0].push(o);
            }
            chosen = Some((class, agent));
        }
        if let Some(tracker) = tracker.as_mut() {
            tracker.advance(inst, o, chosen.map(|(_, a)| a));
        }
        if opts.steps {
            steps.push(Step {
                item: o,
                candidates: candidates.clone(),
                class: chosen.map(|(c, _)| c),
                agent: chosen.map(|(_, a)| a),
            });
        }
    }

    let (tau, n1_trajectory) = match tracker {
        Some(t) => {
            let tau = t.trajectory.iter().position(|&n1| n1 == 0);
            (tau, Some(t.trajectory))
        }
        None => (None, None),
    };
    RunTrace {
        matching,
        steps,
        audit,
        tau,
        n1_trajectory,
    }
}

// An agent is alive while unsaturated and adjacent to a future item.
struct Class0Tracker {
    last_item: Vec<Option<usize>>,
    dies_after: Vec<Vec<AgentId>>,
    alive: Vec<bool>,
    count: usize,
    trajectory: Vec<usize>,
}

impl Class0Tracker {
    fn new(inst: &Instance) -> Self {
        let mut last_item = vec![None; inst.num_agents()];
        for o in inst.items() {
            for a in inst.class_neighbors(o, ClassId(0)) {
                last_item[a.0] = Some(o.0);
            }
        }
        let mut dies_after = vec![Vec::new(); inst.num_items()];
        let mut alive = vec![false; inst.num_agents()];
        let mut count = 0;
        for &a in inst.class_agents(ClassId(0)) {
            if let Some(t) = last_item[a.0] {
                dies_after[t].push(a);
                alive[a.0] = true;
                count += 1;
            }
        }
        let mut trajectory = Vec::with_capacity(inst.num_items() + 1);
        trajectory.push(count);
        Class0Tracker {
            last_item,
            dies_after,
            alive,
            count,
            trajectory,
        }
    }

    fn advance(&mut self, inst: &Instance, o: ItemId, matched: Option<AgentId>) {
        if let Some(a) = matched {
            if inst.class_of(a) == ClassId(0) && self.alive[a.0] {
                self.alive[a.0] = false;
                self.count -= 1;
            }
        }
        for &a in &self.dies_after[o.0] {
            debug_assert_eq!(self.last_item[a.0], Some(o.0));
            if self.alive[a.0] {
                self.alive[a.0] = false;
                self.count -= 1;
            }
        }
        self.trajectory.push(self.count);
    }
}
