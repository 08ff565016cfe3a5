//! Exhaustive oracles for small instances: proportional shares and CMNW.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ids::{AgentId, ClassId, ItemId};
use crate::instance::Instance;
use crate::matching::Matching;

use super::{cnsw_of_values, maximum_matching};

const FREE: usize = usize::MAX;

/// Size limits for the exhaustive searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleCaps {
    pub prop_items: usize,
    pub prop_classes: usize,
    pub cmnw_items: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            prop_items: 10,
            prop_classes: 4,
            cmnw_items: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropShare {
    pub class: ClassId,
    /// Best integral `min_j V_i*(Y_j)` over class-feasible assignments.
    pub value: usize,
    /// Upper bound on the divisible optimum.
    pub upper_bound: f64,
    /// Set when `value` is below `upper_bound`, i.e. a divisible matching
    /// might do better than the integral optimum reported here.
    pub divisible_gap: bool,
}

fn check_cap(what: &'static str, actual: usize, cap: usize) -> Result<()> {
    if actual > cap {
        return Err(Error::OracleCap { what, actual, cap });
    }
    Ok(())
}

pub fn prop_share_oracle(inst: &Instance, class: ClassId) -> Result<PropShare> {
    prop_share_oracle_with_caps(inst, class, &OracleCaps::default())
}

pub fn prop_share_oracle_with_caps(
    inst: &Instance,
    class: ClassId,
    caps: &OracleCaps,
) -> Result<PropShare> {
    inst.check_class(class)?;
    check_cap("item count", inst.num_items(), caps.prop_items)?;
    check_cap("class count", inst.num_classes(), caps.prop_classes)?;

    // Items class i does not like add nothing to any V_i*(Y_j), and dropping
    // them keeps every bundle feasible, so they stay unassigned.
    let liked: Vec<ItemId> = inst
        .items()
        .filter(|&o| !inst.class_neighbors(o, class).is_empty())
        .collect();
    let k = inst.num_classes();

    // Bounds on the divisible optimum: V_i*(y_j) is at most |N_i|, at most
    // the mass class j can absorb from liked items, and the k bundles share
    // the liked items, so the minimum is at most m_i / k.
    let mut int_bound = inst.class_size(class);
    for j in inst.classes() {
        let left: Vec<&[AgentId]> = liked.iter().map(|&o| inst.class_neighbors(o, j)).collect();
        int_bound = int_bound.min(maximum_matching(&left, inst.num_agents()).size);
    }
    let m_i = liked.len();
    let upper_bound = (int_bound as f64).min(m_i as f64 / k as f64);

    let mut search = PropSearch::new(inst, class, liked);
    // No integral assignment can beat floor(upper_bound).
    search.target = int_bound.min(m_i / k);
    search.run(0);
    let value = search.best;

    let reaches_bound = value >= int_bound || value * k >= m_i;
    Ok(PropShare {
        class,
        value,
        upper_bound,
        divisible_gap: !reaches_bound,
    })
}

/// Proportional shares of every class.
pub fn prop_shares(inst: &Instance, caps: &OracleCaps) -> Result<Vec<PropShare>> {
    inst.classes()
        .map(|c| prop_share_oracle_with_caps(inst, c, caps))
        .collect()
}

// Depth-first search over class assignments of the liked items. Each class
// keeps two incremental matchings: one proving Y_j fits into class j, one
// measuring V_i*(Y_j). Changes are undone through a log.
struct PropSearch<'a> {
    inst: &'a Instance,
    class: ClassId,
    items: Vec<ItemId>,
    n: usize,
    // [0, n): feasibility mates (agent -> local item); then k blocks of n
    // value mates for class-i agents against each Y_j.
    mates: Vec<usize>,
    log: Vec<(usize, usize)>,
    stamp: Vec<u32>,
    generation: u32,
    values: Vec<usize>,
    best: usize,
    target: usize,
}

impl<'a> PropSearch<'a> {
    fn new(inst: &'a Instance, class: ClassId, items: Vec<ItemId>) -> Self {
        let n = inst.num_agents();
        let k = inst.num_classes();
        PropSearch {
            inst,
            class,
            items,
            n,
            mates: vec![FREE; n * (k + 1)],
            log: Vec::new(),
            stamp: vec![0; n],
            generation: 0,
            values: vec![0; k],
            best: 0,
            target: 0,
        }
    }

    fn run(&mut self, pos: usize) {
        if self.best >= self.target {
            return;
        }
        let remaining = self.items.len() - pos;
        if water_fill_min(&self.values, remaining) <= self.best {
            return;
        }
        if pos == self.items.len() {
            self.best = self.best.max(*self.values.iter().min().unwrap());
            return;
        }
        let o = self.items[pos];
        let mut order: Vec<usize> = (0..self.values.len())
            .filter(|&j| !self.inst.class_neighbors(o, ClassId(j)).is_empty())
            .collect();
        order.sort_by_key(|&j| (self.values[j], j));
        for j in order {
            let mark = self.log.len();
            self.generation += 1;
            if !self.augment(pos, j, 0) {
                continue;
            }
            self.generation += 1;
            let base = self.n * (j + 1);
            // Assigning without a gain only consumes capacity of class j;
            // leaving the item unassigned dominates it.
            if self.augment(pos, self.class.0, base) {
                self.values[j] += 1;
                self.run(pos + 1);
                self.values[j] -= 1;
            }
            self.undo(mark);
        }
        self.run(pos + 1);
    }

    // Kuhn step: find an augmenting path from local item `u` using the agents
    // of `adj_class`, over the mate block starting at `base`. Mates only ever
    // change on success.
    fn augment(&mut self, u: usize, adj_class: usize, base: usize) -> bool {
        let inst = self.inst;
        let adj = inst.class_neighbors(self.items[u], ClassId(adj_class));
        for a in adj {
            let a = a.0;
            if self.stamp[a] == self.generation {
                continue;
            }
            self.stamp[a] = self.generation;
            let m = self.mates[base + a];
            if m == FREE || self.augment(m, adj_class, base) {
                self.log.push((base + a, m));
                self.mates[base + a] = u;
                return true;
            }
        }
        false
    }

    fn undo(&mut self, mark: usize) {
        while self.log.len() > mark {
            let (idx, old) = self.log.pop().unwrap();
            self.mates[idx] = old;
        }
    }
}

// Largest achievable minimum when `extra` unit increments are spread over
// `values`.
fn water_fill_min(values: &[usize], extra: usize) -> usize {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let mut left = extra;
    let mut level = sorted[0];
    loop {
        let need = sorted.iter().take_while(|&&v| v <= level).count();
        if need > left {
            return level;
        }
        left -= need;
        level += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CmnwResult {
    pub matching: Matching,
    pub cnsw: f64,
    pub class_values: Vec<usize>,
    /// Number of classes with a positive value.
    pub positive_classes: usize,
    /// Product of the positive class values.
    pub positive_product: u128,
}

pub fn cmnw_bruteforce(inst: &Instance) -> Result<CmnwResult> {
    cmnw_bruteforce_with_caps(inst, &OracleCaps::default())
}

/// Maximum-CNSW non-wasteful matching by exhaustive search.
///
/// When every class can be served the objective is the plain product of class
/// values. Otherwise every matching has CNSW 0, and the search maximizes the
/// number of served classes first and the product over served classes second.
/// Remaining ties go to the lexicographically smallest item-to-agent map,
/// with agents in ascending order and "unassigned" after every agent.
pub fn cmnw_bruteforce_with_caps(inst: &Instance, caps: &OracleCaps) -> Result<CmnwResult> {
    check_cap("item count", inst.num_items(), caps.cmnw_items)?;
    let mut last_item = vec![None; inst.num_agents()];
    for o in inst.items() {
        for a in inst.neighbors(o) {
            last_item[a.0] = Some(o.0);
        }
    }
    let mut search = CmnwSearch {
        inst,
        last_item,
        assignment: vec![None; inst.num_items()],
        used: vec![false; inst.num_agents()],
        values: vec![0; inst.num_classes()],
        best: None,
    };
    search.run(0);
    let (_, assignment) = search
        .best
        .expect("the greedy completion is always a non-wasteful leaf");
    let matching = Matching::from_pairs(
        inst,
        assignment
            .iter()
            .enumerate()
            .filter_map(|(o, a)| a.map(|a| (ItemId(o), a))),
    )?;
    let class_values: Vec<usize> = inst.classes().map(|c| matching.bundle(c).len()).collect();
    let (positive_classes, positive_product) = objective(&class_values);
    Ok(CmnwResult {
        cnsw: cnsw_of_values(&class_values),
        matching,
        class_values,
        positive_classes,
        positive_product,
    })
}

fn objective(values: &[usize]) -> (usize, u128) {
    values
        .iter()
        .filter(|&&v| v > 0)
        .fold((0, 1), |(n, p), &v| (n + 1, p * v as u128))
}

/// Objective key and the assignment that reached it.
type Incumbent = ((usize, u128), Vec<Option<AgentId>>);

struct CmnwSearch<'a> {
    inst: &'a Instance,
    last_item: Vec<Option<usize>>,
    assignment: Vec<Option<AgentId>>,
    used: Vec<bool>,
    values: Vec<usize>,
    best: Option<Incumbent>,
}

impl CmnwSearch<'_> {
    fn run(&mut self, pos: usize) {
        if let Some((best_key, _)) = &self.best {
            if self.bound(self.inst.num_items() - pos) <= *best_key {
                return;
            }
        }
        if pos == self.inst.num_items() {
            if self.is_nonwasteful() {
                self.best = Some((objective(&self.values), self.assignment.clone()));
            }
            return;
        }
        let o = ItemId(pos);
        let inst = self.inst;
        // Neighbor lists keep input order; visit agents ascending.
        let mut free: Vec<AgentId> = inst
            .neighbors(o)
            .iter()
            .copied()
            .filter(|a| !self.used[a.0])
            .collect();
        free.sort_unstable();
        for &a in &free {
            let c = inst.class_of(a).0;
            self.used[a.0] = true;
            self.assignment[pos] = Some(a);
            self.values[c] += 1;
            self.run(pos + 1);
            self.values[c] -= 1;
            self.assignment[pos] = None;
            self.used[a.0] = false;
        }
        // Leaving the item unassigned is wasteful for good if some free
        // neighbor has no later item left to saturate it.
        let doomed = free
            .iter()
            .any(|a| self.last_item[a.0].is_some_and(|last| last <= pos));
        if !doomed {
            self.run(pos + 1);
        }
    }

    fn is_nonwasteful(&self) -> bool {
        self.assignment.iter().enumerate().all(|(o, a)| {
            a.is_some() || self.inst.neighbors(ItemId(o)).iter().all(|b| self.used[b.0])
        })
    }

    // Best objective reachable with `remaining` more items. A zero class
    // counts as 1 in the product, which only loosens the bound.
    fn bound(&self, remaining: usize) -> (usize, u128) {
        let zeros = self.values.iter().filter(|&&v| v == 0).count();
        let positive = self.values.len() - zeros + remaining.min(zeros);
        let mut lifted: Vec<usize> = self.values.iter().map(|&v| v.max(1)).collect();
        for _ in 0..remaining {
            let smallest = (0..lifted.len()).min_by_key(|&j| lifted[j]).unwrap();
            lifted[smallest] += 1;
        }
        (positive, lifted.iter().map(|&v| v as u128).product())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_cnsw_counterexample, make_instance};
    use crate::matching::is_nonwasteful;
    use crate::valuation::{cef1_check, usw_opt};

    #[test]
    fn water_fill() {
        assert_eq!(water_fill_min(&[0, 0], 0), 0);
        assert_eq!(water_fill_min(&[0, 0], 1), 0);
        assert_eq!(water_fill_min(&[0, 0], 2), 1);
        assert_eq!(water_fill_min(&[3, 0], 2), 2);
        assert_eq!(water_fill_min(&[5], 4), 9);
    }

    #[test]
    fn prop_single_class_is_usw_opt() {
        let inst = make_instance(1, vec![0; 3], vec![vec![0, 1], vec![0], vec![0], vec![2]]).unwrap();
        let share = prop_share_oracle(&inst, ClassId(0)).unwrap();
        assert_eq!(share.value, usw_opt(&inst));
        assert!(!share.divisible_gap);
    }

    #[test]
    fn prop_two_contested_items() {
        let inst = make_instance(2, vec![0, 0, 1, 1], vec![vec![0, 1, 2, 3]; 2]).unwrap();
        for c in inst.classes() {
            let share = prop_share_oracle(&inst, c).unwrap();
            assert_eq!(share.value, 1);
            assert!(!share.divisible_gap);
        }
    }

    #[test]
    fn prop_ignores_unliked_items() {
        let inst = make_instance(2, vec![0, 1], vec![vec![], vec![0, 1], vec![0, 1]]).unwrap();
        let share = prop_share_oracle(&inst, ClassId(0)).unwrap();
        assert_eq!(share.value, 1);
    }

    #[test]
    fn prop_gap_flag() {
        // Three items liked by both single-agent classes: integrally one
        // class gets at most one item, divisibly each class could get 1.
        // With only one agent per class the bound is 1 and the flag clears.
        let inst = make_instance(2, vec![0, 1], vec![vec![0, 1]; 3]).unwrap();
        let share = prop_share_oracle(&inst, ClassId(0)).unwrap();
        assert_eq!(share.value, 1);
        assert!(!share.divisible_gap);
        // One item, two classes: divisibly each class could get half.
        let inst = make_instance(2, vec![0, 1], vec![vec![0, 1]]).unwrap();
        let share = prop_share_oracle(&inst, ClassId(0)).unwrap();
        assert_eq!(share.value, 0);
        assert!(share.divisible_gap);
        assert_eq!(share.upper_bound, 0.5);
    }

    #[test]
    fn prop_caps() {
        let inst = make_instance(1, vec![0], vec![vec![0]; 11]).unwrap();
        assert!(matches!(
            prop_share_oracle(&inst, ClassId(0)),
            Err(Error::OracleCap { actual: 11, cap: 10, .. })
        ));
        let inst = make_instance(5, vec![0, 1, 2, 3, 4], vec![vec![0]]).unwrap();
        assert!(prop_share_oracle(&inst, ClassId(0)).is_err());
    }

    #[test]
    fn cmnw_counterexample() {
        let inst = gen_cnsw_counterexample().unwrap();
        let res = cmnw_bruteforce(&inst).unwrap();
        assert!((res.cnsw - 3.0).abs() < 1e-12);
        assert_eq!(res.class_values, vec![3, 3]);
        assert!(is_nonwasteful(&inst, &res.matching));
        assert!(cef1_check(&inst, &res.matching));
    }

    #[test]
    fn cmnw_single_contested_item() {
        let inst = make_instance(2, vec![0, 1], vec![vec![0, 1]]).unwrap();
        let res = cmnw_bruteforce(&inst).unwrap();
        assert_eq!(res.cnsw, 0.0);
        // Lexicographically smallest: agent 0.
        assert_eq!(res.matching.agent_of(ItemId(0)), Some(AgentId(0)));
    }

    #[test]
    fn cmnw_prefers_serving_more_classes() {
        // Class 2 likes nothing, so CNSW is 0 everywhere. Serving both
        // class 0 and class 1 keeps CEF1; giving both items to class 0 does
        // not.
        let inst = make_instance(
            3,
            vec![0, 0, 1, 2],
            vec![vec![0, 1, 2], vec![0, 1, 2]],
        )
        .unwrap();
        let res = cmnw_bruteforce(&inst).unwrap();
        assert_eq!(res.positive_classes, 2);
        assert!(cef1_check(&inst, &res.matching));
    }

    #[test]
    fn cmnw_cap() {
        let inst = make_instance(1, vec![0], vec![vec![0]; 9]).unwrap();
        assert!(cmnw_bruteforce(&inst).is_err());
    }
}
