use crate::ids::{AgentId, ClassId, ItemId};
use crate::instance::Instance;
use crate::matching::Matching;
use crate::valuation::value_of_items;

fn lowest_free(inst: &Instance, m: &Matching, o: ItemId, c: ClassId) -> Option<AgentId> {
    inst.class_neighbors(o, c)
        .iter()
        .copied()
        .find(|&a| !m.is_saturated(a))
}

/// Each item goes to the eligible agent of the lowest class id, lowest agent
/// id within the class.
pub fn run_greedy_lexico(inst: &Instance) -> Matching {
    let mut m = Matching::empty(inst);
    for o in inst.items() {
        if let Some(a) = inst.classes().find_map(|c| lowest_free(inst, &m, o, c)) {
            m.assign(inst, o, a).expect("free neighbor");
        }
    }
    m
}

/// Online greedy that tries to keep every class `alpha`-envy-free.
///
/// Giving item `o` to class `j` is refused when some other candidate class
/// `i` (one that could take `o` itself) would end up with
/// `V_i < alpha * V_i*(Y_j + o)`. Among acceptable classes the one with the
/// smallest current value wins, lowest id on ties. When every candidate is
/// refused the item still goes to the candidate with the smallest value, so
/// the result is always non-wasteful. Agents are picked lowest id first.
pub fn run_envy_capped_greedy(inst: &Instance, alpha: f64) -> Matching {
    let mut m = Matching::empty(inst);
    let mut candidates = Vec::new();
    for o in inst.items() {
        candidates.clear();
        candidates.extend(
            inst.classes()
                .filter_map(|c| lowest_free(inst, &m, o, c).map(|a| (c, a))),
        );
        if candidates.is_empty() {
            continue;
        }
        let value = |c: ClassId| m.bundle(c).len();
        let acceptable = |j: ClassId| {
            candidates.iter().all(|&(i, _)| {
                if i == j {
                    return true;
                }
                let with_o = m.bundle(j).iter().copied().chain(std::iter::once(o));
                value(i) as f64 >= alpha * value_of_items(inst, i, with_o) as f64
            })
        };
        let pick = candidates
            .iter()
            .filter(|&&(c, _)| acceptable(c))
            .min_by_key(|&&(c, _)| (value(c), c))
            .or_else(|| candidates.iter().min_by_key(|&&(c, _)| (value(c), c)))
            .copied();
        let (_, agent) = pick.expect("candidates is nonempty");
        m.assign(inst, o, agent).expect("free neighbor");
    }
    m
}
