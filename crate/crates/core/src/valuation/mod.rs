//! Class valuations and the fairness/efficiency metrics built on them.
//!
//! `V_i(X)` is the number of items matched to class `i`. The optimistic
//! valuation `V_i*(B)` is the size of a maximum matching between the agents
//! of class `i` and the items of bundle `B`; it is monotone, capped by
//! `min(|B|, |N_i|)` and subadditive, but not additive.

mod max_matching;
mod oracle;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::Result;
use crate::ids::{AgentId, ClassId, ItemId};
use crate::instance::Instance;
use crate::matching::{is_nonwasteful, Matching};

pub(crate) use max_matching::maximum_matching;
pub use oracle::{
    cmnw_bruteforce, cmnw_bruteforce_with_caps, prop_share_oracle, prop_share_oracle_with_caps,
    prop_shares, CmnwResult, OracleCaps, PropShare,
};

/// One entry of a [`Bundle`]. Dummy entries are copies of items created by
/// the audit of the RANDOM algorithm; they match exactly like the original.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct BundleEntry {
    pub item: ItemId,
    pub dummy: bool,
}

/// Multiset of items evaluated by [`optimistic_value`]. Only dummy entries
/// may repeat an item.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Bundle {
    entries: Vec<BundleEntry>,
}

impl Bundle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_items(items: &[ItemId]) -> Self {
        Bundle {
            entries: items
                .iter()
                .map(|&item| BundleEntry { item, dummy: false })
                .collect(),
        }
    }

    pub fn push(&mut self, item: ItemId) {
        self.entries.push(BundleEntry { item, dummy: false });
    }

    pub fn push_dummy(&mut self, item: ItemId) {
        self.entries.push(BundleEntry { item, dummy: true });
    }

    pub fn entries(&self) -> &[BundleEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_dummies(&self) -> usize {
        self.entries.iter().filter(|e| e.dummy).count()
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.entries.iter().map(|e| e.item)
    }
}

/// `V_i*(B)`: maximum matching between class `class` and the bundle items.
pub fn optimistic_value(inst: &Instance, class: ClassId, bundle: &Bundle) -> Result<usize> {
    inst.check_class(class)?;
    for o in bundle.items() {
        inst.check_item(o)?;
    }
    Ok(value_of_items(inst, class, bundle.items()))
}

/// [`optimistic_value`] over plain item ids, without validation.
pub(crate) fn value_of_items(
    inst: &Instance,
    class: ClassId,
    items: impl IntoIterator<Item = ItemId>,
) -> usize {
    let left: Vec<&[AgentId]> = items
        .into_iter()
        .map(|o| inst.class_neighbors(o, class))
        .filter(|adj| !adj.is_empty())
        .collect();
    if left.is_empty() {
        return 0;
    }
    maximum_matching(&left, inst.num_agents()).size
}

/// `V_i(X) = |Y_i(X)|`.
pub fn class_value(inst: &Instance, m: &Matching, class: ClassId) -> Result<usize> {
    inst.check_class(class)?;
    Ok(m.bundle(class).len())
}

/// Offline optimum: maximum matching of the whole graph.
pub fn usw_opt(inst: &Instance) -> usize {
    let left: Vec<&[AgentId]> = inst.items().map(|o| inst.neighbors(o)).collect();
    maximum_matching(&left, inst.num_agents()).size
}

/// Ratio `V_i / V_i*(Y_j)` for one ordered pair, or `Satisfied` when the
/// denominator is zero (the inequality then holds for every alpha).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvyRatio {
    Finite(f64),
    Satisfied,
}

impl Serialize for EnvyRatio {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EnvyRatio::Finite(r) => s.serialize_f64(*r),
            EnvyRatio::Satisfied => s.serialize_str("SATISFIED"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CefPair {
    pub envious: ClassId,
    pub envied: ClassId,
    pub v_i: usize,
    pub v_star: usize,
    pub ratio: EnvyRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CefReport {
    pub pairs: Vec<CefPair>,
    /// Minimum finite ratio, capped at 1; 1 when every pair is satisfied.
    pub cef_alpha: f64,
}

/// Pairwise class envy for every ordered pair `i != j`.
pub fn cef_report(inst: &Instance, m: &Matching) -> CefReport {
    let mut pairs = Vec::new();
    let mut alpha: f64 = 1.0;
    for i in inst.classes() {
        let v_i = m.bundle(i).len();
        for j in inst.classes().filter(|&j| j != i) {
            let v_star = value_of_items(inst, i, m.bundle(j).iter().copied());
            let ratio = if v_star == 0 {
                EnvyRatio::Satisfied
            } else {
                let r = v_i as f64 / v_star as f64;
                alpha = alpha.min(r);
                EnvyRatio::Finite(r)
            };
            pairs.push(CefPair {
                envious: i,
                envied: j,
                v_i,
                v_star,
                ratio,
            });
        }
    }
    CefReport {
        pairs,
        cef_alpha: alpha,
    }
}

/// True iff every ordered pair is envy-free up to one item.
pub fn cef1_check(inst: &Instance, m: &Matching) -> bool {
    inst.classes().all(|i| {
        let v_i = m.bundle(i).len();
        inst.classes()
            .filter(|&j| j != i)
            .all(|j| cef1_pair(inst, v_i, i, m.bundle(j)))
    })
}

fn cef1_pair(inst: &Instance, v_i: usize, i: ClassId, y_j: &[ItemId]) -> bool {
    if y_j.is_empty() {
        return true;
    }
    let full = value_of_items(inst, i, y_j.iter().copied());
    // Removing one item lowers V_i* by at most one.
    if v_i >= full {
        return true;
    }
    if v_i + 1 < full {
        return false;
    }
    (0..y_j.len()).any(|skip| {
        let rest = y_j
            .iter()
            .enumerate()
            .filter(|&(idx, _)| idx != skip)
            .map(|(_, &o)| o);
        v_i >= value_of_items(inst, i, rest)
    })
}

/// Product of class values, used for exact CNSW comparisons.
pub fn cnsw_product(values: &[usize]) -> u128 {
    values.iter().map(|&v| v as u128).product()
}

/// `(prod_i V_i)^(1/k)`.
pub fn cnsw_of_values(values: &[usize]) -> f64 {
    if values.contains(&0) {
        return 0.0;
    }
    let k = values.len() as f64;
    // Geometric mean through logs keeps large products finite.
    (values.iter().map(|&v| (v as f64).ln()).sum::<f64>() / k).exp()
}

pub fn cnsw(inst: &Instance, m: &Matching) -> f64 {
    let values: Vec<usize> = inst.classes().map(|c| m.bundle(c).len()).collect();
    cnsw_of_values(&values)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpropEntry {
    pub class: ClassId,
    pub v_i: usize,
    pub prop: usize,
    pub ratio: EnvyRatio,
    pub divisible_gap: bool,
}

/// Every metric of one matching.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub usw: usize,
    pub usw_opt: usize,
    pub nonwasteful: bool,
    pub class_values: Vec<usize>,
    pub cef: CefReport,
    pub cef1: bool,
    pub cprop: Option<Vec<CpropEntry>>,
    pub cnsw: f64,
}

impl Serialize for MetricsReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("MetricsReport", 9)?;
        st.serialize_field("usw", &self.usw)?;
        st.serialize_field("usw_opt", &self.usw_opt)?;
        st.serialize_field("nonwasteful", &self.nonwasteful)?;
        st.serialize_field("class_values", &self.class_values)?;
        st.serialize_field("cef_pairs", &self.cef.pairs)?;
        st.serialize_field("cef_alpha", &self.cef.cef_alpha)?;
        st.serialize_field("cef1", &self.cef1)?;
        st.serialize_field("cprop", &self.cprop)?;
        st.serialize_field("cnsw", &self.cnsw)?;
        st.end()
    }
}

/// Evaluates `m`. The proportional-share section is filled in only when
/// `caps` is given and the instance fits within them.
pub fn metrics_report(inst: &Instance, m: &Matching, caps: Option<&OracleCaps>) -> MetricsReport {
    let class_values: Vec<usize> = inst.classes().map(|c| m.bundle(c).len()).collect();
    let cprop = caps.and_then(|caps| prop_shares(inst, caps).ok()).map(|shares| {
        shares
            .into_iter()
            .map(|share| {
                let v_i = class_values[share.class.0];
                CpropEntry {
                    class: share.class,
                    v_i,
                    prop: share.value,
                    ratio: if share.value == 0 {
                        EnvyRatio::Satisfied
                    } else {
                        EnvyRatio::Finite(v_i as f64 / share.value as f64)
                    },
                    divisible_gap: share.divisible_gap,
                }
            })
            .collect()
    });
    MetricsReport {
        usw: m.size(),
        usw_opt: usw_opt(inst),
        nonwasteful: is_nonwasteful(inst, m),
        cnsw: cnsw_of_values(&class_values),
        class_values,
        cef: cef_report(inst, m),
        cef1: cef1_check(inst, m),
        cprop,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{
        gen_cnsw_counterexample, gen_price_of_fairness, gen_upper_triangular, make_instance,
    };

    fn counterexample_x(inst: &Instance) -> Matching {
        Matching::from_pairs(
            inst,
            [
                (ItemId(0), AgentId(4)),
                (ItemId(1), AgentId(5)),
                (ItemId(2), AgentId(6)),
                (ItemId(3), AgentId(7)),
                (ItemId(4), AgentId(2)),
                (ItemId(5), AgentId(3)),
            ],
        )
        .unwrap()
    }

    fn counterexample_x_prime(inst: &Instance) -> Matching {
        Matching::from_pairs(
            inst,
            [
                (ItemId(0), AgentId(0)),
                (ItemId(1), AgentId(4)),
                (ItemId(2), AgentId(5)),
                (ItemId(3), AgentId(6)),
                (ItemId(4), AgentId(2)),
                (ItemId(5), AgentId(3)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn optimistic_value_examples() {
        let inst = gen_cnsw_counterexample().unwrap();
        let first_four = Bundle::from_items(&[ItemId(0), ItemId(1), ItemId(2), ItemId(3)]);
        assert_eq!(optimistic_value(&inst, ClassId(0), &Bundle::new()).unwrap(), 0);
        assert_eq!(optimistic_value(&inst, ClassId(1), &first_four).unwrap(), 4);
        assert_eq!(optimistic_value(&inst, ClassId(0), &first_four).unwrap(), 1);
        assert!(optimistic_value(&inst, ClassId(2), &first_four).is_err());
    }

    #[test]
    fn dummies_match_like_originals() {
        let inst = make_instance(1, vec![0, 0], vec![vec![0, 1]]).unwrap();
        let mut b = Bundle::from_items(&[ItemId(0)]);
        b.push_dummy(ItemId(0));
        assert_eq!(optimistic_value(&inst, ClassId(0), &b).unwrap(), 2);
        assert_eq!(b.num_dummies(), 1);
    }

    #[test]
    fn class_value_examples() {
        let inst = gen_cnsw_counterexample().unwrap();
        assert_eq!(class_value(&inst, &Matching::empty(&inst), ClassId(0)).unwrap(), 0);
        let x = counterexample_x(&inst);
        assert_eq!(class_value(&inst, &x, ClassId(0)).unwrap(), 2);
        assert_eq!(class_value(&inst, &x, ClassId(1)).unwrap(), 4);
    }

    #[test]
    fn cef_examples() {
        let inst = gen_cnsw_counterexample().unwrap();
        let rep = cef_report(&inst, &counterexample_x(&inst));
        assert_eq!(rep.cef_alpha, 1.0);
        let p01 = &rep.pairs[0];
        assert_eq!((p01.v_i, p01.v_star), (2, 1));
        let p10 = &rep.pairs[1];
        assert_eq!((p10.v_i, p10.v_star, p10.ratio), (4, 0, EnvyRatio::Satisfied));

        let contested = make_instance(2, vec![0, 1], vec![vec![0, 1]]).unwrap();
        let m = Matching::from_pairs(&contested, [(ItemId(0), AgentId(0))]).unwrap();
        let rep = cef_report(&contested, &m);
        assert_eq!(rep.cef_alpha, 0.0);
        assert_eq!(rep.pairs[1].v_i, 0);
        assert_eq!(rep.pairs[1].v_star, 1);

        let single = gen_upper_triangular(3).unwrap();
        assert_eq!(cef_report(&single, &Matching::empty(&single)).cef_alpha, 1.0);
    }

    #[test]
    fn cef1_examples() {
        let inst = gen_cnsw_counterexample().unwrap();
        assert!(cef1_check(&inst, &counterexample_x(&inst)));

        // Two classes of two agents, both items to class 0: removing either
        // item leaves one item class 1 could still take.
        let inst = make_instance(2, vec![0, 0, 1, 1], vec![vec![0, 1, 2, 3]; 2]).unwrap();
        let m = Matching::from_pairs(&inst, [(ItemId(0), AgentId(0)), (ItemId(1), AgentId(1))])
            .unwrap();
        assert!(!cef1_check(&inst, &m));

        let contested = make_instance(2, vec![0, 1], vec![vec![0, 1]]).unwrap();
        let m = Matching::from_pairs(&contested, [(ItemId(0), AgentId(0))]).unwrap();
        assert!(cef1_check(&contested, &m));
    }

    #[test]
    fn cnsw_examples() {
        let inst = gen_cnsw_counterexample().unwrap();
        assert!((cnsw(&inst, &counterexample_x(&inst)) - 8f64.sqrt()).abs() < 1e-12);
        assert!((cnsw(&inst, &counterexample_x_prime(&inst)) - 3.0).abs() < 1e-12);
        let m = Matching::from_pairs(&inst, [(ItemId(0), AgentId(4))]).unwrap();
        assert_eq!(cnsw(&inst, &m), 0.0);
    }

    #[test]
    fn usw_opt_examples() {
        for n in 1..12 {
            assert_eq!(usw_opt(&gen_upper_triangular(n).unwrap()), n);
        }
        let empty = make_instance(2, vec![0, 1], vec![vec![], vec![]]).unwrap();
        assert_eq!(usw_opt(&empty), 0);
        // Offline optimum p(k-1)+q+q(k-1) needs class k-1 to absorb all of
        // phase one, i.e. p(k-1)+q <= q(k-1).
        for (k, p, q) in [(50, 1, 2), (3, 1, 2), (4, 2, 3), (10, 3, 5)] {
            assert!(p * (k - 1) + q <= q * (k - 1));
            let inst = gen_price_of_fairness(k, p, q).unwrap();
            assert_eq!(usw_opt(&inst), p * (k - 1) + q + q * (k - 1));
        }
    }

    #[test]
    fn metrics_report_serializes() {
        let inst = gen_cnsw_counterexample().unwrap();
        let rep = metrics_report(&inst, &counterexample_x(&inst), Some(&OracleCaps::default()));
        assert!(rep.nonwasteful);
        assert!(rep.cef1);
        assert_eq!(rep.usw, 6);
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["cef_pairs"][1]["ratio"], "SATISFIED");
        assert_eq!(json["cef_alpha"], 1.0);
        assert!(rep.cprop.is_some());
    }
}
