//! Problem instances: a bipartite graph between offline agents and online
//! items, a partition of the agents into `k` known classes, and a fixed item
//! arrival order.
//!
//! Item ids coincide with arrival positions, so `items()[t]` is the item that
//! arrives at step `t`. Every constructor, generator and the JSON reader go
//! through the same validation, so an [`Instance`] value always satisfies:
//!
//! * `k >= 1` and every class holds at least one agent;
//! * agent and item ids are contiguous from 0;
//! * neighbor lists reference existing agents and contain no duplicates.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ids::{AgentId, ClassId, ItemId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    name: String,
    num_classes: usize,
    agent_class: Vec<ClassId>,
    class_agents: Vec<Vec<AgentId>>,
    neighbors: Vec<Vec<AgentId>>,
    // Neighbors of every item regrouped by class (ascending agent id inside a
    // class); the slice for (item o, class c) is
    // `grouped[offsets[o * k + c]..offsets[o * k + c + 1]]`.
    grouped: Vec<AgentId>,
    offsets: Vec<usize>,
}

/// Builds a validated instance with an empty name.
///
/// `agent_classes[a]` is the class of agent `a`; `items[t]` is the neighbor
/// list of the item arriving at step `t`.
pub fn make_instance(
    k: usize,
    agent_classes: Vec<usize>,
    items: Vec<Vec<usize>>,
) -> Result<Instance> {
    Instance::new("", k, agent_classes, items)
}

impl Instance {
    pub fn new(
        name: impl Into<String>,
        num_classes: usize,
        agent_classes: Vec<usize>,
        items: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::NoClasses);
        }
        let mut class_agents = vec![Vec::new(); num_classes];
        let mut agent_class = Vec::with_capacity(agent_classes.len());
        for (a, &c) in agent_classes.iter().enumerate() {
            if c >= num_classes {
                return Err(Error::ClassOutOfRange {
                    agent: AgentId(a),
                    class: c,
                    num_classes,
                });
            }
            agent_class.push(ClassId(c));
            class_agents[c].push(AgentId(a));
        }
        if let Some(c) = class_agents.iter().position(Vec::is_empty) {
            return Err(Error::EmptyClass(ClassId(c)));
        }

        let num_agents = agent_class.len();
        let mut seen = vec![usize::MAX; num_agents];
        let mut neighbors = Vec::with_capacity(items.len());
        for (t, list) in items.into_iter().enumerate() {
            let mut out = Vec::with_capacity(list.len());
            for a in list {
                if a >= num_agents {
                    return Err(Error::UnknownNeighbor {
                        item: ItemId(t),
                        agent: a,
                    });
                }
                if seen[a] == t {
                    return Err(Error::DuplicateNeighbor {
                        item: ItemId(t),
                        agent: AgentId(a),
                    });
                }
                seen[a] = t;
                out.push(AgentId(a));
            }
            neighbors.push(out);
        }

        let k = num_classes;
        let total: usize = neighbors.iter().map(Vec::len).sum();
        let mut grouped = Vec::with_capacity(total);
        let mut offsets = Vec::with_capacity(neighbors.len() * k + 1);
        let mut buckets: Vec<Vec<AgentId>> = vec![Vec::new(); k];
        offsets.push(0);
        for list in &neighbors {
            for &a in list {
                buckets[agent_class[a.0].0].push(a);
            }
            for bucket in buckets.iter_mut() {
                bucket.sort_unstable();
                grouped.append(bucket);
                offsets.push(grouped.len());
            }
        }

        Ok(Instance {
            name: name.into(),
            num_classes,
            agent_class,
            class_agents,
            neighbors,
            grouped,
            offsets,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_agents(&self) -> usize {
        self.agent_class.len()
    }

    pub fn num_items(&self) -> usize {
        self.neighbors.len()
    }

    pub fn num_edges(&self) -> usize {
        self.grouped.len()
    }

    pub fn classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        (0..self.num_classes).map(ClassId)
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        (0..self.num_agents()).map(AgentId)
    }

    /// Items in arrival order.
    pub fn items(&self) -> impl Iterator<Item = ItemId> + '_ {
        (0..self.num_items()).map(ItemId)
    }

    pub fn class_of(&self, agent: AgentId) -> ClassId {
        self.agent_class[agent.0]
    }

    pub fn class_agents(&self, class: ClassId) -> &[AgentId] {
        &self.class_agents[class.0]
    }

    pub fn class_size(&self, class: ClassId) -> usize {
        self.class_agents[class.0].len()
    }

    /// Neighbor list exactly as supplied at construction.
    pub fn neighbors(&self, item: ItemId) -> &[AgentId] {
        &self.neighbors[item.0]
    }

    /// Neighbors of `item` inside `class`, ascending by agent id.
    pub fn class_neighbors(&self, item: ItemId, class: ClassId) -> &[AgentId] {
        let idx = item.0 * self.num_classes + class.0;
        &self.grouped[self.offsets[idx]..self.offsets[idx + 1]]
    }

    pub fn degree(&self, item: ItemId) -> usize {
        self.neighbors[item.0].len()
    }

    pub fn is_edge(&self, agent: AgentId, item: ItemId) -> bool {
        let class = self.agent_class[agent.0];
        self.class_neighbors(item, class).binary_search(&agent).is_ok()
    }

    pub fn check_class(&self, class: ClassId) -> Result<()> {
        if class.0 < self.num_classes {
            Ok(())
        } else {
            Err(Error::UnknownClass(class))
        }
    }

    pub fn check_item(&self, item: ItemId) -> Result<()> {
        if item.0 < self.num_items() {
            Ok(())
        } else {
            Err(Error::UnknownItem(item))
        }
    }

    pub fn check_agent(&self, agent: AgentId) -> Result<()> {
        if agent.0 < self.num_agents() {
            Ok(())
        } else {
            Err(Error::UnknownAgent(agent))
        }
    }

    /// Restriction to the agents of one class, renumbered from 0 and placed
    /// in a single class. Item order and count are preserved.
    pub fn restrict_to_class(&self, class: ClassId) -> Result<Instance> {
        self.check_class(class)?;
        let members = self.class_agents(class);
        let items = self
            .items()
            .map(|o| {
                self.class_neighbors(o, class)
                    .iter()
                    .map(|a| members.binary_search(a).expect("class member"))
                    .collect()
            })
            .collect();
        Instance::new(
            format!("{}|class{}", self.name, class),
            1,
            vec![0; members.len()],
            items,
        )
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            name: self.name.clone(),
            num_classes: self.num_classes,
            agents: self
                .agent_class
                .iter()
                .enumerate()
                .map(|(id, c)| AgentRecord { id, class: c.0 })
                .collect(),
            items: self
                .neighbors
                .iter()
                .enumerate()
                .map(|(id, ns)| ItemRecord {
                    id,
                    neighbors: ns.iter().map(|a| a.0).collect(),
                })
                .collect(),
        }
    }

    /// Canonical JSON text: one agent or item record per line. Reading this
    /// text back and writing it again reproduces it byte for byte.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        let name = serde_json::to_string(&self.name).expect("string serializes");
        let _ = writeln!(out, "  \"name\": {name},");
        let _ = writeln!(out, "  \"num_classes\": {},", self.num_classes);
        out.push_str("  \"agents\": [");
        for (id, c) in self.agent_class.iter().enumerate() {
            out.push_str(if id == 0 { "\n" } else { ",\n" });
            let _ = write!(out, "    {{\"id\": {id}, \"class\": {c}}}");
        }
        out.push_str(if self.agent_class.is_empty() { "],\n" } else { "\n  ],\n" });
        out.push_str("  \"items\": [");
        for (id, ns) in self.neighbors.iter().enumerate() {
            out.push_str(if id == 0 { "\n" } else { ",\n" });
            let _ = write!(out, "    {{\"id\": {id}, \"neighbors\": [");
            for (j, a) in ns.iter().enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{a}");
            }
            out.push_str("]}");
        }
        out.push_str(if self.neighbors.is_empty() { "]\n" } else { "\n  ]\n" });
        out.push_str("}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Instance::try_from(file)
    }
}

/// On-disk form of an [`Instance`]. The order of `items` is the arrival order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub name: String,
    pub num_classes: usize,
    pub agents: Vec<AgentRecord>,
    pub items: Vec<ItemRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentRecord {
    pub id: usize,
    pub class: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemRecord {
    pub id: usize,
    pub neighbors: Vec<usize>,
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        for (position, rec) in file.agents.iter().enumerate() {
            if rec.id != position {
                return Err(Error::NonContiguousAgent {
                    position,
                    id: rec.id,
                });
            }
        }
        for (position, rec) in file.items.iter().enumerate() {
            if rec.id != position {
                return Err(Error::NonContiguousItem {
                    position,
                    id: rec.id,
                });
            }
        }
        Instance::new(
            file.name,
            file.num_classes,
            file.agents.into_iter().map(|a| a.class).collect(),
            file.items.into_iter().map(|i| i.neighbors).collect(),
        )
    }
}

fn require_positive(what: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(Error::InvalidParameter(format!("{what} must be >= 1")))
    } else {
        Ok(())
    }
}

/// Single class of `n` agents; item `t` likes agents `t..n`.
pub fn gen_upper_triangular(n: usize) -> Result<Instance> {
    require_positive("n", n)?;
    let items = (0..n).map(|t| (t..n).collect()).collect();
    Instance::new(format!("upper_triangular(n={n})"), 1, vec![0; n], items)
}

/// Two classes of `n` agents. Class 0 (agents `0..n`) carries the
/// upper-triangular adjacency; item `t` also likes exactly agent `n + t` of
/// class 1.
pub fn gen_cef_impossibility(n: usize) -> Result<Instance> {
    require_positive("n", n)?;
    let classes = (0..2 * n).map(|a| a / n).collect();
    let items = (0..n)
        .map(|t| (t..n).chain(std::iter::once(n + t)).collect())
        .collect();
    Instance::new(format!("cef_impossibility(n={n})"), 2, classes, items)
}

/// Two classes of `n` agents and `2n` items arriving in pairs. Pair `i`
/// (1-based) likes class-0 agents `0..=n-i`, i.e. each pair drops the
/// highest-indexed agent of the previous pair. Every item likes all of
/// class 1.
pub fn gen_divisible_hardness(n: usize) -> Result<Instance> {
    require_positive("n", n)?;
    let classes = (0..2 * n).map(|a| a / n).collect();
    let items = (0..2 * n)
        .map(|t| {
            let pair = t / 2 + 1;
            (0..=n - pair).chain(n..2 * n).collect()
        })
        .collect();
    Instance::new(format!("divisible_hardness(n={n})"), 2, classes, items)
}

/// Price-of-fairness construction: classes `0..k-1` hold `q` agents each,
/// class `k-1` holds `q(k-1)` agents. Phase one is `p(k-1) + q` items liked
/// by everyone; phase two is `k-1` groups of `q` items, group `i` liked by
/// all of class `i`.
pub fn gen_price_of_fairness(k: usize, p: usize, q: usize) -> Result<Instance> {
    if k < 2 {
        return Err(Error::InvalidParameter("k must be >= 2".into()));
    }
    require_positive("p", p)?;
    require_positive("q", q)?;
    let mut classes = Vec::with_capacity(2 * q * (k - 1));
    for c in 0..k - 1 {
        classes.extend(std::iter::repeat_n(c, q));
    }
    classes.extend(std::iter::repeat_n(k - 1, q * (k - 1)));
    let num_agents = classes.len();

    let phase_one = p * (k - 1) + q;
    let mut items: Vec<Vec<usize>> = (0..phase_one).map(|_| (0..num_agents).collect()).collect();
    for c in 0..k - 1 {
        let members: Vec<usize> = (c * q..(c + 1) * q).collect();
        items.extend(std::iter::repeat_n(members, q));
    }
    Instance::new(
        format!("price_of_fairness(k={k},p={p},q={q})"),
        k,
        classes,
        items,
    )
}

/// Two classes of four agents (`a1..a4` = ids 0..4, `b1..b4` = ids 4..8) and
/// six items: items 1-4 are liked by all of class 1, item 1 also by `a1`,
/// items 5 and 6 by `a3` and `a4`.
pub fn gen_cnsw_counterexample() -> Result<Instance> {
    let classes = vec![0, 0, 0, 0, 1, 1, 1, 1];
    let items = vec![
        vec![0, 4, 5, 6, 7],
        vec![4, 5, 6, 7],
        vec![4, 5, 6, 7],
        vec![4, 5, 6, 7],
        vec![2, 3],
        vec![2, 3],
    ];
    Instance::new("cnsw_counterexample", 2, classes, items)
}

/// Random instance: every (agent, item) edge is drawn independently with
/// probability `edge_prob`. Draws are consumed item by item in arrival
/// order, agents ascending inside an item. Items without neighbors are kept.
pub fn gen_random_bipartite(
    k: usize,
    agents_per_class: usize,
    num_items: usize,
    edge_prob: f64,
    seed: u64,
) -> Result<Instance> {
    require_positive("k", k)?;
    require_positive("agents_per_class", agents_per_class)?;
    require_positive("num_items", num_items)?;
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::InvalidParameter(format!(
            "edge probability {edge_prob} is not in [0, 1]"
        )));
    }
    let num_agents = k * agents_per_class;
    let classes = (0..num_agents).map(|a| a / agents_per_class).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let items = (0..num_items)
        .map(|_| {
            (0..num_agents)
                .filter(|_| rng.gen_bool(edge_prob))
                .collect()
        })
        .collect();
    Instance::new(
        format!(
            "random(k={k},agents_per_class={agents_per_class},items={num_items},p={edge_prob},seed={seed})"
        ),
        k,
        classes,
        items,
    )
}
