//! Integral and divisible matching state.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ids::{AgentId, ClassId, ItemId};
use crate::instance::Instance;

/// Absolute slack allowed on agent and item loads of a [`FractionalMatching`].
pub const LOAD_TOLERANCE: f64 = 1e-9;

/// Integral matching of items to agents, with per-class bundles `Y_i`.
///
/// A matching is tied to the shape of the instance it was created for; all
/// mutating operations take that instance to check edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Matching {
    #[serde(rename = "assignment")]
    item_agent: Vec<Option<AgentId>>,
    #[serde(skip)]
    agent_item: Vec<Option<ItemId>>,
    bundles: Vec<Vec<ItemId>>,
}

impl Matching {
    pub fn empty(inst: &Instance) -> Self {
        Matching {
            item_agent: vec![None; inst.num_items()],
            agent_item: vec![None; inst.num_agents()],
            bundles: vec![Vec::new(); inst.num_classes()],
        }
    }

    /// Builds a matching from `(item, agent)` pairs, checking every pair.
    pub fn from_pairs(
        inst: &Instance,
        pairs: impl IntoIterator<Item = (ItemId, AgentId)>,
    ) -> Result<Self> {
        let mut m = Matching::empty(inst);
        for (o, a) in pairs {
            m.assign(inst, o, a)?;
        }
        Ok(m)
    }

    /// Matches `item` to `agent` in place.
    pub fn assign(&mut self, inst: &Instance, item: ItemId, agent: AgentId) -> Result<()> {
        inst.check_item(item)?;
        inst.check_agent(agent)?;
        if !inst.is_edge(agent, item) {
            return Err(Error::NotAnEdge { agent, item });
        }
        if self.agent_item[agent.0].is_some() {
            return Err(Error::AgentSaturated(agent));
        }
        if self.item_agent[item.0].is_some() {
            return Err(Error::ItemAssigned(item));
        }
        self.item_agent[item.0] = Some(agent);
        self.agent_item[agent.0] = Some(item);
        let bundle = &mut self.bundles[inst.class_of(agent).0];
        let pos = bundle.partition_point(|&o| o < item);
        bundle.insert(pos, item);
        Ok(())
    }

    /// Persistent form of [`Matching::assign`]: returns the extended matching
    /// and leaves `self` untouched.
    pub fn with_assignment(&self, inst: &Instance, item: ItemId, agent: AgentId) -> Result<Self> {
        let mut next = self.clone();
        next.assign(inst, item, agent)?;
        Ok(next)
    }

    pub fn agent_of(&self, item: ItemId) -> Option<AgentId> {
        self.item_agent[item.0]
    }

    pub fn item_of(&self, agent: AgentId) -> Option<ItemId> {
        self.agent_item[agent.0]
    }

    pub fn is_saturated(&self, agent: AgentId) -> bool {
        self.agent_item[agent.0].is_some()
    }

    pub fn is_assigned(&self, item: ItemId) -> bool {
        self.item_agent[item.0].is_some()
    }

    /// `Y_i`: items matched into `class`, ascending by item id.
    pub fn bundle(&self, class: ClassId) -> &[ItemId] {
        &self.bundles[class.0]
    }

    pub fn bundles(&self) -> &[Vec<ItemId>] {
        &self.bundles
    }

    /// Number of matched items.
    pub fn size(&self) -> usize {
        self.bundles.iter().map(Vec::len).sum()
    }

    /// `(item, agent)` pairs in item order.
    pub fn pairs(&self) -> impl Iterator<Item = (ItemId, AgentId)> + '_ {
        self.item_agent
            .iter()
            .enumerate()
            .filter_map(|(o, a)| a.map(|a| (ItemId(o), a)))
    }

    /// Assignment map in item order (`None` = unmatched).
    pub fn assignment(&self) -> &[Option<AgentId>] {
        &self.item_agent
    }
}

/// True iff no edge joins an unsaturated agent and an unassigned item.
pub fn is_nonwasteful(inst: &Instance, m: &Matching) -> bool {
    inst.items()
        .filter(|&o| !m.is_assigned(o))
        .all(|o| inst.neighbors(o).iter().all(|&a| m.is_saturated(a)))
}

/// Divisible matching: each cell holds the fraction of an item given to an
/// agent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FractionalMatching {
    cells: BTreeMap<(AgentId, ItemId), f64>,
    agent_load: Vec<f64>,
    item_load: Vec<f64>,
}

impl FractionalMatching {
    pub fn empty(inst: &Instance) -> Self {
        FractionalMatching {
            cells: BTreeMap::new(),
            agent_load: vec![0.0; inst.num_agents()],
            item_load: vec![0.0; inst.num_items()],
        }
    }

    /// Adds `shares` of `item` to the given agents. Either all shares are
    /// applied or, on error, none are.
    pub fn frac_assign(
        &mut self,
        inst: &Instance,
        item: ItemId,
        shares: &[(AgentId, f64)],
    ) -> Result<()> {
        inst.check_item(item)?;
        let mut item_load = self.item_load[item.0];
        let mut touched: BTreeMap<AgentId, f64> = BTreeMap::new();
        for &(agent, share) in shares {
            inst.check_agent(agent)?;
            if !share.is_finite() || !(0.0..=1.0 + LOAD_TOLERANCE).contains(&share) {
                return Err(Error::InvalidShare { agent, share });
            }
            if share > 0.0 && !inst.is_edge(agent, item) {
                return Err(Error::NotAnEdge { agent, item });
            }
            item_load += share;
            *touched.entry(agent).or_insert(self.agent_load[agent.0]) += share;
        }
        if item_load > 1.0 + LOAD_TOLERANCE {
            return Err(Error::ItemOverload {
                item,
                load: item_load,
            });
        }
        if let Some((&agent, &load)) = touched.iter().find(|(_, &l)| l > 1.0 + LOAD_TOLERANCE) {
            return Err(Error::AgentOverload { agent, load });
        }
        for &(agent, share) in shares {
            if share > 0.0 {
                *self.cells.entry((agent, item)).or_insert(0.0) += share;
            }
        }
        for (agent, load) in touched {
            self.agent_load[agent.0] = load;
        }
        self.item_load[item.0] = item_load;
        Ok(())
    }

    pub fn cell(&self, agent: AgentId, item: ItemId) -> f64 {
        self.cells.get(&(agent, item)).copied().unwrap_or(0.0)
    }

    pub fn cells(&self) -> impl Iterator<Item = ((AgentId, ItemId), f64)> + '_ {
        self.cells.iter().map(|(&k, &v)| (k, v))
    }

    pub fn agent_load(&self, agent: AgentId) -> f64 {
        self.agent_load[agent.0]
    }

    pub fn item_load(&self, item: ItemId) -> f64 {
        self.item_load[item.0]
    }

    pub fn total_mass(&self) -> f64 {
        self.item_load.iter().sum()
    }
}

/// Matched mass per class (`V_i` of a divisible matching).
pub fn class_loads(inst: &Instance, m: &FractionalMatching) -> Vec<f64> {
    let mut loads = vec![0.0; inst.num_classes()];
    for a in inst.agents() {
        loads[inst.class_of(a).0] += m.agent_load(a);
    }
    loads
}
