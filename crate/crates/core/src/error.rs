use thiserror::Error;

use crate::ids::{AgentId, ClassId, ItemId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("instance must have at least one class")]
    NoClasses,
    #[error("agent {agent} has class {class} outside [0, {num_classes})")]
    ClassOutOfRange {
        agent: AgentId,
        class: usize,
        num_classes: usize,
    },
    #[error("class {0} has no agents")]
    EmptyClass(ClassId),
    #[error("item {item} lists unknown agent {agent}")]
    UnknownNeighbor { item: ItemId, agent: usize },
    #[error("item {item} lists agent {agent} more than once")]
    DuplicateNeighbor { item: ItemId, agent: AgentId },
    #[error("agent ids must be contiguous from 0: position {position} holds id {id}")]
    NonContiguousAgent { position: usize, id: usize },
    #[error("item ids must be contiguous from 0: position {position} holds id {id}")]
    NonContiguousItem { position: usize, id: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown item {0}")]
    UnknownItem(ItemId),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("unknown class {0}")]
    UnknownClass(ClassId),

    #[error("agent {agent} does not like item {item}")]
    NotAnEdge { agent: AgentId, item: ItemId },
    #[error("agent {0} is already saturated")]
    AgentSaturated(AgentId),
    #[error("item {0} is already assigned")]
    ItemAssigned(ItemId),
    #[error("item {item} would carry load {load} > 1")]
    ItemOverload { item: ItemId, load: f64 },
    #[error("agent {agent} would carry load {load} > 1")]
    AgentOverload { agent: AgentId, load: f64 },
    #[error("share {share} for agent {agent} is not a fraction in [0, 1]")]
    InvalidShare { agent: AgentId, share: f64 },

    #[error("instance exceeds oracle cap: {what} is {actual}, cap {cap}")]
    OracleCap {
        what: &'static str,
        actual: usize,
        cap: usize,
    },
    #[error("instance does not have the expected shape: {0}")]
    NonConforming(String),

    #[error("instance JSON: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
