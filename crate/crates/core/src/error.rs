use thiserror::Error;

use crate::model::NodeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a network needs at least one node")]
    EmptyNetwork,
    #[error("nodes {first} and {second} share the same position")]
    DuplicatePosition { first: NodeId, second: NodeId },
    #[error("radio range must be positive and finite, got {0}")]
    InvalidRange(f64),
    #[error("initial energy of node {node} must be positive, got {energy}")]
    NonPositiveEnergy { node: NodeId, energy: f64 },
    #[error("communication capacity of node {node} must be positive, got {capacity}")]
    NonPositiveCapacity { node: NodeId, capacity: f64 },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {0} is dead")]
    DeadNode(NodeId),
    #[error("parent node {0} must stay awake until the network is refreshed")]
    ParentMustStayAwake(NodeId),

    #[error("sample times must be strictly increasing (index {index})")]
    NonIncreasingTimes { index: usize },
    #[error("sample value at index {index} is invalid: {value}")]
    InvalidSample { index: usize, value: f64 },
    #[error("interval [{start}, {end}] is empty or reversed")]
    InvalidInterval { start: f64, end: f64 },
    #[error("trace covers [{covered_start}, {covered_end}] but [{start}, {end}] was requested")]
    CoverageGap {
        start: f64,
        end: f64,
        covered_start: f64,
        covered_end: f64,
    },
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("path-loss exponent must lie in [2, 4], got {0}")]
    PathLossExponent(f64),
    #[error("proportionality constant must be positive, got {0}")]
    NonPositiveConstant(f64),
    #[error("resistance and input voltage must be positive")]
    InvalidProbe,
    #[error("cannot fit a line through two points with the same network size")]
    DegenerateFit,

    #[error("utilization denominator is zero")]
    ZeroDenominator,
    #[error("refresh interval must be positive, got {0}")]
    InvalidRefreshInterval(f64),

    #[error("no alive nodes remain")]
    NetworkDead,
    #[error("no path from {from} to {to}")]
    NoPath { from: NodeId, to: NodeId },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid transfer request: {0}")]
    InvalidRequest(String),

    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("trace line {line}: {message}")]
    TraceParse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
