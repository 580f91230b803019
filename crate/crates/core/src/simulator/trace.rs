//! Line-oriented event trace.
//!
//! Every line is `time,event_kind,actor,key=value,...` with a fixed key order
//! per kind. `actor` is a node id, or `-` for network-level events. Floats
//! are written in Rust's shortest round-trip form so a parsed trace carries
//! exactly the values the run produced.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use crate::aggregation::Failure;
use crate::energy::DrainKind;
use crate::error::{Error, Result};
use crate::model::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// Initial census entry, one per node at time zero.
    Node {
        node: NodeId,
        x: f64,
        y: f64,
        energy: f64,
        capacity: f64,
    },
    /// A node the fixed tree cannot reach.
    Unreachable { node: NodeId },
    Refresh {
        cycle: u64,
        parent: Option<NodeId>,
        alive: usize,
        residual: f64,
    },
    /// The parent hands its cycle aggregate to the base station.
    CycleEnd {
        cycle: u64,
        parent: Option<NodeId>,
        packets: u64,
        utilization: f64,
    },
    Submit {
        request: u64,
        source: NodeId,
        packets: usize,
        attempt: u32,
    },
    Route {
        request: u64,
        source: NodeId,
        hops: Vec<NodeId>,
        cached: bool,
    },
    Overload {
        request: u64,
        parent: NodeId,
        accepted: u64,
        excess: u64,
    },
    Deliver { seq: u64, source: NodeId, delay: f64 },
    Drop { seq: u64, source: NodeId },
    Defer {
        request: u64,
        source: NodeId,
        packets: usize,
    },
    Undeliverable {
        seq: u64,
        source: NodeId,
        reason: Failure,
    },
    Drain {
        node: NodeId,
        kind: DrainKind,
        requested: f64,
        applied: f64,
    },
    Death { node: NodeId },
    /// Closing census entry, one per node.
    Final { node: NodeId, energy: f64 },
    End { horizon: f64, pending: usize },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Node { .. } => "node",
            Event::Unreachable { .. } => "unreachable",
            Event::Refresh { .. } => "refresh",
            Event::CycleEnd { .. } => "cycle_end",
            Event::Submit { .. } => "submit",
            Event::Route { .. } => "route",
            Event::Overload { .. } => "overload",
            Event::Deliver { .. } => "deliver",
            Event::Drop { .. } => "drop",
            Event::Defer { .. } => "defer",
            Event::Undeliverable { .. } => "undeliverable",
            Event::Drain { .. } => "drain",
            Event::Death { .. } => "death",
            Event::Final { .. } => "final",
            Event::End { .. } => "end",
        }
    }

    /// The node performing the event, if it is a node-level event.
    pub fn actor(&self) -> Option<NodeId> {
        match *self {
            Event::Node { node, .. }
            | Event::Drain { node, .. }
            | Event::Death { node } => Some(node),
            Event::Refresh { parent, .. } => parent,
            Event::Submit { source, .. }
            | Event::Route { source, .. }
            | Event::Deliver { source, .. }
            | Event::Drop { source, .. }
            | Event::Defer { source, .. } => Some(source),
            Event::Overload { parent, .. } => Some(parent),
            Event::Unreachable { .. }
            | Event::CycleEnd { .. }
            | Event::Undeliverable { .. }
            | Event::Final { .. }
            | Event::End { .. } => None,
        }
    }

    fn write_details(&self, out: &mut String) -> fmt::Result {
        let opt = |id: Option<NodeId>| id.map_or("-".to_string(), |n| n.to_string());
        match self {
            Event::Node { x, y, energy, capacity, .. } => {
                write!(out, "x={x},y={y},energy={energy},capacity={capacity}")
            }
            Event::Unreachable { node } => write!(out, "node={node}"),
            Event::Refresh { cycle, alive, residual, .. } => {
                write!(out, "cycle={cycle},alive={alive},residual={residual}")
            }
            Event::CycleEnd { cycle, parent, packets, utilization } => write!(
                out,
                "cycle={cycle},parent={},packets={packets},utilization={utilization}",
                opt(*parent)
            ),
            Event::Submit { request, packets, attempt, .. } => {
                write!(out, "req={request},packets={packets},attempt={attempt}")
            }
            Event::Route { request, hops, cached, .. } => {
                let hops: Vec<String> = hops.iter().map(ToString::to_string).collect();
                write!(out, "req={request},path={},cached={cached}", hops.join(">"))
            }
            Event::Overload { request, accepted, excess, .. } => {
                write!(out, "req={request},accepted={accepted},excess={excess}")
            }
            Event::Deliver { seq, delay, .. } => write!(out, "seq={seq},delay={delay}"),
            Event::Drop { seq, .. } => write!(out, "seq={seq}"),
            Event::Defer { request, packets, .. } => write!(out, "req={request},packets={packets}"),
            Event::Undeliverable { seq, source, reason } => {
                write!(out, "seq={seq},source={source},reason={}", reason.as_str())
            }
            Event::Drain { kind, requested, applied, .. } => write!(
                out,
                "kind={},requested={requested},applied={applied}",
                kind.as_str()
            ),
            Event::Death { .. } => Ok(()),
            Event::Final { node, energy } => write!(out, "node={node},energy={energy}"),
            Event::End { horizon, pending } => write!(out, "horizon={horizon},pending={pending}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceLine {
    pub time: f64,
    pub event: Event,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let actor = self
            .event
            .actor()
            .map_or("-".to_string(), |n| n.to_string());
        let mut details = String::new();
        self.event.write_details(&mut details)?;
        write!(f, "{},{},{}", self.time, self.event.kind(), actor)?;
        if !details.is_empty() {
            write!(f, ",{details}")?;
        }
        Ok(())
    }
}

struct Fields<'a> {
    line: usize,
    map: HashMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn err(&self, message: String) -> Error {
        Error::TraceParse {
            line: self.line,
            message,
        }
    }

    fn raw(&self, key: &str) -> Result<&'a str> {
        self.map
            .get(key)
            .copied()
            .ok_or_else(|| self.err(format!("missing field `{key}`")))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key)?;
        raw.parse()
            .map_err(|_| self.err(format!("bad value {raw:?} for `{key}`")))
    }

    fn node(&self, key: &str) -> Result<NodeId> {
        self.get(key).map(NodeId)
    }

    fn opt_node(&self, key: &str) -> Result<Option<NodeId>> {
        match self.raw(key)? {
            "-" => Ok(None),
            _ => self.node(key).map(Some),
        }
    }
}

impl TraceLine {
    pub fn parse(text: &str, line: usize) -> Result<Self> {
        let err = |message: String| Error::TraceParse { line, message };
        let mut parts = text.split(',');
        let time: f64 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err("bad time".into()))?;
        let kind = parts.next().ok_or_else(|| err("missing kind".into()))?;
        let actor = parts.next().ok_or_else(|| err("missing actor".into()))?;
        let mut map = HashMap::new();
        if actor != "-" {
            map.insert("actor", actor);
        }
        for part in parts {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {part:?}")))?;
            map.insert(k, v);
        }
        let f = Fields { line, map };

        let event = match kind {
            "node" => Event::Node {
                node: f.node("actor")?,
                x: f.get("x")?,
                y: f.get("y")?,
                energy: f.get("energy")?,
                capacity: f.get("capacity")?,
            },
            "unreachable" => Event::Unreachable { node: f.node("node")? },
            "refresh" => Event::Refresh {
                cycle: f.get("cycle")?,
                parent: if actor == "-" { None } else { Some(f.node("actor")?) },
                alive: f.get("alive")?,
                residual: f.get("residual")?,
            },
            "cycle_end" => Event::CycleEnd {
                cycle: f.get("cycle")?,
                parent: f.opt_node("parent")?,
                packets: f.get("packets")?,
                utilization: f.get("utilization")?,
            },
            "submit" => Event::Submit {
                request: f.get("req")?,
                source: f.node("actor")?,
                packets: f.get("packets")?,
                attempt: f.get("attempt")?,
            },
            "route" => Event::Route {
                request: f.get("req")?,
                source: f.node("actor")?,
                hops: f
                    .raw("path")?
                    .split('>')
                    .map(|h| h.parse().map(NodeId).map_err(|_| err(format!("bad hop {h:?}"))))
                    .collect::<Result<_>>()?,
                cached: f.get("cached")?,
            },
            "overload" => Event::Overload {
                request: f.get("req")?,
                parent: f.node("actor")?,
                accepted: f.get("accepted")?,
                excess: f.get("excess")?,
            },
            "deliver" => Event::Deliver {
                seq: f.get("seq")?,
                source: f.node("actor")?,
                delay: f.get("delay")?,
            },
            "drop" => Event::Drop {
                seq: f.get("seq")?,
                source: f.node("actor")?,
            },
            "defer" => Event::Defer {
                request: f.get("req")?,
                source: f.node("actor")?,
                packets: f.get("packets")?,
            },
            "undeliverable" => Event::Undeliverable {
                seq: f.get("seq")?,
                source: f.node("source")?,
                reason: Failure::parse(f.raw("reason")?)
                    .ok_or_else(|| err("unknown failure reason".into()))?,
            },
            "drain" => Event::Drain {
                node: f.node("actor")?,
                kind: DrainKind::parse(f.raw("kind")?)
                    .ok_or_else(|| err("unknown drain kind".into()))?,
                requested: f.get("requested")?,
                applied: f.get("applied")?,
            },
            "death" => Event::Death { node: f.node("actor")? },
            "final" => Event::Final {
                node: f.node("node")?,
                energy: f.get("energy")?,
            },
            "end" => Event::End {
                horizon: f.get("horizon")?,
                pending: f.get("pending")?,
            },
            other => return Err(err(format!("unknown event kind {other:?}"))),
        };
        Ok(Self { time, event })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub lines: Vec<TraceLine>,
}

impl Trace {
    pub fn push(&mut self, time: f64, event: Event) {
        self.lines.push(TraceLine { time, event });
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            // writing to a String cannot fail
            let _ = writeln!(out, "{line}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| TraceLine::parse(l, i + 1))
            .collect::<Result<_>>()?;
        Ok(Self { lines })
    }
}
