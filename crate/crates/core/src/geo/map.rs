use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{bearing_deg, haversine_unchecked, heading_difference, GeoPoint};

/// Declared segment headings must agree with the node geometry to this many
/// degrees.
const HEADING_TOLERANCE_DEG: f64 = 15.0;

#[derive(Debug, Error)]
pub enum MapLoadError {
    #[error("map document is not valid: {0}")]
    Schema(String),
    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("segment {segment:?} references missing node {node:?}")]
    DanglingNode { segment: String, node: String },
    #[error("signal references missing node {node:?}")]
    DanglingSignal { node: String },
    #[error("duplicate signal (intersection {intersection_id}, group {signal_group_id})")]
    DuplicateSignal {
        intersection_id: u32,
        signal_group_id: u32,
    },
    #[error("{element}: {reason}")]
    InvalidValue { element: String, reason: String },
    #[error("lane branches at node {node:?} before reaching a signal")]
    NonSimpleChain { node: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneNode {
    pub id: String,
    pub position: GeoPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaneSegment {
    pub id: String,
    pub from: String,
    pub to: String,
    /// Great-circle length between the endpoint nodes; never read from input.
    pub length_m: f64,
    pub speed_limit_mps: f64,
    pub road_name: String,
    pub heading_deg: f64,
    pub(crate) from_index: usize,
    pub(crate) to_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalNode {
    pub node_id: String,
    pub intersection_id: u32,
    pub signal_group_id: u32,
}

/// Identifies the signal group whose SPaT governs an approach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignalRef {
    pub intersection_id: u32,
    pub signal_group_id: u32,
}

impl From<&SignalNode> for SignalRef {
    fn from(s: &SignalNode) -> Self {
        SignalRef {
            intersection_id: s.intersection_id,
            signal_group_id: s.signal_group_id,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDocument {
    nodes: Vec<NodeDoc>,
    segments: Vec<SegmentDoc>,
    #[serde(default)]
    signals: Vec<SignalNode>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: String,
    lat: f64,
    lon: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentDoc {
    id: String,
    from: String,
    to: String,
    speed_limit_mps: f64,
    road_name: String,
    heading_deg: f64,
}

/// Immutable directed lane graph with signal annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct MapGraph {
    nodes: Vec<LaneNode>,
    segments: Vec<LaneSegment>,
    signals: Vec<SignalNode>,
    node_index: HashMap<String, usize>,
    segment_index: HashMap<String, usize>,
    signal_at_node: HashMap<usize, usize>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
    /// Per segment: next signal downstream of its end node and the summed
    /// length of the segments between that node and the signal.
    downstream_signal: Vec<Option<(usize, f64)>>,
}

impl MapGraph {
    /// Parses and validates a TOML map document.
    pub fn load(text: &str) -> Result<Self, MapLoadError> {
        let doc: MapDocument =
            toml::from_str(text).map_err(|e| MapLoadError::Schema(e.message().to_string()))?;
        Self::from_document(doc)
    }

    pub fn load_file(path: impl AsRef<std::path::Path>) -> Result<Self, MapLoadError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| MapLoadError::Schema(format!("{}: {e}", path.display())))?;
        Self::load(&text)
    }

    fn from_document(doc: MapDocument) -> Result<Self, MapLoadError> {
        let mut nodes = Vec::with_capacity(doc.nodes.len());
        let mut node_index = HashMap::new();
        for n in doc.nodes {
            let position = GeoPoint::new(n.lat, n.lon);
            position.validate().map_err(|e| MapLoadError::InvalidValue {
                element: format!("node {:?}", n.id),
                reason: e.to_string(),
            })?;
            if node_index.insert(n.id.clone(), nodes.len()).is_some() {
                return Err(MapLoadError::DuplicateId {
                    kind: "node",
                    id: n.id,
                });
            }
            nodes.push(LaneNode { id: n.id, position });
        }

        let mut segments = Vec::with_capacity(doc.segments.len());
        let mut segment_index = HashMap::new();
        let mut outgoing = vec![Vec::new(); nodes.len()];
        let mut incoming = vec![Vec::new(); nodes.len()];
        for s in doc.segments {
            let element = format!("segment {:?}", s.id);
            let lookup = |node: &str| {
                node_index
                    .get(node)
                    .copied()
                    .ok_or_else(|| MapLoadError::DanglingNode {
                        segment: s.id.clone(),
                        node: node.to_string(),
                    })
            };
            let from_index = lookup(&s.from)?;
            let to_index = lookup(&s.to)?;
            let (a, b) = (nodes[from_index].position, nodes[to_index].position);
            let length_m = haversine_unchecked(a, b);
            if length_m <= 0.0 {
                return Err(MapLoadError::InvalidValue {
                    element,
                    reason: "zero length".into(),
                });
            }
            if !(s.speed_limit_mps.is_finite() && s.speed_limit_mps > 0.0) {
                return Err(MapLoadError::InvalidValue {
                    element,
                    reason: format!("speed_limit_mps must be positive, got {}", s.speed_limit_mps),
                });
            }
            if !(s.heading_deg.is_finite() && (0.0..360.0).contains(&s.heading_deg)) {
                return Err(MapLoadError::InvalidValue {
                    element,
                    reason: format!("heading_deg must be in [0, 360), got {}", s.heading_deg),
                });
            }
            let geometric = bearing_deg(a, b);
            if heading_difference(geometric, s.heading_deg) > HEADING_TOLERANCE_DEG {
                return Err(MapLoadError::InvalidValue {
                    element,
                    reason: format!(
                        "heading_deg {} disagrees with node geometry ({geometric:.1})",
                        s.heading_deg
                    ),
                });
            }
            if segment_index.insert(s.id.clone(), segments.len()).is_some() {
                return Err(MapLoadError::DuplicateId {
                    kind: "segment",
                    id: s.id,
                });
            }
            outgoing[from_index].push(segments.len());
            incoming[to_index].push(segments.len());
            segments.push(LaneSegment {
                id: s.id,
                from: s.from,
                to: s.to,
                length_m,
                speed_limit_mps: s.speed_limit_mps,
                road_name: s.road_name,
                heading_deg: s.heading_deg,
                from_index,
                to_index,
            });
        }

        let mut signal_at_node = HashMap::new();
        let mut seen = HashSet::new();
        for (i, sig) in doc.signals.iter().enumerate() {
            let node = *node_index
                .get(&sig.node_id)
                .ok_or_else(|| MapLoadError::DanglingSignal {
                    node: sig.node_id.clone(),
                })?;
            if !seen.insert((sig.intersection_id, sig.signal_group_id)) {
                return Err(MapLoadError::DuplicateSignal {
                    intersection_id: sig.intersection_id,
                    signal_group_id: sig.signal_group_id,
                });
            }
            if signal_at_node.insert(node, i).is_some() {
                return Err(MapLoadError::DuplicateId {
                    kind: "signal node",
                    id: sig.node_id.clone(),
                });
            }
        }

        let mut graph = MapGraph {
            nodes,
            segments,
            signals: doc.signals,
            node_index,
            segment_index,
            signal_at_node,
            outgoing,
            incoming,
            downstream_signal: Vec::new(),
        };
        graph.downstream_signal = (0..graph.segments.len())
            .map(|i| graph.resolve_downstream_signal(i))
            .collect::<Result<_, _>>()?;
        Ok(graph)
    }

    /// Walks the chain below segment `seg` until a signal node. Any branch
    /// on the way that can still reach a signal makes the chain ambiguous.
    fn resolve_downstream_signal(&self, seg: usize) -> Result<Option<(usize, f64)>, MapLoadError> {
        let mut node = self.segments[seg].to_index;
        let mut dist = 0.0;
        let mut visited = HashSet::new();
        loop {
            if let Some(&sig) = self.signal_at_node.get(&node) {
                return Ok(Some((sig, dist)));
            }
            if !visited.insert(node) {
                return Ok(None);
            }
            match self.outgoing[node].as_slice() {
                [] => return Ok(None),
                [next] => {
                    dist += self.segments[*next].length_m;
                    node = self.segments[*next].to_index;
                }
                _ => {
                    if self.signal_reachable_from(node) {
                        return Err(MapLoadError::NonSimpleChain {
                            node: self.nodes[node].id.clone(),
                        });
                    }
                    return Ok(None);
                }
            }
        }
    }

    fn signal_reachable_from(&self, start: usize) -> bool {
        let mut stack = vec![start];
        let mut visited = HashSet::new();
        while let Some(n) = stack.pop() {
            if !visited.insert(n) {
                continue;
            }
            if self.signal_at_node.contains_key(&n) {
                return true;
            }
            stack.extend(self.outgoing[n].iter().map(|&s| self.segments[s].to_index));
        }
        false
    }

    /// Serializes back to the TOML map schema. Lengths are not written.
    pub fn to_toml(&self) -> String {
        let doc = MapDocument {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    id: n.id.clone(),
                    lat: n.position.lat,
                    lon: n.position.lon,
                })
                .collect(),
            segments: self
                .segments
                .iter()
                .map(|s| SegmentDoc {
                    id: s.id.clone(),
                    from: s.from.clone(),
                    to: s.to.clone(),
                    speed_limit_mps: s.speed_limit_mps,
                    road_name: s.road_name.clone(),
                    heading_deg: s.heading_deg,
                })
                .collect(),
            signals: self.signals.clone(),
        };
        toml::to_string(&doc).expect("map document always serializes")
    }

    pub fn nodes(&self) -> &[LaneNode] {
        &self.nodes
    }

    pub fn segments(&self) -> &[LaneSegment] {
        &self.segments
    }

    pub fn signals(&self) -> &[SignalNode] {
        &self.signals
    }

    pub fn node(&self, id: &str) -> Option<&LaneNode> {
        self.node_index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn segment(&self, id: &str) -> Option<&LaneSegment> {
        self.segment_index.get(id).map(|&i| &self.segments[i])
    }

    pub fn segment_index(&self, id: &str) -> Option<usize> {
        self.segment_index.get(id).copied()
    }

    pub fn segment_endpoints(&self, seg: usize) -> (GeoPoint, GeoPoint) {
        let s = &self.segments[seg];
        (
            self.nodes[s.from_index].position,
            self.nodes[s.to_index].position,
        )
    }

    /// Segments leaving the end node of `seg`.
    pub fn downstream_of(&self, seg: usize) -> &[usize] {
        &self.outgoing[self.segments[seg].to_index]
    }

    /// Segments arriving at the start node of `seg`.
    pub fn upstream_of(&self, seg: usize) -> &[usize] {
        &self.incoming[self.segments[seg].from_index]
    }

    /// Next signal below `seg`, with the length of the chain between the end
    /// of `seg` and the signal node.
    pub fn next_signal(&self, seg: usize) -> Option<(SignalRef, f64)> {
        self.downstream_signal[seg].map(|(s, d)| (SignalRef::from(&self.signals[s]), d))
    }

    pub fn signal_node(&self, signal: SignalRef) -> Option<&SignalNode> {
        self.signals
            .iter()
            .find(|s| s.intersection_id == signal.intersection_id && s.signal_group_id == signal.signal_group_id)
    }
}
