//! Genome representation: node genes, connection genes and the two delay genes.
//!
//! Input nodes are keyed by signal and lag (`u0..u{du}`, `y1..y{dy}`), so the
//! same lag is the same structural endpoint in every genome of a run. Hidden
//! node identities come from the [`InnovationRegistry`]; `h0` is the hidden
//! node every initial genome starts with.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::random::gaussian;

pub type Innovation = u64;

/// Identity of a node. Orders as inputs (u, then y), hidden, output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    /// Exogenous input delayed by the given lag, `u(k - lag)`.
    U(u32),
    /// Fed-back model output delayed by the given lag, `y(k - lag)`, lag >= 1.
    Y(u32),
    Hidden(u32),
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    InputU,
    InputY,
    Hidden,
    Output,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::InputU => "input-u",
            NodeKind::InputY => "input-y",
            NodeKind::Hidden => "hidden",
            NodeKind::Output => "output",
        }
    }
}

impl NodeId {
    pub fn kind(self) -> NodeKind {
        match self {
            NodeId::U(_) => NodeKind::InputU,
            NodeId::Y(_) => NodeKind::InputY,
            NodeId::Hidden(_) => NodeKind::Hidden,
            NodeId::Output => NodeKind::Output,
        }
    }

    pub fn is_input(self) -> bool {
        matches!(self, NodeId::U(_) | NodeId::Y(_))
    }

    pub fn lag(self) -> Option<u32> {
        match self {
            NodeId::U(l) | NodeId::Y(l) => Some(l),
            _ => None,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::U(l) => write!(f, "u{l}"),
            NodeId::Y(l) => write!(f, "y{l}"),
            NodeId::Hidden(h) => write!(f, "h{h}"),
            NodeId::Output => f.write_str("out"),
        }
    }
}

impl FromStr for NodeId {
    type Err = GenomeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GenomeError::Malformed(format!("bad node id `{s}`"));
        if s == "out" {
            return Ok(NodeId::Output);
        }
        let (prefix, digits) = s.split_at(s.len().min(1));
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let n: u32 = digits.parse().map_err(|_| bad())?;
        match prefix {
            "u" => Ok(NodeId::U(n)),
            "y" if n >= 1 => Ok(NodeId::Y(n)),
            "h" => Ok(NodeId::Hidden(n)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeGene {
    pub id: NodeId,
    /// Only hidden nodes carry a bias; it is 0 for inputs and the output.
    pub bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionGene {
    pub innovation: Innovation,
    pub source: NodeId,
    pub target: NodeId,
    pub weight: f64,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenomeError {
    #[error("malformed genome: {0}")]
    Malformed(String),
    #[error("connection {innovation} references missing node {node}")]
    DanglingNode { innovation: Innovation, node: NodeId },
    #[error("duplicate innovation number {0}")]
    DuplicateInnovation(Innovation),
    #[error("duplicate node {0}")]
    DuplicateNode(NodeId),
    #[error("more than one connection gene for {from} -> {to}")]
    DuplicatePair { from: NodeId, to: NodeId },
    #[error("connection {innovation} has an invalid direction {from} -> {to}")]
    BadDirection {
        innovation: Innovation,
        from: NodeId,
        to: NodeId,
    },
    #[error("input nodes do not match delay levels du={du}, dy={dy}: {detail}")]
    InputLayout { du: u32, dy: u32, detail: String },
    #[error("genome has no output node")]
    MissingOutput,
    #[error("node {id} declared with kind `{kind}`")]
    KindMismatch { id: NodeId, kind: String },
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error("enabled connections contain a cycle")]
    Cycle,
}

/// Nodes, connections, delay levels and (once evaluated) fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    pub nodes: BTreeMap<NodeId, NodeGene>,
    pub connections: BTreeMap<Innovation, ConnectionGene>,
    pub du: u32,
    pub dy: u32,
    pub fitness: Option<f64>,
}

/// Input node ids implied by the delay levels: `u0..=u{du}` then `y1..=y{dy}`.
pub fn input_ids(du: u32, dy: u32) -> impl Iterator<Item = NodeId> {
    (0..=du).map(NodeId::U).chain((1..=dy).map(NodeId::Y))
}

impl Genome {
    /// Inputs for the given delays plus the output node; no hidden nodes, no connections.
    pub fn new(du: u32, dy: u32) -> Genome {
        let mut nodes = BTreeMap::new();
        for id in input_ids(du, dy).chain(std::iter::once(NodeId::Output)) {
            nodes.insert(id, NodeGene { id, bias: 0.0 });
        }
        Genome {
            nodes,
            connections: BTreeMap::new(),
            du,
            dy,
            fitness: None,
        }
    }

    pub fn input_count(&self) -> usize {
        self.nodes.keys().filter(|id| id.is_input()).count()
    }

    pub fn hidden_ids(&self) -> Vec<NodeId> {
        self.nodes.keys().copied().filter(|id| id.kind() == NodeKind::Hidden).collect()
    }

    pub fn find_connection(&self, source: NodeId, target: NodeId) -> Option<&ConnectionGene> {
        self.connections.values().find(|c| c.source == source && c.target == target)
    }

    /// Whether `source -> target` is a legal edge shape (ignoring acyclicity).
    pub fn is_valid_direction(source: NodeId, target: NodeId) -> bool {
        source != NodeId::Output && !target.is_input() && source != target
    }

    /// True when enabling `source -> target` would close a loop through enabled connections.
    pub fn creates_cycle(&self, source: NodeId, target: NodeId) -> bool {
        if source == target {
            return true;
        }
        let mut adjacency: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        for c in self.connections.values().filter(|c| c.enabled) {
            adjacency.entry(c.source).or_default().push(c.target);
        }
        let mut stack = vec![target];
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if n == source {
                return true;
            }
            if seen.insert(n) {
                if let Some(next) = adjacency.get(&n) {
                    stack.extend(next.iter().copied());
                }
            }
        }
        false
    }

    /// Removes a node and every connection touching it. Returns the removed connections.
    pub fn remove_node(&mut self, id: NodeId) -> Vec<ConnectionGene> {
        self.nodes.remove(&id);
        let doomed: Vec<Innovation> = self
            .connections
            .values()
            .filter(|c| c.source == id || c.target == id)
            .map(|c| c.innovation)
            .collect();
        doomed
            .into_iter()
            .filter_map(|i| self.connections.remove(&i))
            .collect()
    }

    pub fn enabled_connection_count(&self) -> usize {
        self.connections.values().filter(|c| c.enabled).count()
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<(), GenomeError> {
        let expected: BTreeSet<NodeId> = input_ids(self.du, self.dy).collect();
        let actual: BTreeSet<NodeId> = self.nodes.keys().copied().filter(|id| id.is_input()).collect();
        if expected != actual {
            let missing: Vec<String> = expected.difference(&actual).map(|n| n.to_string()).collect();
            let extra: Vec<String> = actual.difference(&expected).map(|n| n.to_string()).collect();
            return Err(GenomeError::InputLayout {
                du: self.du,
                dy: self.dy,
                detail: format!("missing [{}], unexpected [{}]", missing.join(","), extra.join(",")),
            });
        }
        if !self.nodes.contains_key(&NodeId::Output) {
            return Err(GenomeError::MissingOutput);
        }
        for (id, node) in &self.nodes {
            if node.id != *id {
                return Err(GenomeError::Malformed(format!("node keyed {id} carries id {}", node.id)));
            }
            if !node.bias.is_finite() {
                return Err(GenomeError::NonFinite(format!("bias on {id}")));
            }
        }
        let mut pairs = BTreeSet::new();
        for (innovation, c) in &self.connections {
            if c.innovation != *innovation {
                return Err(GenomeError::Malformed(format!(
                    "connection keyed {innovation} carries innovation {}",
                    c.innovation
                )));
            }
            for node in [c.source, c.target] {
                if !self.nodes.contains_key(&node) {
                    return Err(GenomeError::DanglingNode {
                        innovation: c.innovation,
                        node,
                    });
                }
            }
            if !Genome::is_valid_direction(c.source, c.target) {
                return Err(GenomeError::BadDirection {
                    innovation: c.innovation,
                    from: c.source,
                    to: c.target,
                });
            }
            if !pairs.insert((c.source, c.target)) {
                return Err(GenomeError::DuplicatePair {
                    from: c.source,
                    to: c.target,
                });
            }
            if !c.weight.is_finite() {
                return Err(GenomeError::NonFinite(format!("weight on connection {innovation}")));
            }
        }
        if topological_order(self).is_none() {
            return Err(GenomeError::Cycle);
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let file = GenomeFile::from(self);
        let mut text = serde_json::to_string_pretty(&file).expect("genome serialization cannot fail");
        text.push('\n');
        text
    }

    pub fn from_text(text: &str) -> Result<Genome, GenomeError> {
        let file: GenomeFile =
            serde_json::from_str(text).map_err(|e| GenomeError::Malformed(e.to_string()))?;
        file.into_genome()
    }
}

/// Kahn's algorithm over enabled connections; ties broken by node id order.
pub fn topological_order(genome: &Genome) -> Option<Vec<NodeId>> {
    let mut indegree: BTreeMap<NodeId, usize> = genome.nodes.keys().map(|&id| (id, 0)).collect();
    let mut adjacency: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for c in genome.connections.values().filter(|c| c.enabled) {
        *indegree.get_mut(&c.target)? += 1;
        adjacency.entry(c.source).or_default().push(c.target);
    }
    let mut ready: BTreeSet<NodeId> = indegree.iter().filter(|(_, &d)| d == 0).map(|(&id, _)| id).collect();
    let mut order = Vec::with_capacity(indegree.len());
    while let Some(n) = ready.pop_first() {
        order.push(n);
        for t in adjacency.get(&n).into_iter().flatten() {
            let d = indegree.get_mut(t)?;
            *d -= 1;
            if *d == 0 {
                ready.insert(*t);
            }
        }
    }
    (order.len() == indegree.len()).then_some(order)
}

/// Historical markings shared by every genome of one run.
#[derive(Debug, Clone, Default)]
pub struct InnovationRegistry {
    pairs: HashMap<(NodeId, NodeId), Innovation>,
    next_innovation: Innovation,
    splits: HashMap<Innovation, Vec<u32>>,
    next_hidden: u32,
}

impl InnovationRegistry {
    pub fn new() -> Self {
        InnovationRegistry {
            next_hidden: 1,
            ..Default::default()
        }
    }

    /// Innovation number for a structural pair; assigned on first sight, stable afterwards.
    pub fn innovation(&mut self, source: NodeId, target: NodeId) -> Innovation {
        let next = &mut self.next_innovation;
        *self.pairs.entry((source, target)).or_insert_with(|| {
            let n = *next;
            *next += 1;
            n
        })
    }

    /// Hidden node id for splitting connection `innovation`.
    ///
    /// Splitting the same connection in different genomes yields the same node;
    /// a genome that already holds that node gets the next one for the split.
    pub fn split_node(&mut self, innovation: Innovation, genome: &Genome) -> NodeId {
        let known = self.splits.entry(innovation).or_default();
        if let Some(&h) = known.iter().find(|&&h| !genome.nodes.contains_key(&NodeId::Hidden(h))) {
            return NodeId::Hidden(h);
        }
        let h = self.next_hidden;
        self.next_hidden += 1;
        known.push(h);
        NodeId::Hidden(h)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// The hidden node shared by all initial genomes.
pub const INITIAL_HIDDEN: NodeId = NodeId::Hidden(0);

/// Initial individual: every input feeds one hidden node, which feeds the output.
pub fn initial_genome<R: Rng + ?Sized>(
    config: &Config,
    rng: &mut R,
    registry: &mut InnovationRegistry,
) -> Genome {
    let du = rng.random_range(0..=config.du_init_max);
    let dy = rng.random_range(0..=config.dy_init_max);
    let mut genome = Genome::new(du, dy);
    genome.nodes.insert(
        INITIAL_HIDDEN,
        NodeGene {
            id: INITIAL_HIDDEN,
            bias: gaussian(rng, config.bias_init_mean, config.bias_init_stdev),
        },
    );
    let edges: Vec<(NodeId, NodeId)> = input_ids(du, dy)
        .map(|i| (i, INITIAL_HIDDEN))
        .chain(std::iter::once((INITIAL_HIDDEN, NodeId::Output)))
        .collect();
    for (source, target) in edges {
        let innovation = registry.innovation(source, target);
        genome.connections.insert(
            innovation,
            ConnectionGene {
                innovation,
                source,
                target,
                weight: gaussian(rng, config.weight_init_mean, config.weight_init_stdev),
                enabled: true,
            },
        );
    }
    genome
}

/// Classical NEAT distance over connection genes aligned by innovation number.
///
/// Delay genes take no direct part; they only matter through the input
/// connections they imply.
pub fn compatibility_distance(a: &Genome, b: &Genome, config: &Config) -> f64 {
    let mut unmatched = 0usize;
    let mut matching = 0usize;
    let mut weight_diff = 0.0;
    let mut left = a.connections.values().peekable();
    let mut right = b.connections.values().peekable();
    loop {
        match (left.peek(), right.peek()) {
            (Some(l), Some(r)) => match l.innovation.cmp(&r.innovation) {
                std::cmp::Ordering::Equal => {
                    matching += 1;
                    weight_diff += (l.weight - r.weight).abs();
                    left.next();
                    right.next();
                }
                std::cmp::Ordering::Less => {
                    unmatched += 1;
                    left.next();
                }
                std::cmp::Ordering::Greater => {
                    unmatched += 1;
                    right.next();
                }
            },
            (Some(_), None) => {
                unmatched += 1;
                left.next();
            }
            (None, Some(_)) => {
                unmatched += 1;
                right.next();
            }
            (None, None) => break,
        }
    }
    let larger = a.connections.len().max(b.connections.len()).max(1) as f64;
    let structural = config.disjoint_coefficient * unmatched as f64 / larger;
    let parametric = if matching == 0 {
        0.0
    } else {
        config.weight_coefficient * weight_diff / matching as f64
    };
    structural + parametric
}

#[derive(Debug, Serialize, Deserialize)]
struct GenomeFile {
    du: u32,
    dy: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fitness: Option<f64>,
    nodes: Vec<NodeRecord>,
    connections: Vec<ConnectionRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRecord {
    id: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lag: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ConnectionRecord {
    innovation: Innovation,
    #[serde(rename = "in")]
    source: String,
    #[serde(rename = "out")]
    target: String,
    weight: f64,
    enabled: bool,
}

impl From<&Genome> for GenomeFile {
    fn from(g: &Genome) -> Self {
        GenomeFile {
            du: g.du,
            dy: g.dy,
            fitness: g.fitness,
            nodes: g
                .nodes
                .values()
                .map(|n| NodeRecord {
                    id: n.id.to_string(),
                    kind: n.id.kind().as_str().to_string(),
                    lag: n.id.lag(),
                    bias: (n.id.kind() == NodeKind::Hidden).then_some(n.bias),
                })
                .collect(),
            connections: g
                .connections
                .values()
                .map(|c| ConnectionRecord {
                    innovation: c.innovation,
                    source: c.source.to_string(),
                    target: c.target.to_string(),
                    weight: c.weight,
                    enabled: c.enabled,
                })
                .collect(),
        }
    }
}

impl GenomeFile {
    fn into_genome(self) -> Result<Genome, GenomeError> {
        let mut nodes = BTreeMap::new();
        for record in self.nodes {
            let id: NodeId = record.id.parse()?;
            if record.kind != id.kind().as_str() || record.lag != id.lag() {
                return Err(GenomeError::KindMismatch {
                    id,
                    kind: format!("{} (lag {:?})", record.kind, record.lag),
                });
            }
            let bias = match (id.kind(), record.bias) {
                (NodeKind::Hidden, Some(b)) => b,
                (NodeKind::Hidden, None) => {
                    return Err(GenomeError::Malformed(format!("hidden node {id} has no bias")))
                }
                (_, None) => 0.0,
                (_, Some(_)) => {
                    return Err(GenomeError::Malformed(format!("node {id} cannot carry a bias")))
                }
            };
            if nodes.insert(id, NodeGene { id, bias }).is_some() {
                return Err(GenomeError::DuplicateNode(id));
            }
        }
        let mut connections = BTreeMap::new();
        for record in self.connections {
            let gene = ConnectionGene {
                innovation: record.innovation,
                source: record.source.parse()?,
                target: record.target.parse()?,
                weight: record.weight,
                enabled: record.enabled,
            };
            if connections.insert(gene.innovation, gene).is_some() {
                return Err(GenomeError::DuplicateInnovation(gene.innovation));
            }
        }
        let genome = Genome {
            nodes,
            connections,
            du: self.du,
            dy: self.dy,
            fitness: self.fitness,
        };
        genome.validate()?;
        Ok(genome)
    }
}
