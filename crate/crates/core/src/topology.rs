//! Reservoir connectivity graphs and the complexity sequence used for
//! memory-capacity sweeps.
//!
//! A topology lives on `n` qubit nodes. Self-loops (a qubit's own previous
//! spin feeding its next angle) are kept apart from undirected edges between
//! distinct qubits. The complexity sequence starts from the empty graph, adds
//! self-loops one qubit at a time, closes the ring `(0,1),(1,2),…,(n-1,0)`,
//! then adds the remaining chords in lexicographic order until the graph is
//! complete.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_argument, invalid_data, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TopologyRepr", into = "TopologyRepr")]
pub struct ReservoirTopology {
    n_qubits: usize,
    self_loops: Vec<bool>,
    /// Normalized so that `i < j`.
    edges: BTreeSet<(usize, usize)>,
    sequence_index: Option<usize>,
}

/// On-disk form: `{"n": 6, "loops": [true, ...], "edges": [[0, 1], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyRepr {
    n: usize,
    loops: Vec<bool>,
    edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sequence_index: Option<usize>,
}

impl TryFrom<TopologyRepr> for ReservoirTopology {
    type Error = Error;

    fn try_from(repr: TopologyRepr) -> Result<Self> {
        let mut topo = ReservoirTopology::custom(
            repr.n,
            &repr.loops,
            repr.edges.iter().map(|e| (e[0], e[1])),
        )?;
        if let Some(idx) = repr.sequence_index {
            if idx > max_edge_count(repr.n) {
                return Err(invalid_data(format!(
                    "sequence_index {idx} out of range for n = {}",
                    repr.n
                )));
            }
            topo.sequence_index = Some(idx);
        }
        Ok(topo)
    }
}

impl From<ReservoirTopology> for TopologyRepr {
    fn from(t: ReservoirTopology) -> Self {
        TopologyRepr {
            n: t.n_qubits,
            loops: t.self_loops,
            edges: t.edges.into_iter().map(|(i, j)| [i, j]).collect(),
            sequence_index: t.sequence_index,
        }
    }
}

/// Number of self-loops plus undirected edges in the complete graph on `n`
/// nodes with every self-loop present.
pub fn max_edge_count(n: usize) -> usize {
    n + n * n.saturating_sub(1) / 2
}

impl ReservoirTopology {
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid_argument("topology needs at least one qubit"));
        }
        Ok(Self {
            n_qubits: n,
            self_loops: vec![false; n],
            edges: BTreeSet::new(),
            sequence_index: None,
        })
    }

    /// Arbitrary graph; carries no sequence position.
    pub fn custom(
        n: usize,
        self_loops: &[bool],
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut topo = Self::empty(n)?;
        if self_loops.len() != n {
            return Err(invalid_data(format!(
                "expected {n} self-loop flags, got {}",
                self_loops.len()
            )));
        }
        topo.self_loops.copy_from_slice(self_loops);
        for (i, j) in edges {
            topo.insert_edge(i, j)?;
        }
        Ok(topo)
    }

    /// Self-loops on qubits `0..k`, no edges.
    pub fn with_self_loops(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(invalid_argument(format!(
                "cannot place {k} self-loops on {n} qubits"
            )));
        }
        let mut topo = Self::empty(n)?;
        topo.self_loops[..k].iter_mut().for_each(|l| *l = true);
        Ok(topo)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let loops = vec![true; n];
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        Self::custom(n, &loops, edges)
    }

    fn insert_edge(&mut self, i: usize, j: usize) -> Result<bool> {
        if i == j {
            return Err(invalid_data(format!(
                "edge ({i},{j}) is a self-loop; use the loop flags"
            )));
        }
        if i >= self.n_qubits || j >= self.n_qubits {
            return Err(invalid_data(format!(
                "edge ({i},{j}) out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(self.edges.insert((i.min(j), i.max(j))))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn self_loops(&self) -> &[bool] {
        &self.self_loops
    }

    pub fn has_self_loop(&self, m: usize) -> bool {
        self.self_loops[m]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn sequence_index(&self) -> Option<usize> {
        self.sequence_index
    }

    pub fn loop_count(&self) -> usize {
        self.self_loops.iter().filter(|&&l| l).count()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Graph neighbours of `m`, excluding `m` itself, in ascending order.
    pub fn neighbors(&self, m: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(i, j)| {
                if i == m {
                    Some(j)
                } else if j == m {
                    Some(i)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Qubits whose previous spin feeds the angle of `m`: `m` itself when it
    /// carries a self-loop, plus all graph neighbours. Empty means loop-free.
    pub fn feedback_set(&self, m: usize) -> Vec<usize> {
        let mut set = self.neighbors(m);
        if self.self_loops[m] {
            set.push(m);
            set.sort_unstable();
        }
        set
    }

    /// Filled fraction of the `n + n(n-1)/2` possible loops and edges.
    pub fn edge_density(&self) -> f64 {
        (self.loop_count() + self.edge_count()) as f64 / max_edge_count(self.n_qubits) as f64
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl fmt::Display for ReservoirTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}q/{} loops/{} edges",
            self.n_qubits,
            self.loop_count(),
            self.edge_count()
        )
    }
}

/// Ordered complexity sequence of `1 + n + n(n-1)/2` graphs.
pub fn build_sequence(n: usize) -> Result<Vec<ReservoirTopology>> {
    if n < 2 {
        return Err(invalid_argument(format!(
            "topology sequence needs n >= 2, got {n}"
        )));
    }
    let mut current = ReservoirTopology::empty(n)?;
    current.sequence_index = Some(0);
    let mut seq = Vec::with_capacity(1 + max_edge_count(n));
    seq.push(current.clone());

    let push = |topo: &mut ReservoirTopology, seq: &mut Vec<ReservoirTopology>| {
        topo.sequence_index = Some(seq.len());
        seq.push(topo.clone());
    };

    for m in 0..n {
        current.self_loops[m] = true;
        push(&mut current, &mut seq);
    }
    // Ring first; for n = 2 the ring is the single edge (0,1).
    for i in 0..n {
        if current.insert_edge(i, (i + 1) % n)? {
            push(&mut current, &mut seq);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if current.insert_edge(i, j)? {
                push(&mut current, &mut seq);
            }
        }
    }
    debug_assert_eq!(seq.len(), 1 + max_edge_count(n));
    Ok(seq)
}

/// How a run picks its reservoir graph. Parsed from strings such as
/// `self-loops:5`, `sequence:12`, `empty` or `complete`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TopologySelector {
    /// Self-loops on every qubit except the last (`self-loops:n-1`); the
    /// memory-capacity optimum, and the production configuration.
    #[default]
    AllButLastLooped,
    SelfLoops(usize),
    Sequence(usize),
    Empty,
    Complete,
}

impl TopologySelector {
    pub fn resolve(&self, n: usize) -> Result<ReservoirTopology> {
        match *self {
            TopologySelector::AllButLastLooped => {
                ReservoirTopology::with_self_loops(n, n.saturating_sub(1))
            }
            TopologySelector::SelfLoops(k) => ReservoirTopology::with_self_loops(n, k),
            TopologySelector::Sequence(idx) => {
                let seq = build_sequence(n)?;
                let len = seq.len();
                seq.into_iter().nth(idx).ok_or_else(|| {
                    invalid_argument(format!(
                        "sequence index {idx} out of range (sequence has {len} graphs)"
                    ))
                })
            }
            TopologySelector::Empty => ReservoirTopology::empty(n),
            TopologySelector::Complete => ReservoirTopology::complete(n),
        }
    }
}

impl fmt::Display for TopologySelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologySelector::AllButLastLooped => f.write_str("self-loops:n-1"),
            TopologySelector::SelfLoops(k) => write!(f, "self-loops:{k}"),
            TopologySelector::Sequence(i) => write!(f, "sequence:{i}"),
            TopologySelector::Empty => f.write_str("empty"),
            TopologySelector::Complete => f.write_str("complete"),
        }
    }
}

impl FromStr for TopologySelector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "empty" => return Ok(TopologySelector::Empty),
            "complete" => return Ok(TopologySelector::Complete),
            "self-loops:n-1" => return Ok(TopologySelector::AllButLastLooped),
            _ => {}
        }
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| invalid_argument(format!("unrecognized topology selector `{s}`")))?;
        let value: usize = arg
            .trim()
            .parse()
            .map_err(|_| invalid_argument(format!("bad number in topology selector `{s}`")))?;
        match kind.trim() {
            "self-loops" => Ok(TopologySelector::SelfLoops(value)),
            "sequence" => Ok(TopologySelector::Sequence(value)),
            _ => Err(invalid_argument(format!(
                "unrecognized topology selector `{s}`"
            ))),
        }
    }
}

impl Serialize for TopologySelector {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TopologySelector {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
