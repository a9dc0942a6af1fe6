//! Deterministic multi-server simulation: cooperation graphs, straggler
//! timing, transcripts, the cost ledger, the protocol driver and the
//! exhaustive collusion probe.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::combin::{binomial, checked_pow, k_subsets};
use crate::field::{FieldElement, PrimeField, SeededPrg};
use crate::matgrid::FieldMatrix;
use crate::par::Exec;
use crate::schemes::SchemeError;
use crate::secretshare::ComponentPartition;

/// PRG stream used for latency draws.
pub const STREAM_LATENCY: u64 = 3;

/// Refuse probes that would enumerate more rows than this.
pub const PROBE_BUDGET: u128 = 10_000_000;

pub const LEDGER_CSV_HEADER: &str = "mode,p_or_mn,X,N,Rc,upload,download,cooperation,auxiliary";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("{have} servers responded, {need} needed")]
    InsufficientResponders { have: usize, need: usize },
    #[error("topology violation: {0}")]
    TopologyViolation(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("ledger {ledger:?} disagrees with reported costs {report:?}")]
    LedgerMismatch { ledger: CostLedger, report: CostLedger },
    #[error("probe needs {rows} rows, budget is {budget}")]
    BudgetExceeded { rows: u128, budget: u128 },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

/// Undirected graph on `N` servers without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoopGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl CoopGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, SimError> {
        let mut g = Self::empty(n);
        for &(a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    /// Every group becomes a clique.
    pub fn from_groups(n: usize, groups: &[Vec<usize>]) -> Result<Self, SimError> {
        let mut g = Self::empty(n);
        for grp in groups {
            for (i, &a) in grp.iter().enumerate() {
                for &b in &grp[i + 1..] {
                    g.add_edge(a, b)?;
                }
            }
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<(), SimError> {
        if a == b {
            return Err(SimError::InvalidGraph(format!("self-loop at {a}")));
        }
        if a >= self.n || b >= self.n {
            return Err(SimError::InvalidGraph(format!(
                "edge {a}-{b} outside 0..{}",
                self.n
            )));
        }
        self.edges.insert((a.min(b), a.max(b)));
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    fn component_labels(&self) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                // Keep the smaller index as root so labels are canonical.
                let (lo, hi) = (ra.min(rb), ra.max(rb));
                parent[hi] = lo;
            }
        }
        (0..self.n).map(|v| find(&mut parent, v)).collect()
    }

    /// Connected components ordered by smallest member.
    pub fn components(&self) -> ComponentPartition {
        let labels = self.component_labels();
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (v, &r) in labels.iter().enumerate() {
            by_root.entry(r).or_default().push(v);
        }
        ComponentPartition::new(self.n, by_root.into_values().collect())
            .expect("union-find yields a partition")
    }

    pub fn max_component_size(&self) -> usize {
        self.components()
            .components()
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0)
    }

    pub fn same_component(&self, a: usize, b: usize) -> bool {
        let l = self.component_labels();
        l[a] == l[b]
    }
}

/// Seeded response-time model. Servers in `non_responders` never answer.
#[derive(Debug, Clone, PartialEq)]
pub struct StragglerModel {
    seed: u64,
    non_responders: BTreeSet<usize>,
}

impl StragglerModel {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            non_responders: BTreeSet::new(),
        }
    }

    pub fn with_non_responders(seed: u64, silent: impl IntoIterator<Item = usize>) -> Self {
        Self {
            seed,
            non_responders: silent.into_iter().collect(),
        }
    }

    pub fn non_responders(&self) -> &BTreeSet<usize> {
        &self.non_responders
    }

    /// Uniform latency in `[0, 1)` per server.
    pub fn latencies(&self, n: usize) -> Vec<f64> {
        let mut prg = SeededPrg::with_stream(self.seed, STREAM_LATENCY);
        (0..n).map(|_| prg.next_f64()).collect()
    }

    /// Responding servers, fastest first; ties go to the lower index.
    pub fn response_order(&self, n: usize) -> Vec<usize> {
        let lat = self.latencies(n);
        let mut order: Vec<usize> = (0..n)
            .filter(|i| !self.non_responders.contains(i))
            .collect();
        order.sort_by(|&a, &b| lat[a].total_cmp(&lat[b]).then(a.cmp(&b)));
        order
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    User,
    Server(usize),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::User => f.write_str("user"),
            Node::Server(i) => write!(f, "s{i}"),
        }
    }
}

impl Serialize for Node {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Setup,
    Upload,
    Cooperation,
    Download,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    /// Encoded inputs.
    Share,
    /// A server's raw product.
    Product,
    /// Weighted product sent to a group representative.
    Weighted,
    /// Group or hub aggregate sent to the user.
    Aggregate,
    /// Masked product body.
    Ciphertext,
    /// Evaluation point of the receiving server.
    Point,
    /// Ordered list of responder points.
    ResponderPoints,
    /// Key and nonce of one encryption.
    KeyMaterial,
}

impl Payload {
    /// Side information excluded from the headline costs.
    pub fn is_auxiliary(self) -> bool {
        matches!(
            self,
            Payload::Point | Payload::ResponderPoints | Payload::KeyMaterial
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Event {
    pub seq: usize,
    pub phase: Phase,
    pub src: Node,
    pub dst: Node,
    pub payload: Payload,
    pub symbols: u64,
}

/// Ordered log of every message in a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    events: Vec<Event>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, phase: Phase, src: Node, dst: Node, payload: Payload, symbols: u64) {
        debug_assert_ne!(src, dst);
        self.events.push(Event {
            seq: self.events.len(),
            phase,
            src,
            dst,
            payload,
            symbols,
        });
    }

    /// Records a message carrying the given matrices.
    pub fn send(&mut self, phase: Phase, src: Node, dst: Node, payload: Payload, blocks: &[&FieldMatrix]) {
        let symbols = blocks.iter().map(|b| b.len() as u64).sum();
        self.record(phase, src, dst, payload, symbols);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("event serializes"));
            out.push('\n');
        }
        out
    }

    /// Hex SHA-256 of the JSON-lines dump.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_jsonl().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Symbol counts per cost bucket.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct CostLedger {
    pub upload: u64,
    pub download: u64,
    pub cooperation: u64,
    pub auxiliary: u64,
}

impl CostLedger {
    /// Recounts costs from message endpoints and payload kinds alone.
    pub fn from_transcript(t: &Transcript) -> Self {
        let mut l = Self::default();
        for e in &t.events {
            let bucket = if e.payload.is_auxiliary() {
                &mut l.auxiliary
            } else {
                match (e.src, e.dst) {
                    (Node::User, Node::Server(_)) => &mut l.upload,
                    (Node::Server(_), Node::User) => &mut l.download,
                    (Node::Server(_), Node::Server(_)) => &mut l.cooperation,
                    (Node::User, Node::User) => continue,
                }
            };
            *bucket += e.symbols;
        }
        l
    }

    pub fn csv_row(&self, mode: &str, p_or_mn: usize, x: usize, n: usize, rc: usize) -> String {
        format!(
            "{mode},{p_or_mn},{x},{n},{rc},{},{},{},{}",
            self.upload, self.download, self.cooperation, self.auxiliary
        )
    }
}

/// How responders are split into cooperation groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    /// Consecutive slices of size `X` in response order.
    #[default]
    ResponseOrder,
    /// Slices of size `X` within each connected component of the graph.
    ComponentAware,
}

/// Aggregation pattern of a protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cooperation {
    /// Every responder answers the user directly.
    None,
    /// Groups aggregate in the clear; groups must lie inside components.
    InformationTheoretic,
    /// All responders send masked products to one hub; any topology.
    Encrypted,
}

/// Result of a protocol's execution on a fixed responder set.
#[derive(Debug, Clone)]
pub struct ProtocolOutput {
    pub result: FieldMatrix,
    pub transcript: Transcript,
    /// Costs the protocol claims from its own closed forms.
    pub report: CostLedger,
}

pub trait Protocol {
    fn servers(&self) -> usize;
    fn collusion(&self) -> usize;
    fn recovery_threshold(&self) -> usize;
    fn cooperation(&self) -> Cooperation;
    /// Runs with the given responders (fastest first) and groups; the first
    /// member of a group is its representative.
    fn execute(&self, responders: &[usize], groups: &[Vec<usize>]) -> Result<ProtocolOutput, SimError>;
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: FieldMatrix,
    pub transcript: Transcript,
    pub ledger: CostLedger,
    pub responders: Vec<usize>,
    pub groups: Vec<Vec<usize>>,
    /// Graph the run was checked against; induced from the groups when none
    /// was supplied.
    pub graph: CoopGraph,
}

/// Splits responders into groups of at most `x`.
pub fn plan_groups(
    responders: &[usize],
    x: usize,
    grouping: Grouping,
    graph: Option<&CoopGraph>,
) -> Vec<Vec<usize>> {
    let x = x.max(1);
    match (grouping, graph) {
        (Grouping::ComponentAware, Some(g)) => {
            let comps = g.components();
            let mut label = vec![0usize; g.n()];
            for (c, members) in comps.components().iter().enumerate() {
                for &v in members {
                    label[v] = c;
                }
            }
            let mut per: Vec<Vec<usize>> = vec![Vec::new(); comps.len()];
            for &r in responders {
                per[label[r]].push(r);
            }
            per.iter()
                .flat_map(|members| members.chunks(x).map(<[usize]>::to_vec))
                .collect()
        }
        _ => responders.chunks(x).map(<[usize]>::to_vec).collect(),
    }
}

/// Drives a protocol through upload, computation and decoding.
///
/// The fastest `R_c` responders are used. Information-theoretic cooperation
/// requires every group to sit inside one component of `graph` and every
/// component to have at most `X` servers. The ledger is recounted from the
/// transcript and must equal the protocol's own report.
pub fn run(
    protocol: &dyn Protocol,
    graph: Option<&CoopGraph>,
    straggler: &StragglerModel,
    grouping: Grouping,
) -> Result<RunOutcome, SimError> {
    let n = protocol.servers();
    let x = protocol.collusion();
    let rc = protocol.recovery_threshold();
    if let Some(g) = graph {
        if g.n() != n {
            return Err(SimError::InvalidGraph(format!(
                "graph has {} vertices, protocol has {n} servers",
                g.n()
            )));
        }
    }
    let order = straggler.response_order(n);
    if order.len() < rc {
        return Err(SimError::InsufficientResponders {
            have: order.len(),
            need: rc,
        });
    }
    let responders = order[..rc].to_vec();
    let groups = match protocol.cooperation() {
        Cooperation::None => responders.iter().map(|&r| vec![r]).collect(),
        Cooperation::InformationTheoretic => plan_groups(&responders, x, grouping, graph),
        Cooperation::Encrypted => vec![responders.clone()],
    };
    let graph = match graph {
        Some(g) => {
            if protocol.cooperation() == Cooperation::InformationTheoretic {
                check_topology(g, &groups, x)?;
            }
            g.clone()
        }
        None => match protocol.cooperation() {
            Cooperation::InformationTheoretic => CoopGraph::from_groups(n, &groups)?,
            _ => CoopGraph::empty(n),
        },
    };
    let out = protocol.execute(&responders, &groups)?;
    let ledger = CostLedger::from_transcript(&out.transcript);
    if ledger != out.report {
        return Err(SimError::LedgerMismatch {
            ledger,
            report: out.report,
        });
    }
    Ok(RunOutcome {
        result: out.result,
        transcript: out.transcript,
        ledger,
        responders,
        groups,
        graph,
    })
}

fn check_topology(g: &CoopGraph, groups: &[Vec<usize>], x: usize) -> Result<(), SimError> {
    let largest = g.max_component_size();
    if largest > x {
        return Err(SimError::TopologyViolation(format!(
            "a component of size {largest} exceeds X={x}"
        )));
    }
    for grp in groups {
        if let Some(&b) = grp.iter().find(|&&b| !g.same_component(grp[0], b)) {
            return Err(SimError::TopologyViolation(format!(
                "group {grp:?} spans components ({} and {b})",
                grp[0]
            )));
        }
    }
    Ok(())
}

/// Encoder whose uploads are probed for leakage.
pub trait UploadEncoder: Sync {
    fn field(&self) -> PrimeField;
    fn servers(&self) -> usize;
    /// Number of uniform field symbols of encoder randomness.
    fn randomness_len(&self) -> usize;
    /// Upload of every server for input `which` (0 or 1).
    fn upload(&self, which: usize, randomness: &[FieldElement]) -> Vec<Vec<u64>>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeWitness {
    pub subset: Vec<usize>,
    /// A joint view whose multiplicity differs between the two inputs.
    pub view: Vec<u64>,
    pub count_first: u64,
    pub count_second: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeVerdict {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<ProbeWitness>,
    pub x: usize,
    pub subsets: u128,
    pub enumeration_rows: u128,
}

/// Compares, for every `x`-subset of servers, the exact distribution of the
/// joint upload under the two inputs by enumerating all encoder randomness.
pub fn security_probe(enc: &dyn UploadEncoder, x: usize, exec: Exec) -> Result<ProbeVerdict, SimError> {
    let n = enc.servers();
    let q = enc.field().modulus();
    let l = enc.randomness_len();
    let subsets = binomial(n, x);
    let rows = checked_pow(q, l)
        .and_then(|r| r.checked_mul(subsets))
        .unwrap_or(u128::MAX);
    if rows > PROBE_BUDGET {
        return Err(SimError::BudgetExceeded {
            rows,
            budget: PROBE_BUDGET,
        });
    }
    let total = checked_pow(q, l).unwrap() as usize;
    let field = enc.field();
    let all = |which: usize| -> Vec<Vec<Vec<u64>>> {
        exec.map_range(total, |mut idx| {
            let rand: Vec<FieldElement> = (0..l)
                .map(|_| {
                    let d = idx as u64 % q;
                    idx /= q as usize;
                    field.elem(d)
                })
                .collect();
            enc.upload(which, &rand)
        })
    };
    let first = all(0);
    let second = all(1);
    let subs = k_subsets(n, x);
    let witnesses = exec.map(&subs, |t| {
        let hist = |views: &[Vec<Vec<u64>>]| -> BTreeMap<Vec<u64>, u64> {
            let mut h = BTreeMap::new();
            for v in views {
                let joint: Vec<u64> = t.iter().flat_map(|&s| v[s].iter().copied()).collect();
                *h.entry(joint).or_insert(0) += 1;
            }
            h
        };
        let (h0, h1) = (hist(&first), hist(&second));
        if h0 == h1 {
            return None;
        }
        let view = h0
            .keys()
            .chain(h1.keys())
            .find(|k| h0.get(*k) != h1.get(*k))
            .cloned()
            .expect("histograms differ somewhere");
        Some(ProbeWitness {
            subset: t.clone(),
            count_first: h0.get(&view).copied().unwrap_or(0),
            count_second: h1.get(&view).copied().unwrap_or(0),
            view,
        })
    });
    let witness = witnesses.into_iter().flatten().next();
    Ok(ProbeVerdict {
        pass: witness.is_none(),
        witness,
        x,
        subsets,
        enumeration_rows: rows,
    })
}
