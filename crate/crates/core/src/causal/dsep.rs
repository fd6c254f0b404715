//! d-separation over expanded causal templates, with no-signalling
//! fine-tuning.
//!
//! A simple path between a node of the `from` set and a node of the `to` set
//! (with no other query endpoint in its interior) is blocked when any of the
//! following holds:
//!
//! 1. an interior collider is not activated. A collider is activated when it
//!    is conditioned on, or when a directed path leads from it to a
//!    conditioned descendant such that neither side's incoming directed run,
//!    continued down that descendant path, carries a forbidden
//!    setting-to-outcome influence;
//! 2. an interior non-collider is conditioned on;
//! 3. the path contains a contiguous directed chain `S -> .. -> O` (in either
//!    traversal direction) with `(S, O)` a forbidden no-signalling pair.
//!
//! Rule 1 reduces to the textbook descendant rule when no no-signalling pairs
//! are present. Blocking is monotone in path prefixes, which the search below
//! uses to prune.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::dag::{Dag, Expansion, NodeSet, NsTable};
use super::template::{CausalTemplate, NodeId, TemplateError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DSepError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("unknown node `{0}` in query")]
    UnknownNode(String),
    #[error("query sets must be disjoint (`{0}` appears twice)")]
    OverlappingSets(String),
    #[error("malformed path: {0}")]
    MalformedPath(String),
}

/// `from _||_ to | given`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DSepQuery {
    from: BTreeSet<NodeId>,
    to: BTreeSet<NodeId>,
    given: BTreeSet<NodeId>,
}

impl DSepQuery {
    pub fn new(
        from: impl IntoIterator<Item = NodeId>,
        to: impl IntoIterator<Item = NodeId>,
        given: impl IntoIterator<Item = NodeId>,
    ) -> Result<Self, DSepError> {
        let from: BTreeSet<_> = from.into_iter().collect();
        let to: BTreeSet<_> = to.into_iter().collect();
        let given: BTreeSet<_> = given.into_iter().collect();
        if let Some(dup) = from
            .intersection(&to)
            .chain(from.intersection(&given))
            .chain(to.intersection(&given))
            .next()
        {
            return Err(DSepError::OverlappingSets(dup.to_string()));
        }
        Ok(Self { from, to, given })
    }

    pub fn from_labels(from: &[&str], to: &[&str], given: &[&str]) -> Result<Self, DSepError> {
        let ids = |ls: &[&str]| {
            ls.iter()
                .map(|l| NodeId::new(*l))
                .collect::<Result<Vec<_>, _>>()
        };
        Self::new(ids(from)?, ids(to)?, ids(given)?)
    }

    pub fn from_set(&self) -> &BTreeSet<NodeId> {
        &self.from
    }

    pub fn to_set(&self) -> &BTreeSet<NodeId> {
        &self.to
    }

    pub fn given_set(&self) -> &BTreeSet<NodeId> {
        &self.given
    }

    /// The same query with `from` and `to` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            from: self.to.clone(),
            to: self.from.clone(),
            given: self.given.clone(),
        }
    }

    /// Copy with `label` dropped from the conditioning set.
    pub fn without_given(&self, label: &str) -> Self {
        let mut q = self.clone();
        q.given.retain(|g| g.as_str() != label);
        q
    }
}

impl fmt::Display for DSepQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn set(f: &mut fmt::Formatter<'_>, s: &BTreeSet<NodeId>) -> fmt::Result {
            if s.is_empty() {
                return f.write_str("{ }");
            }
            let items: Vec<&str> = s.iter().map(NodeId::as_str).collect();
            write!(f, "{{ {} }}", items.join(", "))
        }
        f.write_str("dsep ")?;
        set(f, &self.from)?;
        f.write_str(" _||_ ")?;
        set(f, &self.to)?;
        f.write_str(" | ")?;
        set(f, &self.given)
    }
}

/// An unblocked path, oriented from the query's `from` set to its `to` set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct OpenPath {
    /// Index of the expansion (in canonical order) in which the path is open.
    pub expansion: usize,
    pub nodes: Vec<String>,
    pub rendered: String,
}

impl OpenPath {
    fn new(dag: &Dag, expansion: usize, path: &[usize]) -> Self {
        let mut rendered = String::from(dag.label(path[0]));
        for w in path.windows(2) {
            rendered.push_str(if dag.has_edge(w[0], w[1]) {
                " -> "
            } else {
                " <- "
            });
            rendered.push_str(dag.label(w[1]));
        }
        Self {
            expansion,
            nodes: path.iter().map(|&v| dag.label(v).to_string()).collect(),
            rendered,
        }
    }

    pub fn passes_through(&self, label: &str) -> bool {
        self.nodes.iter().any(|n| n == label)
    }
}

impl fmt::Display for OpenPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[expansion {}] {}", self.expansion, self.rendered)
    }
}

/// Whether collider `c` is activated, given the forbidden outcomes carried in
/// by the directed runs on both of its sides.
fn collider_activated(dag: &Dag, ns: &NsTable, given: NodeSet, c: usize, forbid: NodeSet) -> bool {
    if given.contains(c) {
        return true;
    }
    let mut seen: HashSet<(usize, NodeSet)> = HashSet::new();
    let mut stack = vec![(c, forbid)];
    while let Some((u, acc)) = stack.pop() {
        for &w in dag.children(u) {
            if acc.contains(w) {
                continue;
            }
            if given.contains(w) {
                return true;
            }
            let next = acc.union(ns.forbidden_from(w));
            if seen.insert((w, next)) {
                stack.push((w, next));
            }
        }
    }
    false
}

/// Applies the three blocking rules to a complete path given as DAG indices.
pub fn path_blocked(
    dag: &Dag,
    path: &[usize],
    given: NodeSet,
    ns: &NsTable,
) -> Result<bool, DSepError> {
    if path.len() < 2 {
        return Err(DSepError::MalformedPath(
            "a path needs at least two nodes".into(),
        ));
    }
    let mut seen = NodeSet::EMPTY;
    for &v in path {
        if v >= dag.len() {
            return Err(DSepError::MalformedPath(format!(
                "node index {v} out of range"
            )));
        }
        if seen.contains(v) {
            return Err(DSepError::MalformedPath(format!(
                "`{}` repeated",
                dag.label(v)
            )));
        }
        seen.insert(v);
    }
    // forward[k]: edge between path[k] and path[k+1] points to path[k+1]
    let mut forward = Vec::with_capacity(path.len() - 1);
    for w in path.windows(2) {
        if dag.has_edge(w[0], w[1]) {
            forward.push(true);
        } else if dag.has_edge(w[1], w[0]) {
            forward.push(false);
        } else {
            return Err(DSepError::MalformedPath(format!(
                "`{}` and `{}` are not adjacent",
                dag.label(w[0]),
                dag.label(w[1])
            )));
        }
    }

    // rule 3
    for (i, &s) in path.iter().enumerate() {
        let forbidden = ns.forbidden_from(s);
        if forbidden.is_empty() {
            continue;
        }
        let mut j = i;
        while j < forward.len() && forward[j] {
            j += 1;
            if forbidden.contains(path[j]) {
                return Ok(true);
            }
        }
        let mut j = i;
        while j > 0 && !forward[j - 1] {
            j -= 1;
            if forbidden.contains(path[j]) {
                return Ok(true);
            }
        }
    }

    for k in 1..path.len() - 1 {
        let v = path[k];
        let collider = forward[k - 1] && !forward[k];
        if !collider {
            if given.contains(v) {
                return Ok(true);
            }
            continue;
        }
        let mut forbid = ns.forbidden_from(v);
        let mut j = k;
        while j > 0 && forward[j - 1] {
            j -= 1;
            forbid = forbid.union(ns.forbidden_from(path[j]));
        }
        let mut j = k;
        while j < forward.len() && !forward[j] {
            j += 1;
            forbid = forbid.union(ns.forbidden_from(path[j]));
        }
        if !collider_activated(dag, ns, given, v, forbid) {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Clone, Copy)]
struct Frame {
    node: usize,
    /// `Some(true)` when the path arrived over `prev -> node`.
    arrived_into: Option<bool>,
    /// Outcomes forbidden by settings on the directed run ending here.
    fwd_forbid: NodeSet,
    /// Nodes on the reversed directed run ending here.
    bwd_run: NodeSet,
    /// Most recent collider whose right-hand run is still being extended,
    /// with the forbidden outcomes accumulated over both of its runs.
    pending: Option<(usize, NodeSet)>,
}

const INTO: usize = 0;
const OUT_OF: usize = 1;

struct Search<'a> {
    dag: &'a Dag,
    ns: &'a NsTable,
    given: NodeSet,
    sources: NodeSet,
    targets: NodeSet,
    /// alive[v][mark]: some relaxed-open walk continues from `v` to a target
    /// when the path arrived at `v` with the given edge mark.
    alive: Vec<[bool; 2]>,
    activation: HashMap<(usize, NodeSet), bool>,
    path: Vec<usize>,
    visited: NodeSet,
    found: Vec<Vec<usize>>,
    first_only: bool,
    /// Only paths through this interior node are reported.
    through: Option<usize>,
}

impl<'a> Search<'a> {
    fn new(
        dag: &'a Dag,
        ns: &'a NsTable,
        given: NodeSet,
        sources: NodeSet,
        targets: NodeSet,
        first_only: bool,
        through: Option<usize>,
    ) -> Self {
        let alive = relaxed_alive(dag, given, targets);
        Self {
            dag,
            ns,
            given,
            sources,
            targets,
            alive,
            activation: HashMap::new(),
            path: Vec::new(),
            visited: NodeSet::EMPTY,
            found: Vec::new(),
            first_only,
            through,
        }
    }

    fn run(mut self) -> Vec<Vec<usize>> {
        for s in self.sources.iter() {
            self.path.clear();
            self.path.push(s);
            self.visited = NodeSet::singleton(s);
            let frame = Frame {
                node: s,
                arrived_into: None,
                fwd_forbid: self.ns.forbidden_from(s),
                bwd_run: NodeSet::singleton(s),
                pending: None,
            };
            if self.extend(frame) {
                break;
            }
        }
        self.found
    }

    fn activated(&mut self, c: usize, forbid: NodeSet) -> bool {
        let (dag, ns, given) = (self.dag, self.ns, self.given);
        *self
            .activation
            .entry((c, forbid))
            .or_insert_with(|| collider_activated(dag, ns, given, c, forbid))
    }

    /// Returns true when the search should stop.
    fn extend(&mut self, frame: Frame) -> bool {
        let v = frame.node;
        let dag = self.dag;
        for &(w, out) in dag.neighbors(v) {
            if self.visited.contains(w) || self.sources.contains(w) {
                continue;
            }
            let w_forbid = self.ns.forbidden_from(w);
            let mut pending = None;
            if let Some(into_v) = frame.arrived_into {
                if into_v && !out {
                    let forbid = frame.fwd_forbid.union(w_forbid);
                    if !self.activated(v, forbid) {
                        continue;
                    }
                    pending = Some((v, forbid));
                } else {
                    if self.given.contains(v) {
                        continue;
                    }
                    if !out {
                        if let Some((c, forbid)) = frame.pending {
                            let grown = forbid.union(w_forbid);
                            if grown != forbid && !self.activated(c, grown) {
                                continue;
                            }
                            pending = Some((c, grown));
                        }
                    }
                }
            }
            let (fwd_forbid, bwd_run) = if out {
                if frame.fwd_forbid.contains(w) {
                    continue;
                }
                (frame.fwd_forbid.union(w_forbid), NodeSet::singleton(w))
            } else {
                if w_forbid.intersects(frame.bwd_run) {
                    continue;
                }
                (w_forbid, frame.bwd_run.union(NodeSet::singleton(w)))
            };

            self.path.push(w);
            if self.targets.contains(w) {
                let wanted = self.through.is_none_or(|r| self.visited.contains(r));
                if wanted {
                    self.found.push(self.path.clone());
                }
                self.path.pop();
                if wanted && self.first_only {
                    return true;
                }
                continue;
            }
            let mark = if out { INTO } else { OUT_OF };
            if !self.alive[w][mark] {
                self.path.pop();
                continue;
            }
            self.visited.insert(w);
            let stop = self.extend(Frame {
                node: w,
                arrived_into: Some(out),
                fwd_forbid,
                bwd_run,
                pending,
            });
            self.visited.remove(w);
            self.path.pop();
            if stop {
                return true;
            }
        }
        false
    }
}

/// Bayes-ball reachability from `targets` under the textbook rules without
/// no-signalling pairs. Every path open under the full rules is a walk open
/// under these, so it is a sound pruning oracle for the exact search.
fn relaxed_alive(dag: &Dag, given: NodeSet, targets: NodeSet) -> Vec<[bool; 2]> {
    let n = dag.len();
    let active_collider = dag.ancestral_closure(given);
    let passes = |v: usize, m_in: usize, m_out: usize| {
        if m_in == INTO && m_out == INTO {
            active_collider.contains(v)
        } else {
            !given.contains(v)
        }
    };
    let mut reached = vec![[false; 2]; n];
    let mut stack = Vec::new();
    for t in targets.iter() {
        for &(w, out) in dag.neighbors(t) {
            let mark = if out { INTO } else { OUT_OF };
            if !reached[w][mark] {
                reached[w][mark] = true;
                stack.push((w, mark));
            }
        }
    }
    while let Some((v, m)) = stack.pop() {
        for &(w, out) in dag.neighbors(v) {
            let m_here = if out { OUT_OF } else { INTO };
            if !passes(v, m, m_here) {
                continue;
            }
            let mark = if out { INTO } else { OUT_OF };
            if !reached[w][mark] {
                reached[w][mark] = true;
                stack.push((w, mark));
            }
        }
    }
    (0..n)
        .map(|v| {
            let ok = |m_src: usize| (0..2).any(|m_t| reached[v][m_t] && passes(v, m_src, m_t));
            [ok(INTO), ok(OUT_OF)]
        })
        .collect()
}

/// A template together with its expansions, ready for repeated queries.
#[derive(Debug, Clone)]
pub struct PreparedTemplate {
    template: CausalTemplate,
    dags: Vec<Dag>,
    ns: NsTable,
}

struct Resolved {
    from: NodeSet,
    to: NodeSet,
    given: NodeSet,
}

impl PreparedTemplate {
    pub fn new(template: &CausalTemplate) -> Result<Self, DSepError> {
        let expansion = Expansion::new(template)?;
        let dags: Vec<Dag> = expansion.dags().collect();
        let len = expansion.labels().len();
        let ns = match dags.first() {
            Some(d) => NsTable::for_template(template, d),
            None => NsTable::empty(len),
        };
        Ok(Self {
            template: template.clone(),
            dags,
            ns,
        })
    }

    pub fn template(&self) -> &CausalTemplate {
        &self.template
    }

    pub fn dags(&self) -> &[Dag] {
        &self.dags
    }

    pub fn ns(&self) -> &NsTable {
        &self.ns
    }

    fn resolve(&self, q: &DSepQuery) -> Result<Resolved, DSepError> {
        for id in q.from.iter().chain(&q.to).chain(&q.given) {
            if !self.template.contains(id.as_str()) {
                return Err(DSepError::UnknownNode(id.to_string()));
            }
        }
        let Some(dag) = self.dags.first() else {
            return Ok(Resolved {
                from: NodeSet::EMPTY,
                to: NodeSet::EMPTY,
                given: NodeSet::EMPTY,
            });
        };
        let set = |s: &BTreeSet<NodeId>| {
            dag.node_set(s.iter().map(NodeId::as_str))
                .expect("resolved above")
        };
        Ok(Resolved {
            from: set(&q.from),
            to: set(&q.to),
            given: set(&q.given),
        })
    }

    pub fn d_separated(&self, q: &DSepQuery) -> Result<bool, DSepError> {
        Ok(self.first_open_path(q)?.is_none())
    }

    /// The first open path in canonical expansion order, if any.
    ///
    /// The search starts from whichever endpoint set has the smaller total
    /// degree; witnesses are always reported from `from` to `to`.
    pub fn first_open_path(&self, q: &DSepQuery) -> Result<Option<OpenPath>, DSepError> {
        self.first_open_path_via(q, None)
    }

    /// Like [`first_open_path`](Self::first_open_path), restricted to paths
    /// with `through` in their interior.
    pub fn first_open_path_through(
        &self,
        q: &DSepQuery,
        through: &str,
    ) -> Result<Option<OpenPath>, DSepError> {
        if !self.template.contains(through) {
            return Err(DSepError::UnknownNode(through.to_string()));
        }
        self.first_open_path_via(q, Some(through))
    }

    fn first_open_path_via(
        &self,
        q: &DSepQuery,
        through: Option<&str>,
    ) -> Result<Option<OpenPath>, DSepError> {
        let r = self.resolve(q)?;
        if r.from.is_empty() || r.to.is_empty() {
            return Ok(None);
        }
        let degree =
            |s: NodeSet| -> usize { s.iter().map(|v| self.dags[0].neighbors(v).len()).sum() };
        let reverse = degree(r.to) < degree(r.from);
        let (start, end) = if reverse {
            (r.to, r.from)
        } else {
            (r.from, r.to)
        };
        Ok(self.dags.par_iter().enumerate().find_map_first(|(i, dag)| {
            let through = through.map(|l| dag.index_of(l).expect("checked against the template"));
            let mut found = Search::new(dag, &self.ns, r.given, start, end, true, through).run();
            found.pop().map(|mut p| {
                if reverse {
                    p.reverse();
                }
                OpenPath::new(dag, i, &p)
            })
        }))
    }

    /// Every open path (interior avoiding the query endpoints) in every
    /// expansion, sorted by expansion index then label sequence.
    pub fn open_paths(&self, q: &DSepQuery) -> Result<Vec<OpenPath>, DSepError> {
        let r = self.resolve(q)?;
        if r.from.is_empty() || r.to.is_empty() {
            return Ok(Vec::new());
        }
        let mut out: Vec<OpenPath> = self
            .dags
            .par_iter()
            .enumerate()
            .flat_map_iter(|(i, dag)| {
                Search::new(dag, &self.ns, r.given, r.from, r.to, false, None)
                    .run()
                    .into_iter()
                    .map(move |p| OpenPath::new(dag, i, &p))
            })
            .collect();
        out.sort();
        Ok(out)
    }
}

/// True iff every path between `from` and `to` is blocked in every expansion.
pub fn d_separated(t: &CausalTemplate, q: &DSepQuery) -> Result<bool, DSepError> {
    PreparedTemplate::new(t)?.d_separated(q)
}

pub fn first_open_path(t: &CausalTemplate, q: &DSepQuery) -> Result<Option<OpenPath>, DSepError> {
    PreparedTemplate::new(t)?.first_open_path(q)
}

pub fn enumerate_open_paths(t: &CausalTemplate, q: &DSepQuery) -> Result<Vec<OpenPath>, DSepError> {
    PreparedTemplate::new(t)?.open_paths(q)
}
