//! Fully oriented expansions of causal templates.
//!
//! A bidirected edge `U <-> V` stands for an unspecified mutual influence.
//! Expansion replaces it by a fresh latent node `H(U,V)` with `H -> U` and
//! `H -> V`, and additionally orients every pair inside each group of
//! correlated outcomes according to one total order of the group. One DAG is
//! produced per combination of total orders; combinations that would close a
//! cycle with the template's own directed edges are skipped.

use std::fmt;
use std::sync::Arc;

use itertools::Itertools;

use super::template::{CausalTemplate, NodeKind, TemplateError};

/// Largest expanded diagram supported by [`NodeSet`].
pub const MAX_DAG_NODES: usize = 128;

/// Bit set over DAG node indices.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeSet(u128);

impl NodeSet {
    pub const EMPTY: NodeSet = NodeSet(0);

    pub fn singleton(i: usize) -> Self {
        NodeSet(1u128 << i)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1u128 << i;
    }

    pub fn remove(&mut self, i: usize) {
        self.0 &= !(1u128 << i);
    }

    pub fn union(self, other: NodeSet) -> NodeSet {
        NodeSet(self.0 | other.0)
    }

    pub fn intersects(self, other: NodeSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(i)
        })
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = NodeSet::EMPTY;
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Directed acyclic graph with labelled, typed nodes.
///
/// Node indices follow lexicographic label order, so iterating neighbours by
/// index visits them in label order.
#[derive(Debug, Clone)]
pub struct Dag {
    labels: Arc<[String]>,
    kinds: Arc<[NodeKind]>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    /// (neighbour, edge points away from this node)
    neighbors: Vec<Vec<(usize, bool)>>,
}

impl Dag {
    /// Builds a DAG over nodes sorted by label. Fails on a cycle.
    pub fn new(
        labels: Arc<[String]>,
        kinds: Arc<[NodeKind]>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, TemplateError> {
        let n = labels.len();
        if n > MAX_DAG_NODES {
            return Err(TemplateError::TooLarge(n));
        }
        debug_assert!(labels.windows(2).all(|w| w[0] < w[1]));
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (a, b) in edges {
            if a == b {
                return Err(TemplateError::SelfLoop(labels[a].clone()));
            }
            children[a].push(b);
            parents[b].push(a);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        let neighbors = (0..n)
            .map(|v| {
                let mut nb: Vec<(usize, bool)> = children[v]
                    .iter()
                    .map(|&c| (c, true))
                    .chain(parents[v].iter().map(|&p| (p, false)))
                    .collect();
                nb.sort_unstable();
                nb
            })
            .collect();
        let dag = Dag {
            labels,
            kinds,
            parents,
            children,
            neighbors,
        };
        if let Some((a, b)) = dag.find_cycle_edge() {
            return Err(TemplateError::Cycle {
                from: dag.labels[a].clone(),
                to: dag.labels[b].clone(),
            });
        }
        Ok(dag)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn kind(&self, v: usize) -> NodeKind {
        self.kinds[v]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Neighbours in index order, flagged `true` when the edge is `v -> w`.
    pub fn neighbors(&self, v: usize) -> &[(usize, bool)] {
        &self.neighbors[v]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.children[from].binary_search(&to).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(a, cs)| cs.iter().map(move |&b| (a, b)))
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    /// Kahn's algorithm; `None` when the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).rev().collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop() {
            order.push(v);
            for &c in self.children[v].iter().rev() {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.push(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    fn find_cycle_edge(&self) -> Option<(usize, usize)> {
        if self.topological_order().is_some() {
            return None;
        }
        // Any edge whose head reaches its tail.
        self.edges().find(|&(a, b)| self.descendants(b).contains(a))
    }

    /// Strict descendants of `v`.
    pub fn descendants(&self, v: usize) -> NodeSet {
        let mut seen = NodeSet::EMPTY;
        let mut stack: Vec<usize> = self.children[v].clone();
        while let Some(u) = stack.pop() {
            if seen.contains(u) {
                continue;
            }
            seen.insert(u);
            stack.extend(self.children[u].iter().copied());
        }
        seen
    }

    /// `set` together with all of its ancestors.
    pub fn ancestral_closure(&self, set: NodeSet) -> NodeSet {
        let mut seen = NodeSet::EMPTY;
        let mut stack: Vec<usize> = set.iter().collect();
        while let Some(u) = stack.pop() {
            if seen.contains(u) {
                continue;
            }
            seen.insert(u);
            stack.extend(self.parents[u].iter().copied());
        }
        seen
    }

    pub fn node_set<'a>(&self, labels: impl IntoIterator<Item = &'a str>) -> Option<NodeSet> {
        labels.into_iter().map(|l| self.index_of(l)).collect()
    }
}

/// No-signalling constraints indexed by DAG node: for each setting, the
/// outcomes it must not influence along a directed chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NsTable {
    forbidden: Vec<NodeSet>,
}

impl NsTable {
    pub fn empty(len: usize) -> Self {
        Self {
            forbidden: vec![NodeSet::EMPTY; len],
        }
    }

    pub fn from_pairs(len: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut table = Self::empty(len);
        for (s, o) in pairs {
            table.forbidden[s].insert(o);
        }
        table
    }

    /// Maps the template's `(setting, outcome)` pairs onto `dag`'s indices.
    pub fn for_template(template: &CausalTemplate, dag: &Dag) -> Self {
        Self::from_pairs(
            dag.len(),
            template.ns_forbidden().iter().map(|(s, o)| {
                (
                    dag.index_of(s.as_str())
                        .expect("template node present in expansion"),
                    dag.index_of(o.as_str())
                        .expect("template node present in expansion"),
                )
            }),
        )
    }

    /// Outcomes that `v` may not influence (empty unless `v` is a constrained setting).
    pub fn forbidden_from(&self, v: usize) -> NodeSet {
        self.forbidden[v]
    }

    pub fn is_forbidden(&self, setting: usize, outcome: usize) -> bool {
        self.forbidden[setting].contains(outcome)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.forbidden
            .iter()
            .enumerate()
            .flat_map(|(s, set)| set.iter().map(move |o| (s, o)))
    }
}

/// Label of the latent node materialized for the correlation `a <-> b`.
pub fn latent_label(a: &str, b: &str) -> String {
    format!("H({a},{b})")
}

/// Labels, kinds and fixed edges shared by every expansion of a template,
/// plus the correlated groups whose orientations vary.
#[derive(Debug, Clone)]
pub struct Expansion {
    labels: Arc<[String]>,
    kinds: Arc<[NodeKind]>,
    base_edges: Vec<(usize, usize)>,
    groups: Vec<Vec<usize>>,
}

impl Expansion {
    pub fn new(template: &CausalTemplate) -> Result<Self, TemplateError> {
        template.validate()?;
        let mut nodes: Vec<(String, NodeKind)> = template
            .nodes()
            .map(|(id, kind)| (id.as_str().to_string(), kind))
            .collect();
        for (a, b) in template.bidirected_edges() {
            nodes.push((latent_label(a.as_str(), b.as_str()), NodeKind::Hidden));
        }
        nodes.sort();
        if nodes.len() > MAX_DAG_NODES {
            return Err(TemplateError::TooLarge(nodes.len()));
        }
        let labels: Arc<[String]> = nodes.iter().map(|(l, _)| l.clone()).collect();
        let kinds: Arc<[NodeKind]> = nodes.iter().map(|(_, k)| *k).collect();
        let index = |l: &str| {
            labels
                .binary_search_by(|x| x.as_str().cmp(l))
                .expect("known label")
        };

        let mut base_edges: Vec<(usize, usize)> = template
            .directed_edges()
            .iter()
            .map(|(a, b)| (index(a.as_str()), index(b.as_str())))
            .collect();
        let mut parent: Vec<usize> = (0..labels.len()).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            parent[x] = r;
            r
        }
        let mut in_corr = NodeSet::EMPTY;
        for (a, b) in template.bidirected_edges() {
            let (ia, ib) = (index(a.as_str()), index(b.as_str()));
            let h = index(&latent_label(a.as_str(), b.as_str()));
            base_edges.push((h, ia));
            base_edges.push((h, ib));
            in_corr.insert(ia);
            in_corr.insert(ib);
            let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for v in in_corr.iter() {
            let root = find(&mut parent, v);
            match groups.iter_mut().find(|g| find(&mut parent, g[0]) == root) {
                Some(g) => g.push(v),
                None => groups.push(vec![v]),
            }
        }
        Ok(Self {
            labels,
            kinds,
            base_edges,
            groups,
        })
    }

    /// Correlated groups, each sorted, ordered by smallest member.
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Product over groups of (group size)!, the number of order combinations.
    pub fn combination_count(&self) -> usize {
        self.groups
            .iter()
            .map(|g| (1..=g.len()).product::<usize>())
            .product()
    }

    /// All acyclic expansions in canonical order: groups by smallest member,
    /// each group's total orders lexicographic, last group varying fastest.
    pub fn dags(&self) -> impl Iterator<Item = Dag> + '_ {
        self.groups
            .iter()
            .map(|g| g.iter().copied().permutations(g.len()).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .into_iter()
            .fold(vec![Vec::<Vec<usize>>::new()], |acc, perms| {
                acc.into_iter()
                    .flat_map(|prefix| {
                        perms.iter().map(move |p| {
                            let mut next = prefix.clone();
                            next.push(p.clone());
                            next
                        })
                    })
                    .collect()
            })
            .into_iter()
            .filter_map(move |orders| {
                let oriented = orders.iter().flat_map(|order| {
                    order
                        .iter()
                        .enumerate()
                        .flat_map(move |(i, &a)| order[i + 1..].iter().map(move |&b| (a, b)))
                });
                let edges: Vec<_> = self.base_edges.iter().copied().chain(oriented).collect();
                Dag::new(self.labels.clone(), self.kinds.clone(), edges).ok()
            })
    }
}

/// Every DAG compatible with the template, in canonical order.
pub fn expand_template(template: &CausalTemplate) -> Result<Vec<Dag>, TemplateError> {
    Ok(Expansion::new(template)?.dags().collect())
}
