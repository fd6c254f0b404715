//! Bell scenarios, bipartitions and the causal templates built from them.

use std::collections::BTreeSet;
use std::fmt;

use itertools::Itertools;
use serde::Serialize;
use thiserror::Error;

use crate::causal::{CausalTemplate, NodeId, NodeKind, TemplateError, MAX_DAG_NODES};

pub const HIDDEN_LABEL: &str = "Lambda";
pub const SELECTION_LABEL: &str = "K";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("a Bell scenario needs at least 2 parties, got {0}")]
    TooFewParties(usize),
    #[error("{0} parties exceed the supported diagram size")]
    TooManyParties(usize),
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("label `{0}` used twice")]
    DuplicateLabel(String),
    #[error("party index {index} out of range for {n} parties")]
    PartyOutOfRange { index: usize, n: usize },
    #[error("decider size {d} must lie in [1, {n}]")]
    DeciderSize { d: usize, n: usize },
    #[error("bipartition groups must be nonempty, disjoint and cover all parties")]
    BadBipartition,
    #[error("the selection node needs at least one parent")]
    NoDeciders,
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// n parties, each with a binary setting node and an outcome node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BellScenario {
    n: usize,
    /// Outcome node labels; these double as party names.
    party_labels: Vec<String>,
    setting_labels: Vec<String>,
}

/// Node count of the full template for `n` parties: settings, outcomes, the
/// hidden and selection nodes, and one latent per correlated outcome pair.
fn expanded_size(n: usize) -> usize {
    2 * n + 2 + n * (n - 1) / 2
}

impl BellScenario {
    /// Default labels: A, B, C with settings X, Y, Z for three parties;
    /// A1..An with X1..Xn otherwise.
    pub fn new(n: usize) -> Result<Self, ScenarioError> {
        let (outcomes, settings): (Vec<String>, Vec<String>) = if n == 3 {
            (
                vec!["A".into(), "B".into(), "C".into()],
                vec!["X".into(), "Y".into(), "Z".into()],
            )
        } else {
            (
                (1..=n).map(|i| format!("A{i}")).collect(),
                (1..=n).map(|i| format!("X{i}")).collect(),
            )
        };
        Self::with_labels(outcomes, settings)
    }

    pub fn with_labels(
        party_labels: Vec<String>,
        setting_labels: Vec<String>,
    ) -> Result<Self, ScenarioError> {
        let n = party_labels.len();
        if n < 2 {
            return Err(ScenarioError::TooFewParties(n));
        }
        if expanded_size(n) > MAX_DAG_NODES {
            return Err(ScenarioError::TooManyParties(n));
        }
        if setting_labels.len() != n {
            return Err(ScenarioError::LabelCount {
                expected: n,
                got: setting_labels.len(),
            });
        }
        let mut seen = BTreeSet::from([HIDDEN_LABEL.to_string(), SELECTION_LABEL.to_string()]);
        for l in party_labels.iter().chain(&setting_labels) {
            NodeId::new(l.as_str())?;
            if !seen.insert(l.clone()) {
                return Err(ScenarioError::DuplicateLabel(l.clone()));
            }
        }
        Ok(Self {
            n,
            party_labels,
            setting_labels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn outcome(&self, l: usize) -> &str {
        &self.party_labels[l]
    }

    pub fn setting(&self, l: usize) -> &str {
        &self.setting_labels[l]
    }

    pub fn party_labels(&self) -> &[String] {
        &self.party_labels
    }

    pub fn setting_labels(&self) -> &[String] {
        &self.setting_labels
    }

    fn check_parties(&self, parties: &BTreeSet<usize>) -> Result<(), ScenarioError> {
        match parties.iter().find(|&&i| i >= self.n) {
            Some(&index) => Err(ScenarioError::PartyOutOfRange { index, n: self.n }),
            None => Ok(()),
        }
    }

    /// Brace-delimited label list for a set of parties, e.g. `{A,B}`.
    pub fn group_label(&self, parties: &BTreeSet<usize>) -> String {
        format!("{{{}}}", parties.iter().map(|&l| self.outcome(l)).join(","))
    }

    fn template(
        &self,
        name: &str,
        groups: &[&BTreeSet<usize>],
        k_parents: &BTreeSet<usize>,
    ) -> Result<CausalTemplate, ScenarioError> {
        if k_parents.is_empty() {
            return Err(ScenarioError::NoDeciders);
        }
        self.check_parties(k_parents)?;
        let id = |s: &str| NodeId::new(s).expect("labels validated at construction");
        let mut t = CausalTemplate::new(name)?;
        t.add_node(id(HIDDEN_LABEL), NodeKind::Hidden)?;
        t.add_node(id(SELECTION_LABEL), NodeKind::Selection)?;
        for l in 0..self.n {
            t.add_node(id(self.setting(l)), NodeKind::Setting(l))?;
            t.add_node(id(self.outcome(l)), NodeKind::Outcome(l))?;
            t.add_edge(self.setting(l), self.outcome(l))?;
            t.add_edge(HIDDEN_LABEL, self.outcome(l))?;
        }
        for g in groups {
            for (a, b) in g.iter().tuple_combinations() {
                t.add_corr(self.outcome(*a), self.outcome(*b))?;
            }
        }
        for &p in k_parents {
            t.add_edge(self.outcome(p), SELECTION_LABEL)?;
        }
        t.add_all_nosignal();
        Ok(t)
    }

    /// Diagram of one subensemble: outcomes correlated within each group of
    /// the bipartition but never across it.
    pub fn subensemble_template(
        &self,
        sub: &Bipartition,
        k_parents: &BTreeSet<usize>,
    ) -> Result<CausalTemplate, ScenarioError> {
        if sub.n() != self.n {
            return Err(ScenarioError::BadBipartition);
        }
        self.template("subensemble", &[sub.group1(), sub.group2()], k_parents)
    }

    /// Union diagram with every outcome pair correlated.
    pub fn full_template(
        &self,
        k_parents: &BTreeSet<usize>,
    ) -> Result<CausalTemplate, ScenarioError> {
        let all: BTreeSet<usize> = (0..self.n).collect();
        self.template("full", &[&all], k_parents)
    }
}

pub fn build_subensemble_template(
    s: &BellScenario,
    sub: &Bipartition,
    k_parents: &BTreeSet<usize>,
) -> Result<CausalTemplate, ScenarioError> {
    s.subensemble_template(sub, k_parents)
}

/// Number of parties `d` whose outcomes suffice to decide the postselection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PostselectionRule {
    decider_size: usize,
}

impl PostselectionRule {
    pub fn new(decider_size: usize, s: &BellScenario) -> Result<Self, ScenarioError> {
        if decider_size == 0 || decider_size > s.n {
            return Err(ScenarioError::DeciderSize {
                d: decider_size,
                n: s.n,
            });
        }
        Ok(Self { decider_size })
    }

    pub fn decider_size(&self) -> usize {
        self.decider_size
    }
}

/// Split of the parties into two nonempty groups.
///
/// Canonical form: `group1` is the strictly smaller group, or, for equal
/// sizes, the one containing party 0.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Bipartition {
    group1: BTreeSet<usize>,
    group2: BTreeSet<usize>,
}

/// The hybrid-model subensemble in which nonlocal correlations stay inside
/// the groups of one bipartition.
pub type SubensembleId = Bipartition;

impl Bipartition {
    /// Canonical bipartition of `0..n` with `side` as one of the groups.
    pub fn new(n: usize, side: impl IntoIterator<Item = usize>) -> Result<Self, ScenarioError> {
        let side: BTreeSet<usize> = side.into_iter().collect();
        if side.is_empty() || side.len() >= n || side.iter().any(|&i| i >= n) {
            return Err(ScenarioError::BadBipartition);
        }
        let rest: BTreeSet<usize> = (0..n).filter(|i| !side.contains(i)).collect();
        let side_first = side.len() < rest.len() || (side.len() == rest.len() && side.contains(&0));
        Ok(if side_first {
            Self {
                group1: side,
                group2: rest,
            }
        } else {
            Self {
                group1: rest,
                group2: side,
            }
        })
    }

    /// All 2^(n-1) - 1 canonical bipartitions, ordered by the size of
    /// `group1` and then lexicographically by `group1`.
    pub fn all(n: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for size in 1..=n / 2 {
            for g1 in (0..n).combinations(size) {
                if 2 * size == n && g1[0] != 0 {
                    continue;
                }
                out.push(Self::new(n, g1).expect("valid by construction"));
            }
        }
        out
    }

    pub fn n(&self) -> usize {
        self.group1.len() + self.group2.len()
    }

    pub fn group1(&self) -> &BTreeSet<usize> {
        &self.group1
    }

    pub fn group2(&self) -> &BTreeSet<usize> {
        &self.group2
    }

    pub fn display<'a>(&'a self, s: &'a BellScenario) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Bipartition, &'a BellScenario);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(
                    f,
                    "{}|{}",
                    self.1.group_label(&self.0.group1),
                    self.1.group_label(&self.0.group2)
                )
            }
        }
        D(self, s)
    }
}
