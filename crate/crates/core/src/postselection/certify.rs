//! Generates the d-separation queries of the validity argument for a
//! decider-size postselection rule and aggregates them into a report.
//!
//! Every condition quantifies existentially over the postselection's parent
//! set: a step passes as soon as one admissible set of `d` deciders makes all
//! of its queries separated. Candidate sets are tried in lexicographic order,
//! so reports are reproducible.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use super::scenario::{
    BellScenario, Bipartition, PostselectionRule, HIDDEN_LABEL, SELECTION_LABEL,
};
use crate::causal::{DSepQuery, NodeId, OpenPath, PreparedTemplate};

pub const NO_ADMISSIBLE_DECIDERS: &str = "no admissible decider set within larger group";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Overall {
    #[serde(rename = "CERTIFIED")]
    Certified,
    #[serde(rename = "NOT_CERTIFIABLE")]
    NotCertifiable,
}

impl fmt::Display for Overall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Overall::Certified => "CERTIFIED",
            Overall::NotCertifiable => "NOT_CERTIFIABLE",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryRecord {
    /// Short tag such as `IIa`; empty where a step has a single query.
    pub tag: String,
    /// The query in `.cq` syntax.
    pub query: String,
    pub separated: bool,
    pub witness: Option<OpenPath>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Attempt {
    pub k_parents: Vec<String>,
    /// Set when no admissible decider set existed and this one was chosen
    /// only to exhibit a witness; a forced attempt never passes its step.
    pub forced: bool,
    pub queries: Vec<QueryRecord>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Step {
    pub name: String,
    pub attempts: Vec<Attempt>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionReport {
    pub passed: bool,
    pub steps: Vec<Step>,
    pub explanation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubensembleReport {
    pub bipartition: String,
    pub group1: Vec<String>,
    pub group2: Vec<String>,
    #[serde(flatten)]
    pub report: ConditionReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub condition: String,
    pub bipartition: Option<String>,
    pub step: String,
    pub k_parents: Vec<String>,
    pub query: String,
    pub path: OpenPath,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CertReport {
    pub n: usize,
    pub deciders: usize,
    pub parties: Vec<String>,
    #[serde(rename = "condition_I")]
    pub condition_i: ConditionReport,
    #[serde(rename = "condition_II")]
    pub condition_ii: Vec<SubensembleReport>,
    pub ns_postselected: Vec<SubensembleReport>,
    pub witnesses: Vec<Witness>,
    pub overall: Overall,
}

/// Where certification first failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub condition: &'static str,
    pub bipartition: Option<String>,
}

impl CertReport {
    pub fn certified(&self) -> bool {
        self.overall == Overall::Certified
    }

    /// First failing condition in report order: condition I, then for each
    /// bipartition condition II, then the postselected no-signalling checks.
    pub fn first_failure(&self) -> Option<Failure> {
        if !self.condition_i.passed {
            return Some(Failure {
                condition: "I",
                bipartition: None,
            });
        }
        let fail = |c: &'static str, subs: &[SubensembleReport]| {
            subs.iter().find(|s| !s.report.passed).map(|s| Failure {
                condition: c,
                bipartition: Some(s.bipartition.clone()),
            })
        };
        fail("II", &self.condition_ii).or_else(|| fail("ns", &self.ns_postselected))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report types serialize infallibly")
    }

    /// Human-readable rendering listing every query in `.cq` syntax.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "certify n={} deciders={}: {}",
            self.n, self.deciders, self.overall
        );
        render_condition(&mut out, "condition I", &self.condition_i);
        for s in &self.condition_ii {
            render_condition(
                &mut out,
                &format!("condition II on {}", s.bipartition),
                &s.report,
            );
        }
        for s in &self.ns_postselected {
            render_condition(
                &mut out,
                &format!("postselected no-signalling on {}", s.bipartition),
                &s.report,
            );
        }
        if !self.witnesses.is_empty() {
            let _ = writeln!(out, "witnesses:");
            for w in &self.witnesses {
                let site = w
                    .bipartition
                    .as_deref()
                    .map(|b| format!(" on {b}"))
                    .unwrap_or_default();
                let _ = writeln!(
                    out,
                    "  condition {}{site}, {}, deciders {{{}}}",
                    w.condition,
                    w.step,
                    w.k_parents.join(",")
                );
                let _ = writeln!(out, "    {}", w.query);
                let _ = writeln!(out, "    open: {}", w.path);
            }
        }
        out
    }
}

fn verdict(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

fn render_condition(out: &mut String, title: &str, r: &ConditionReport) {
    let _ = writeln!(out, "{title}: {}", verdict(r.passed));
    if let Some(e) = &r.explanation {
        let _ = writeln!(out, "  note: {e}");
    }
    for step in &r.steps {
        let _ = writeln!(out, "  {}: {}", step.name, verdict(step.passed));
        for a in &step.attempts {
            let forced = if a.forced { " (forced)" } else { "" };
            let _ = writeln!(out, "    deciders {{{}}}{forced}", a.k_parents.join(","));
            for q in &a.queries {
                let tag = if q.tag.is_empty() {
                    String::new()
                } else {
                    format!("{} ", q.tag)
                };
                let res = if q.separated {
                    "separated"
                } else {
                    "CONNECTED"
                };
                let _ = writeln!(out, "      {tag}{} -> {res}", q.query);
            }
        }
    }
}

fn ids<'a>(labels: impl IntoIterator<Item = &'a str>) -> Vec<NodeId> {
    labels
        .into_iter()
        .map(|l| NodeId::new(l).expect("scenario labels are identifiers"))
        .collect()
}

fn query<'a>(
    from: impl IntoIterator<Item = &'a str>,
    to: impl IntoIterator<Item = &'a str>,
    given: impl IntoIterator<Item = &'a str>,
) -> DSepQuery {
    DSepQuery::new(ids(from), ids(to), ids(given)).expect("scenario queries use disjoint node sets")
}

/// Prepared templates keyed by decider set, for one diagram family.
struct Templates<'a> {
    scenario: &'a BellScenario,
    sub: Option<&'a Bipartition>,
    cache: BTreeMap<Vec<usize>, PreparedTemplate>,
}

impl<'a> Templates<'a> {
    fn new(scenario: &'a BellScenario, sub: Option<&'a Bipartition>) -> Self {
        Self {
            scenario,
            sub,
            cache: BTreeMap::new(),
        }
    }

    fn get(&mut self, k_parents: &[usize]) -> &PreparedTemplate {
        let (s, sub) = (self.scenario, self.sub);
        self.cache.entry(k_parents.to_vec()).or_insert_with(|| {
            let set: BTreeSet<usize> = k_parents.iter().copied().collect();
            let t = match sub {
                Some(b) => s.subensemble_template(b, &set),
                None => s.full_template(&set),
            }
            .expect("scenario templates are valid");
            PreparedTemplate::new(&t).expect("scenario templates fit the expansion limits")
        })
    }
}

fn run_query(prep: &PreparedTemplate, tag: &str, q: &DSepQuery) -> QueryRecord {
    let first = prep
        .first_open_path(q)
        .expect("query nodes exist in scenario templates");
    let witness = match first {
        Some(p) if !p.passes_through(SELECTION_LABEL) => Some(
            prep.first_open_path_through(q, SELECTION_LABEL)
                .expect("K exists")
                .unwrap_or(p),
        ),
        other => other,
    };
    QueryRecord {
        tag: tag.to_string(),
        query: q.to_string(),
        separated: witness.is_none(),
        witness,
    }
}

fn with_hidden(extra: Vec<&str>) -> Vec<&str> {
    let mut v = vec![HIDDEN_LABEL, SELECTION_LABEL];
    v.extend(extra);
    v
}

fn labels(s: &BellScenario, parties: impl IntoIterator<Item = usize>) -> Vec<String> {
    parties
        .into_iter()
        .map(|l| s.outcome(l).to_string())
        .collect()
}

/// Tries each candidate decider set in order until one passes every query.
/// With no candidates, `forced` is run once so the failure carries a witness.
fn search_deciders(
    s: &BellScenario,
    templates: &mut Templates<'_>,
    candidates: Vec<Vec<usize>>,
    forced: Vec<usize>,
    queries: &[(&str, DSepQuery)],
) -> (Vec<Attempt>, bool) {
    let is_forced = candidates.is_empty();
    let sets = if is_forced { vec![forced] } else { candidates };
    let mut attempts = Vec::new();
    for k in sets {
        let prep = templates.get(&k);
        let mut records = Vec::new();
        for (tag, q) in queries {
            let r = run_query(prep, tag, q);
            let ok = r.separated;
            records.push(r);
            if !ok {
                break;
            }
        }
        let passed = !is_forced && records.iter().all(|r| r.separated);
        attempts.push(Attempt {
            k_parents: labels(s, k),
            forced: is_forced,
            queries: records,
            passed,
        });
        if passed {
            return (attempts, true);
        }
    }
    (attempts, false)
}

/// Free choice of the settings in the presence of the postselection.
///
/// Starting from the conditioning set {all settings, K}, settings are removed
/// one party at a time (last party first); at each step the hidden variable
/// must be separated from the removed setting, on the diagram with every
/// outcome pair correlated, for some decider set that excludes that party.
pub fn check_condition_i(s: &BellScenario, r: &PostselectionRule) -> ConditionReport {
    let (n, d) = (s.n(), r.decider_size());
    let mut templates = Templates::new(s, None);
    let mut given: BTreeSet<&str> = s.setting_labels().iter().map(String::as_str).collect();
    given.insert(SELECTION_LABEL);
    let mut steps = Vec::new();
    let mut explanation = None;
    for l in (0..n).rev() {
        let x = s.setting(l);
        given.remove(x);
        let q = query([HIDDEN_LABEL], [x], given.iter().copied());
        let candidates: Vec<Vec<usize>> = (0..n).filter(|&p| p != l).combinations(d).collect();
        if candidates.is_empty() {
            explanation = Some(format!(
                "no decider set of size {d} excludes party {}",
                s.outcome(l)
            ));
        }
        let forced = (0..d).collect();
        let (attempts, passed) = search_deciders(s, &mut templates, candidates, forced, &[("", q)]);
        steps.push(Step {
            name: format!("eliminate {x}"),
            attempts,
            passed,
        });
        if !passed {
            break;
        }
    }
    ConditionReport {
        passed: steps.len() == n && steps.iter().all(|st| st.passed),
        steps,
        explanation,
    }
}

/// Factorization of the postselected subensemble statistics across `sub`,
/// with deciders drawn from the larger group.
pub fn check_condition_ii(
    s: &BellScenario,
    sub: &Bipartition,
    r: &PostselectionRule,
) -> ConditionReport {
    let d = r.decider_size();
    let (g1, g2) = (sub.group1(), sub.group2());
    let out = |g: &BTreeSet<usize>| g.iter().map(|&l| s.outcome(l)).collect::<Vec<_>>();
    let set = |g: &BTreeSet<usize>| g.iter().map(|&l| s.setting(l)).collect::<Vec<_>>();
    let all_settings: Vec<&str> = s.setting_labels().iter().map(String::as_str).collect();
    let queries = [
        (
            "IIa",
            query(out(g1), out(g2), with_hidden(all_settings.clone())),
        ),
        ("IIb", query(out(g1), set(g2), with_hidden(set(g1)))),
        ("IIc", query(out(g2), set(g1), with_hidden(set(g2)))),
    ];
    let candidates: Vec<Vec<usize>> = g2.iter().copied().combinations(d).collect();
    let explanation = candidates
        .is_empty()
        .then(|| NO_ADMISSIBLE_DECIDERS.to_string());
    // Straddling set: the whole larger group plus the highest-indexed members
    // of the smaller one.
    let forced: Vec<usize> = {
        let extra = d.saturating_sub(g2.len());
        let mut k: Vec<usize> = g1.iter().rev().take(extra).copied().collect();
        k.extend(g2.iter().copied());
        k.sort_unstable();
        k.truncate(d);
        k
    };
    let mut templates = Templates::new(s, Some(sub));
    let (attempts, passed) = search_deciders(s, &mut templates, candidates, forced, &queries);
    ConditionReport {
        passed,
        steps: vec![Step {
            name: "factorization".into(),
            attempts,
            passed,
        }],
        explanation,
    }
}

/// No-signalling of the postselected subensemble statistics: each outcome
/// independent of every other party's setting given its own setting.
/// Stops at the first failing pair.
pub fn check_ns_postselected(
    s: &BellScenario,
    sub: &Bipartition,
    r: &PostselectionRule,
) -> ConditionReport {
    let (n, d) = (s.n(), r.decider_size());
    let mut templates = Templates::new(s, Some(sub));
    let mut steps = Vec::new();
    'pairs: for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let q = query(
                [s.outcome(i)],
                [s.setting(j)],
                [HIDDEN_LABEL, SELECTION_LABEL, s.setting(i)],
            );
            // Sets without the signalling party first: they are the ones that
            // can block the path through K; each group is in lexicographic order.
            let (mut candidates, with_j): (Vec<Vec<usize>>, Vec<Vec<usize>>) =
                (0..n).combinations(d).partition(|k| !k.contains(&j));
            candidates.extend(with_j);
            let (attempts, passed) =
                search_deciders(s, &mut templates, candidates, Vec::new(), &[("", q)]);
            steps.push(Step {
                name: format!("{} vs {}", s.outcome(i), s.setting(j)),
                attempts,
                passed,
            });
            if !passed {
                break 'pairs;
            }
        }
    }
    ConditionReport {
        passed: steps.iter().all(|st| st.passed),
        steps,
        explanation: None,
    }
}

fn subensemble_report(
    s: &BellScenario,
    b: &Bipartition,
    report: ConditionReport,
) -> SubensembleReport {
    SubensembleReport {
        bipartition: b.display(s).to_string(),
        group1: labels(s, b.group1().iter().copied()),
        group2: labels(s, b.group2().iter().copied()),
        report,
    }
}

fn collect_witnesses(
    out: &mut Vec<Witness>,
    condition: &str,
    bipartition: Option<&str>,
    r: &ConditionReport,
) {
    for step in r.steps.iter().filter(|st| !st.passed) {
        let found = step.attempts.iter().find_map(|a| {
            a.queries
                .iter()
                .find_map(|q| q.witness.as_ref().map(|w| (a, q, w)))
        });
        if let Some((a, q, w)) = found {
            out.push(Witness {
                condition: condition.to_string(),
                bipartition: bipartition.map(str::to_string),
                step: step.name.clone(),
                k_parents: a.k_parents.clone(),
                query: q.query.clone(),
                path: w.clone(),
            });
        }
    }
}

/// Runs condition I once, and condition II plus the postselected
/// no-signalling checks on every canonical bipartition.
pub fn certify(s: &BellScenario, r: &PostselectionRule) -> CertReport {
    let bips = Bipartition::all(s.n());
    let (condition_i, per_bip) = rayon::join(
        || check_condition_i(s, r),
        || {
            bips.par_iter()
                .map(|b| {
                    (
                        subensemble_report(s, b, check_condition_ii(s, b, r)),
                        subensemble_report(s, b, check_ns_postselected(s, b, r)),
                    )
                })
                .collect::<Vec<_>>()
        },
    );
    let (condition_ii, ns_postselected): (Vec<_>, Vec<_>) = per_bip.into_iter().unzip();

    let mut witnesses = Vec::new();
    collect_witnesses(&mut witnesses, "I", None, &condition_i);
    for sr in &condition_ii {
        collect_witnesses(&mut witnesses, "II", Some(&sr.bipartition), &sr.report);
    }
    for sr in &ns_postselected {
        collect_witnesses(&mut witnesses, "ns", Some(&sr.bipartition), &sr.report);
    }
    let all_pass = condition_i.passed
        && condition_ii.iter().all(|x| x.report.passed)
        && ns_postselected.iter().all(|x| x.report.passed);
    CertReport {
        n: s.n(),
        deciders: r.decider_size(),
        parties: s.party_labels().to_vec(),
        condition_i,
        condition_ii,
        ns_postselected,
        witnesses,
        overall: if all_pass {
            Overall::Certified
        } else {
            Overall::NotCertifiable
        },
    }
}
