//! d-separation against the brute-force path-enumeration oracle, plus the
//! structural properties of the search.

mod common;

use bellpost::causal::{
    enumerate_open_paths, expand_template, CausalTemplate, DSepQuery, NodeId, PreparedTemplate,
};
use common::families::{
    agree, all_queries, chain_family, chain_queries, labels, legal_ns_pairs, two_party_family,
};
use common::{dsep_oracle, gen};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

#[test]
fn oracle_agrees_on_every_small_chain() {
    let family = chain_family();
    assert!(family.len() > 1000);
    let mut queries = 0;
    for t in &family {
        let prep = PreparedTemplate::new(t).unwrap();
        for q in chain_queries(t) {
            agree(&prep, &q).unwrap();
            queries += 1;
        }
    }
    assert!(queries > 10_000, "{queries}");
}

#[test]
fn oracle_agrees_on_every_two_party_diagram() {
    let family = two_party_family();
    assert_eq!(family.len(), 256 * 2 * 4);
    for t in &family {
        let prep = PreparedTemplate::new(t).unwrap();
        for q in all_queries(t, &["A", "B", "K", "L", "X", "Y"]) {
            agree(&prep, &q).unwrap();
        }
    }
}

#[test]
fn oracle_agrees_on_random_eight_node_templates() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0008);
    for _ in 0..300 {
        let t = gen::random_template(&mut rng, 8);
        let prep = PreparedTemplate::new(&t).unwrap();
        for _ in 0..8 {
            let q = gen::random_query(&mut rng, &t);
            agree(&prep, &q).unwrap();
        }
    }
}

fn reaches(t: &CausalTemplate, from: &NodeId, to: &NodeId) -> bool {
    let mut stack = vec![from.clone()];
    let mut seen = std::collections::BTreeSet::new();
    while let Some(u) = stack.pop() {
        for (a, b) in t.directed_edges() {
            if *a == u && seen.insert(b.clone()) {
                if b == to {
                    return true;
                }
                stack.push(b.clone());
            }
        }
    }
    false
}

/// Whether any two correlated outcomes are joined by a directed path.
fn group_members_linked(t: &CausalTemplate) -> bool {
    let members: Vec<&NodeId> = t
        .bidirected_edges()
        .iter()
        .flat_map(|(a, b)| [a, b])
        .collect();
    members
        .iter()
        .any(|a| members.iter().any(|b| a != b && reaches(t, a, b)))
}

/// Number of bidirected groups and their sizes, computed by union-find.
fn group_sizes(t: &CausalTemplate) -> Vec<usize> {
    let nodes = labels(t);
    let mut root: Vec<usize> = (0..nodes.len()).collect();
    fn find(r: &mut [usize], x: usize) -> usize {
        if r[x] != x {
            let top = find(r, r[x]);
            r[x] = top;
        }
        r[x]
    }
    let ix = |l: &str| nodes.iter().position(|x| x == l).unwrap();
    let mut member = vec![false; nodes.len()];
    for (a, b) in t.bidirected_edges() {
        let (ra, rb) = (
            find(&mut root, ix(a.as_str())),
            find(&mut root, ix(b.as_str())),
        );
        root[ra] = rb;
        member[ix(a.as_str())] = true;
        member[ix(b.as_str())] = true;
    }
    let mut sizes = std::collections::BTreeMap::new();
    for v in (0..nodes.len()).filter(|&v| member[v]) {
        *sizes.entry(find(&mut root, v)).or_insert(0usize) += 1;
    }
    sizes.into_values().collect()
}

fn template_strategy(max_nodes: usize) -> impl Strategy<Value = CausalTemplate> {
    (any::<u64>(), 3..=max_nodes)
        .prop_map(|(seed, n)| gen::random_template(&mut StdRng::seed_from_u64(seed), n))
}

fn template_and_query(max_nodes: usize) -> impl Strategy<Value = (CausalTemplate, DSepQuery)> {
    (any::<u64>(), 3..=max_nodes).prop_map(|(seed, n)| {
        let mut rng = StdRng::seed_from_u64(seed);
        let t = gen::random_template(&mut rng, n);
        let q = gen::random_query(&mut rng, &t);
        (t, q)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn adding_nosignal_pairs_never_disconnects_less((seed, n) in (any::<u64>(), 3..=8usize)) {
        let mut rng = StdRng::seed_from_u64(seed);
        let t = gen::random_template(&mut rng, n);
        let q = gen::random_query(&mut rng, &t);
        let bare = t.without_nosignal();
        let mut full = bare.clone();
        for (s, o) in legal_ns_pairs(&bare) {
            full.add_nosignal(&s, &o).unwrap();
        }
        let sep = |x: &CausalTemplate| PreparedTemplate::new(x).unwrap().d_separated(&q).unwrap();
        let (a, b, c) = (sep(&bare), sep(&t), sep(&full));
        prop_assert!(!a || b, "separated without pairs but not with some");
        prop_assert!(!b || c, "separated with some pairs but not with all");
    }

    #[test]
    fn verdict_is_symmetric((t, q) in template_and_query(8)) {
        let prep = PreparedTemplate::new(&t).unwrap();
        prop_assert_eq!(prep.d_separated(&q).unwrap(), prep.d_separated(&q.swapped()).unwrap());
    }

    #[test]
    fn unconditioning_a_root_off_every_open_path_keeps_the_verdict((t, q) in template_and_query(8)) {
        let prep = PreparedTemplate::new(&t).unwrap();
        let roots: Vec<NodeId> = q
            .given_set()
            .iter()
            .filter(|v| {
                !t.directed_edges().iter().any(|(_, b)| b == *v)
                    && !t.bidirected_edges().iter().any(|(a, b)| a == *v || b == *v)
            })
            .cloned()
            .collect();
        for v in roots {
            let relaxed = q.without_given(v.as_str());
            let paths = prep.open_paths(&relaxed).unwrap();
            if paths.iter().all(|p| !p.passes_through(v.as_str())) {
                prop_assert_eq!(prep.d_separated(&q).unwrap(), paths.is_empty());
            }
        }
    }

    #[test]
    fn expansion_count_is_a_product_of_factorials(t in template_strategy(8)) {
        let dags = expand_template(&t).unwrap();
        let bound: usize = group_sizes(&t).iter().map(|&k| (1..=k).product::<usize>()).product();
        prop_assert_eq!(dags.len(), dsep_oracle::expansions(&t).len());
        prop_assert!(!dags.is_empty() && dags.len() <= bound);
        for d in &dags {
            prop_assert!(d.topological_order().is_some());
        }
        // only a directed path between two members of a group can rule out orders
        let constrained = group_members_linked(&t);
        if !constrained {
            prop_assert_eq!(dags.len(), bound);
        }
    }

    #[test]
    fn enumerated_paths_are_open_witnesses((t, q) in template_and_query(7)) {
        let paths = enumerate_open_paths(&t, &q).unwrap();
        prop_assert_eq!(paths.is_empty(), bellpost::causal::d_separated(&t, &q).unwrap());
        let mut sorted = paths.clone();
        sorted.sort();
        prop_assert_eq!(&sorted, &paths);
        for p in &paths {
            prop_assert!(q.from_set().iter().any(|f| f.as_str() == p.nodes[0]));
            prop_assert!(q.to_set().iter().any(|f| f.as_str() == p.nodes[p.nodes.len() - 1]));
        }
    }
}

#[test]
fn unconditioning_settings_keeps_lambda_separated_from_z() {
    let src = include_str!("corpus/union_ab.cg");
    let t = bellpost::dsl::parse_template(src).unwrap();
    let prep = PreparedTemplate::new(&t).unwrap();
    for given in [&["X", "Y", "K"][..], &["X", "K"], &["Y", "K"], &["K"]] {
        let q = DSepQuery::from_labels(&["Lambda"], &["Z"], given).unwrap();
        assert!(prep.d_separated(&q).unwrap(), "{q}");
        assert!(dsep_oracle::d_separated(&t, &q), "{q}");
    }
}
