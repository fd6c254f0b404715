//! Independent oracles and template generators shared by the integration
//! tests. Nothing here calls into the library's d-separation search or
//! permanent code; the oracles work from the public template accessors and
//! the documented interferometer layout only.

#![allow(dead_code)]

pub mod dsep_oracle {
    //! Exhaustive simple-path enumeration with per-path rule application.

    use std::collections::{BTreeMap, BTreeSet};

    use bellpost::causal::{CausalTemplate, DSepQuery, NodeKind};
    use itertools::Itertools;

    pub struct OracleDag {
        pub labels: Vec<String>,
        pub edges: BTreeSet<(usize, usize)>,
    }

    impl OracleDag {
        fn has(&self, a: usize, b: usize) -> bool {
            self.edges.contains(&(a, b))
        }

        fn children(&self, a: usize) -> Vec<usize> {
            self.edges
                .iter()
                .filter(|e| e.0 == a)
                .map(|e| e.1)
                .collect()
        }

        fn adjacent(&self, a: usize) -> Vec<usize> {
            self.edges
                .iter()
                .filter_map(|&(u, v)| {
                    if u == a {
                        Some(v)
                    } else if v == a {
                        Some(u)
                    } else {
                        None
                    }
                })
                .collect()
        }

        fn acyclic(&self) -> bool {
            let n = self.labels.len();
            let mut indeg = vec![0usize; n];
            for &(_, v) in &self.edges {
                indeg[v] += 1;
            }
            let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
            let mut seen = 0;
            while let Some(u) = ready.pop() {
                seen += 1;
                for w in self.children(u) {
                    indeg[w] -= 1;
                    if indeg[w] == 0 {
                        ready.push(w);
                    }
                }
            }
            seen == n
        }
    }

    /// Latent node per correlation, plus every combination of total orders
    /// over each connected correlated group; cyclic combinations dropped.
    pub fn expansions(t: &CausalTemplate) -> Vec<OracleDag> {
        let mut labels: Vec<String> = t.nodes().map(|(id, _)| id.to_string()).collect();
        for (a, b) in t.bidirected_edges() {
            labels.push(format!("H({a},{b})"));
        }
        let idx: BTreeMap<String, usize> = labels
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect();
        let mut base: BTreeSet<(usize, usize)> = t
            .directed_edges()
            .iter()
            .map(|(a, b)| (idx[a.as_str()], idx[b.as_str()]))
            .collect();
        let mut adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for (a, b) in t.bidirected_edges() {
            let (ia, ib) = (idx[a.as_str()], idx[b.as_str()]);
            let h = idx[&format!("H({a},{b})")];
            base.insert((h, ia));
            base.insert((h, ib));
            adj.entry(ia).or_default().insert(ib);
            adj.entry(ib).or_default().insert(ia);
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut done = BTreeSet::new();
        for &start in adj.keys() {
            if !done.insert(start) {
                continue;
            }
            let mut group = vec![start];
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &w in &adj[&u] {
                    if done.insert(w) {
                        group.push(w);
                        stack.push(w);
                    }
                }
            }
            groups.push(group);
        }
        let per_group: Vec<Vec<Vec<usize>>> = groups
            .iter()
            .map(|g| g.iter().copied().permutations(g.len()).collect())
            .collect();
        let combos: Vec<Vec<Vec<usize>>> = if per_group.is_empty() {
            vec![vec![]]
        } else {
            per_group.into_iter().multi_cartesian_product().collect()
        };
        combos
            .into_iter()
            .map(|orders| {
                let mut edges = base.clone();
                for order in &orders {
                    for i in 0..order.len() {
                        for j in i + 1..order.len() {
                            edges.insert((order[i], order[j]));
                        }
                    }
                }
                OracleDag {
                    labels: labels.clone(),
                    edges,
                }
            })
            .filter(OracleDag::acyclic)
            .collect()
    }

    struct Ctx<'a> {
        dag: &'a OracleDag,
        ns: BTreeSet<(usize, usize)>,
        given: BTreeSet<usize>,
    }

    impl Ctx<'_> {
        fn forbidden(&self, s: usize, o: usize) -> bool {
            self.ns.contains(&(s, o))
        }

        /// Some directed path `c -> w1 -> .. -> wk`, `wk` given, such that no
        /// `wi` is forbidden by a setting among `carried` or `w0..w(i-1)`.
        fn activated(&self, c: usize, carried: &[usize]) -> bool {
            if self.given.contains(&c) {
                return true;
            }
            let mut stack: Vec<Vec<usize>> = vec![vec![c]];
            while let Some(chain) = stack.pop() {
                let last = *chain.last().unwrap();
                for w in self.dag.children(last) {
                    let blocked = carried.iter().chain(&chain).any(|&s| self.forbidden(s, w));
                    if blocked {
                        continue;
                    }
                    if self.given.contains(&w) {
                        return true;
                    }
                    let mut next = chain.clone();
                    next.push(w);
                    stack.push(next);
                }
            }
            false
        }

        fn blocked(&self, p: &[usize]) -> bool {
            let fwd: Vec<bool> = p.windows(2).map(|w| self.dag.has(w[0], w[1])).collect();
            for i in 0..p.len() {
                for j in i + 1..p.len() {
                    if fwd[i..j].iter().all(|&f| f) && self.forbidden(p[i], p[j]) {
                        return true;
                    }
                    if fwd[i..j].iter().all(|&f| !f) && self.forbidden(p[j], p[i]) {
                        return true;
                    }
                }
            }
            for k in 1..p.len() - 1 {
                let collider = fwd[k - 1] && !fwd[k];
                if !collider {
                    if self.given.contains(&p[k]) {
                        return true;
                    }
                    continue;
                }
                let mut lo = k;
                while lo > 0 && fwd[lo - 1] {
                    lo -= 1;
                }
                let mut hi = k;
                while hi < fwd.len() && !fwd[hi] {
                    hi += 1;
                }
                let carried: Vec<usize> = p[lo..=hi].to_vec();
                if !self.activated(p[k], &carried) {
                    return true;
                }
            }
            false
        }
    }

    fn render(dag: &OracleDag, p: &[usize]) -> String {
        let mut s = dag.labels[p[0]].clone();
        for w in p.windows(2) {
            s.push_str(if dag.has(w[0], w[1]) { " -> " } else { " <- " });
            s.push_str(&dag.labels[w[1]]);
        }
        s
    }

    /// Rendered open paths over all expansions, sorted (a multiset).
    pub fn open_paths(t: &CausalTemplate, q: &DSepQuery) -> Vec<String> {
        let mut out = Vec::new();
        for dag in expansions(t) {
            let find = |l: &str| dag.labels.iter().position(|x| x == l).unwrap();
            let from: Vec<usize> = q.from_set().iter().map(|l| find(l.as_str())).collect();
            let to: BTreeSet<usize> = q.to_set().iter().map(|l| find(l.as_str())).collect();
            let endpoints: BTreeSet<usize> =
                from.iter().copied().chain(to.iter().copied()).collect();
            let ns = t
                .ns_forbidden()
                .iter()
                .map(|(s, o)| (find(s.as_str()), find(o.as_str())))
                .collect();
            let given = q.given_set().iter().map(|l| find(l.as_str())).collect();
            let ctx = Ctx {
                dag: &dag,
                ns,
                given,
            };
            for &a in &from {
                let mut stack = vec![vec![a]];
                while let Some(path) = stack.pop() {
                    let last = *path.last().unwrap();
                    for w in dag.adjacent(last) {
                        if path.contains(&w) {
                            continue;
                        }
                        let mut next = path.clone();
                        next.push(w);
                        if to.contains(&w) {
                            if !ctx.blocked(&next) {
                                out.push(render(&dag, &next));
                            }
                        } else if !endpoints.contains(&w) {
                            stack.push(next);
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    pub fn d_separated(t: &CausalTemplate, q: &DSepQuery) -> bool {
        open_paths(t, q).is_empty()
    }

    pub fn is_setting(t: &CausalTemplate, label: &str) -> bool {
        matches!(t.kind(label), Some(NodeKind::Setting(_)))
    }
}

pub mod fock {
    //! Three-photon state vector in the 56-dimensional Fock space of six
    //! modes, evolved gate by gate through the interferometer.

    use std::collections::BTreeMap;
    use std::f64::consts::FRAC_1_SQRT_2;

    use num_complex::Complex64;

    pub type Occupation = [u8; 6];

    /// Amplitudes indexed by occupation numbers.
    #[derive(Clone, Debug)]
    pub struct FockState(pub BTreeMap<Occupation, Complex64>);

    fn factorial(n: u8) -> f64 {
        (1..=n).map(f64::from).product()
    }

    fn norm_factor(o: &Occupation) -> f64 {
        o.iter().map(|&k| factorial(k)).product::<f64>().sqrt()
    }

    /// Every occupation vector with three photons.
    pub fn basis() -> Vec<Occupation> {
        let mut out = Vec::new();
        for a in 0..6 {
            for b in a..6 {
                for c in b..6 {
                    let mut o = [0u8; 6];
                    o[a] += 1;
                    o[b] += 1;
                    o[c] += 1;
                    out.push(o);
                }
            }
        }
        out
    }

    impl FockState {
        /// One photon in each listed mode.
        pub fn photons(modes: &[usize]) -> Self {
            let mut o = [0u8; 6];
            for &m in modes {
                o[m] += 1;
            }
            Self(BTreeMap::from([(o, Complex64::new(1.0, 0.0))]))
        }

        /// Applies a two-mode gate `g` (rows/cols = modes `i`, `j`) by
        /// substituting `a_k^dag -> sum_m g[m][k] a_m^dag` in each monomial.
        pub fn apply(&self, i: usize, j: usize, g: [[Complex64; 2]; 2]) -> Self {
            let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
            for (occ, amp) in &self.0 {
                // coefficient of the creation-operator monomial
                let coef = amp / norm_factor(occ);
                let (ni, nj) = (occ[i], occ[j]);
                let mut rest = *occ;
                rest[i] = 0;
                rest[j] = 0;
                // (g00 ai + g10 aj)^ni (g01 ai + g11 aj)^nj, binomially expanded
                for p in 0..=ni {
                    for q in 0..=nj {
                        let c = binom(ni, p)
                            * binom(nj, q)
                            * g[0][0].powu(u32::from(p))
                            * g[1][0].powu(u32::from(ni - p))
                            * g[0][1].powu(u32::from(q))
                            * g[1][1].powu(u32::from(nj - q));
                        let mut o = rest;
                        o[i] = p + q;
                        o[j] = (ni - p) + (nj - q);
                        *out.entry(o).or_default() += coef * c * norm_factor(&o);
                    }
                }
            }
            Self(out)
        }

        pub fn apply_phase(&self, mode: usize, phi: f64) -> Self {
            let e = Complex64::from_polar(1.0, phi);
            Self(
                self.0
                    .iter()
                    .map(|(o, a)| (*o, a * e.powu(u32::from(o[mode]))))
                    .collect(),
            )
        }

        pub fn probability(&self, o: &Occupation) -> f64 {
            self.0.get(o).map_or(0.0, |a| a.norm_sqr())
        }

        pub fn norm_sqr(&self) -> f64 {
            self.0.values().map(|a| a.norm_sqr()).sum()
        }
    }

    fn binom(n: u8, k: u8) -> Complex64 {
        Complex64::new(factorial(n) / (factorial(k) * factorial(n - k)), 0.0)
    }

    /// `a_t -> (a_t + i a_r)/sqrt 2`, `a_r -> (a_r + i a_t)/sqrt 2`.
    fn splitter() -> [[Complex64; 2]; 2] {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let r = Complex64::new(0.0, FRAC_1_SQRT_2);
        [[s, r], [r, s]]
    }

    /// Output state for phases on the three upper arms. Modes: A-up, A-low,
    /// B-up, B-low, C-up, C-low; sources enter C-low, A-low, B-low and
    /// reflect into A-up, B-up, C-up respectively.
    pub fn evolve(phases: [f64; 3]) -> FockState {
        let bs = splitter();
        let mut st = FockState::photons(&[5, 1, 3]);
        st = st.apply(5, 0, bs).apply(1, 2, bs).apply(3, 4, bs);
        for (k, phi) in phases.iter().enumerate() {
            st = st.apply_phase(2 * k, *phi);
        }
        for k in 0..3 {
            st = st.apply(2 * k, 2 * k + 1, bs);
        }
        st
    }
}

pub mod gen {
    //! Template generators for oracle comparisons.

    use bellpost::causal::{CausalTemplate, DSepQuery, NodeId, NodeKind};
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn id(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    /// Random template with `n` nodes: kinds drawn at random, directed edges
    /// along a random order, correlations between outcomes, and random
    /// legal no-signalling pairs.
    pub fn random_template(rng: &mut impl Rng, n: usize) -> CausalTemplate {
        let mut t = CausalTemplate::new("random").unwrap();
        let labels: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
        for l in &labels {
            let kind = match rng.gen_range(0..10) {
                0..=2 => NodeKind::Setting(rng.gen_range(0..3)),
                3..=6 => NodeKind::Outcome(rng.gen_range(0..3)),
                7..=8 => NodeKind::Hidden,
                _ => NodeKind::Selection,
            };
            t.add_node(id(l), kind).unwrap();
        }
        let mut order = labels.clone();
        order.shuffle(rng);
        let density = rng.gen_range(0.15..0.5);
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(density) {
                    let _ = t.add_edge(&order[i], &order[j]);
                }
            }
        }
        let outcomes: Vec<&String> = labels
            .iter()
            .filter(|l| matches!(t.kind(l), Some(NodeKind::Outcome(_))))
            .collect();
        for i in 0..outcomes.len() {
            for j in i + 1..outcomes.len() {
                if rng.gen_bool(0.2) {
                    t.add_corr(outcomes[i], outcomes[j]).unwrap();
                }
            }
        }
        for s in &labels {
            for o in &labels {
                if let (Some(NodeKind::Setting(i)), Some(NodeKind::Outcome(j))) =
                    (t.kind(s), t.kind(o))
                {
                    if i != j && rng.gen_bool(0.5) {
                        t.add_nosignal(s, o).unwrap();
                    }
                }
            }
        }
        t
    }

    /// Random query with nonempty, pairwise disjoint sets.
    pub fn random_query(rng: &mut impl Rng, t: &CausalTemplate) -> DSepQuery {
        let mut labels: Vec<NodeId> = t.nodes().map(|(l, _)| l.clone()).collect();
        labels.shuffle(rng);
        let n = labels.len();
        let a = rng.gen_range(1..=2.min(n - 1));
        let b = rng.gen_range(1..=2.min(n - a));
        let mut given = Vec::new();
        for l in &labels[a + b..] {
            if rng.gen_bool(0.4) {
                given.push(l.clone());
            }
        }
        DSepQuery::new(labels[..a].to_vec(), labels[a..a + b].to_vec(), given).unwrap()
    }

    /// A path `V0 - V1 - .. - V(k-1)` with the given edge orientations
    /// (`true` = pointing right), endpoints a setting and an outcome of
    /// different parties, and an optional child hanging off node `hang`.
    pub fn chain(
        orient: &[bool],
        interior_kinds: &[NodeKind],
        hang: Option<usize>,
    ) -> CausalTemplate {
        let k = orient.len() + 1;
        let mut t = CausalTemplate::new("chain").unwrap();
        for i in 0..k {
            let kind = if i == 0 {
                NodeKind::Setting(0)
            } else if i == k - 1 {
                NodeKind::Outcome(1)
            } else {
                interior_kinds[i - 1]
            };
            t.add_node(id(&format!("V{i}")), kind).unwrap();
        }
        for (i, &right) in orient.iter().enumerate() {
            let (a, b) = (format!("V{i}"), format!("V{}", i + 1));
            if right {
                t.add_edge(&a, &b).unwrap();
            } else {
                t.add_edge(&b, &a).unwrap();
            }
        }
        if let Some(h) = hang {
            t.add_node(id("D"), NodeKind::Outcome(1)).unwrap();
            t.add_edge(&format!("V{h}"), "D").unwrap();
        }
        t
    }
}

pub mod families {
    //! Exhaustive structured template families and the comparison helper.

    use bellpost::causal::{CausalTemplate, DSepQuery, NodeId, NodeKind, PreparedTemplate};
    use itertools::Itertools;

    use super::{dsep_oracle, gen};

    fn id(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    pub fn labels(t: &CausalTemplate) -> Vec<String> {
        t.nodes().map(|(l, _)| l.to_string()).collect()
    }

    /// Compares verdicts and the full multiset of rendered open paths.
    pub fn agree(prep: &PreparedTemplate, q: &DSepQuery) -> Result<(), String> {
        let t = prep.template();
        let expected = dsep_oracle::open_paths(t, q);
        let verdict = prep.d_separated(q).unwrap();
        if verdict != expected.is_empty() {
            return Err(format!(
                "verdict mismatch on {q} in\n{}\noracle paths {expected:?}",
                bellpost::dsl::serialize_template(t)
            ));
        }
        let mut got: Vec<String> = prep
            .open_paths(q)
            .unwrap()
            .into_iter()
            .map(|p| p.rendered)
            .collect();
        got.sort();
        if got != expected {
            return Err(format!(
                "path mismatch on {q} in\n{}\nlibrary {got:?}\noracle {expected:?}",
                bellpost::dsl::serialize_template(t)
            ));
        }
        Ok(())
    }

    /// Every query between two of `ends`, conditioning on every subset of the
    /// remaining nodes.
    pub fn all_queries(t: &CausalTemplate, ends: &[&str]) -> Vec<DSepQuery> {
        let nodes = labels(t);
        let mut out = Vec::new();
        for (a, b) in ends.iter().tuple_combinations() {
            let rest: Vec<&String> = nodes.iter().filter(|l| l != a && l != b).collect();
            for given in rest.iter().copied().powerset() {
                out.push(
                    DSepQuery::new([id(a)], [id(b)], given.into_iter().map(|l| id(l))).unwrap(),
                );
            }
        }
        out
    }

    pub fn legal_ns_pairs(t: &CausalTemplate) -> Vec<(String, String)> {
        let nodes = labels(t);
        let mut out = Vec::new();
        for s in &nodes {
            for o in &nodes {
                if let (Some(NodeKind::Setting(i)), Some(NodeKind::Outcome(j))) =
                    (t.kind(s), t.kind(o))
                {
                    if i != j {
                        out.push((s.clone(), o.clone()));
                    }
                }
            }
        }
        out
    }

    /// No pairs, all pairs, and each single pair.
    pub fn ns_variants(t: &CausalTemplate) -> Vec<CausalTemplate> {
        let pairs = legal_ns_pairs(t);
        let mut out = vec![t.clone()];
        if !pairs.is_empty() {
            let mut all = t.clone();
            for (s, o) in &pairs {
                all.add_nosignal(s, o).unwrap();
            }
            out.push(all);
        }
        if pairs.len() > 1 {
            for (s, o) in &pairs {
                let mut one = t.clone();
                one.add_nosignal(s, o).unwrap();
                out.push(one);
            }
        }
        out
    }

    /// Chains, forks and colliders of 2 to 5 nodes in every orientation, with
    /// optional dangling descendant and no-signalling variants.
    pub fn chain_family() -> Vec<CausalTemplate> {
        let kinds = [
            NodeKind::Outcome(0),
            NodeKind::Outcome(1),
            NodeKind::Setting(1),
            NodeKind::Hidden,
        ];
        let mut out = Vec::new();
        for k in 2..=5usize {
            for orient in (0..k - 1).map(|_| [true, false]).multi_cartesian_product() {
                let interiors: Vec<Vec<NodeKind>> = if k == 2 {
                    vec![vec![]]
                } else {
                    (0..k - 2)
                        .map(|_| kinds)
                        .multi_cartesian_product()
                        .collect()
                };
                for inner in &interiors {
                    let hangs: Vec<Option<usize>> =
                        std::iter::once(None).chain((1..k - 1).map(Some)).collect();
                    for hang in hangs {
                        out.extend(ns_variants(&gen::chain(&orient, inner, hang)));
                    }
                }
            }
        }
        out
    }

    /// Two-party diagrams on X, Y, A, B, L, K: every subset of the candidate
    /// edges, with and without an A-B correlation, under each no-signalling set.
    pub fn two_party_family() -> Vec<CausalTemplate> {
        let candidates = [
            ("X", "A"),
            ("Y", "B"),
            ("X", "B"),
            ("Y", "A"),
            ("L", "A"),
            ("L", "B"),
            ("A", "K"),
            ("B", "K"),
        ];
        let mut out = Vec::new();
        for edges in candidates.iter().powerset() {
            for corr in [false, true] {
                for ns in [
                    &[][..],
                    &[("X", "B")],
                    &[("Y", "A")],
                    &[("X", "B"), ("Y", "A")],
                ] {
                    let mut t = CausalTemplate::new("two_party").unwrap();
                    for (l, k) in [
                        ("X", NodeKind::Setting(0)),
                        ("Y", NodeKind::Setting(1)),
                        ("A", NodeKind::Outcome(0)),
                        ("B", NodeKind::Outcome(1)),
                        ("L", NodeKind::Hidden),
                        ("K", NodeKind::Selection),
                    ] {
                        t.add_node(id(l), k).unwrap();
                    }
                    for (a, b) in &edges {
                        t.add_edge(a, b).unwrap();
                    }
                    if corr {
                        t.add_corr("A", "B").unwrap();
                    }
                    for (s, o) in ns {
                        t.add_nosignal(s, o).unwrap();
                    }
                    out.push(t);
                }
            }
        }
        out
    }

    /// Queries checked for each template of [`chain_family`].
    pub fn chain_queries(t: &CausalTemplate) -> Vec<DSepQuery> {
        let last = labels(t).into_iter().rfind(|l| l.starts_with('V')).unwrap();
        let ends: Vec<&str> = ["V0", "D", last.as_str()]
            .into_iter()
            .filter(|l| t.contains(l))
            .collect();
        all_queries(t, &ends)
    }
}

pub mod corpus {
    //! The diagram corpus on disk and the parser fuzz input generator.

    use std::fs;
    use std::path::PathBuf;

    use bellpost::dsl::ParseError;
    use rand::rngs::StdRng;
    use rand::Rng;

    pub fn corpus_dir() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
    }

    /// Named `.cg` documents, sorted by file name.
    pub fn corpus() -> Vec<(String, String)> {
        let mut docs: Vec<(String, String)> = fs::read_dir(corpus_dir())
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "cg"))
            .map(|p| {
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    fs::read_to_string(&p).unwrap(),
                )
            })
            .collect();
        docs.sort();
        docs
    }

    pub fn span_in_bounds(src: &str, e: &ParseError) -> bool {
        let lines: Vec<&str> = src.split('\n').collect();
        e.span.line >= 1
            && e.span.column >= 1
            && !e.message.is_empty()
            && lines
                .get(e.span.line - 1)
                .is_some_and(|l| e.span.column <= l.chars().count() + 1)
    }

    /// Random bytes: half uniform noise, half drawn from DSL fragments, plus
    /// byte-level mutations of corpus documents.
    pub fn fuzz_input(rng: &mut StdRng, corpus: &[(String, String)]) -> Vec<u8> {
        const FRAGMENTS: &[&str] = &[
            "diagram",
            "node",
            "edge",
            "corr",
            "nosignal",
            "dsep",
            "setting(",
            "outcome(",
            "hidden",
            "selection",
            "{",
            "}",
            ";",
            "(",
            ")",
            ",",
            "->",
            "<->",
            "!->",
            "_||_",
            "|",
            "#",
            "\n",
            " ",
            "A",
            "B1",
            "0",
            "9999999999999999999",
            "Λ",
            "\t",
            "-",
            "<",
            "!",
            "_",
        ];
        match rng.gen_range(0..3) {
            0 => (0..rng.gen_range(0..64)).map(|_| rng.gen()).collect(),
            1 => (0..rng.gen_range(0..40))
                .flat_map(|_| FRAGMENTS[rng.gen_range(0..FRAGMENTS.len())].bytes())
                .collect(),
            _ => {
                let mut doc = corpus[rng.gen_range(0..corpus.len())]
                    .1
                    .clone()
                    .into_bytes();
                for _ in 0..rng.gen_range(1..6) {
                    if doc.is_empty() {
                        break;
                    }
                    let at = rng.gen_range(0..doc.len());
                    match rng.gen_range(0..3) {
                        0 => doc[at] = rng.gen(),
                        1 => {
                            doc.remove(at);
                        }
                        _ => doc.insert(at, rng.gen()),
                    }
                }
                doc
            }
        }
    }
}
