//! Deterministic three-party hybrid strategies: one party answers locally,
//! the other two answer jointly with an arbitrary (possibly signalling)
//! function of both of their settings.
//!
//! A hybrid model is a convex mixture over bipartitions of products of a
//! local factor and a bipartite factor. Each factor is itself a mixture of
//! deterministic response functions, and the Svetlichny expression is linear
//! in the table, so its maximum over hybrid models is attained at one of the
//! finitely many deterministic strategies enumerated here.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::svetlichny_sign;
use super::table::{bit, default_settings_labels, DistributionTable, TableError};
use crate::postselection::Bipartition;

/// Deterministic functions from two binary settings to two binary outcomes.
pub const PAIR_RESPONSES: usize = 256;
/// Deterministic functions from one binary setting to one binary outcome.
pub const SINGLE_RESPONSES: usize = 4;

/// Weights of a mixture must sum to one within this tolerance.
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct HybridStrategy {
    /// `group1` holds the local party, `group2` the pair.
    bipartition: Bipartition,
    /// Indexed by the pair's settings `(s_p << 1) | s_q`, yielding
    /// `(o_p << 1) | o_q`, with `p < q`; outcome bit 1 means -1.
    pair_response: [u8; 4],
    /// Local party's outcome bit per own setting.
    single_response: [u8; 2],
}

impl HybridStrategy {
    /// `single` is the local party; codes are read as base-4 digits
    /// (`pair_code`) and bits (`single_code`), least significant first.
    pub fn new(single: usize, pair_code: usize, single_code: usize) -> Self {
        assert!(single < 3 && pair_code < PAIR_RESPONSES && single_code < SINGLE_RESPONSES);
        let mut pair_response = [0u8; 4];
        for (i, r) in pair_response.iter_mut().enumerate() {
            *r = ((pair_code >> (2 * i)) & 3) as u8;
        }
        Self {
            bipartition: Bipartition::new(3, [single]).expect("a single party splits three"),
            pair_response,
            single_response: [(single_code & 1) as u8, ((single_code >> 1) & 1) as u8],
        }
    }

    /// Fully local strategy from per-party outcome bits `[party][setting]`.
    pub fn local(responses: [[u8; 2]; 3]) -> Self {
        let mut pair_response = [0u8; 4];
        for (i, r) in pair_response.iter_mut().enumerate() {
            *r = (responses[1][i >> 1] << 1) | responses[2][i & 1];
        }
        Self {
            bipartition: Bipartition::new(3, [0]).expect("valid"),
            pair_response,
            single_response: responses[0],
        }
    }

    pub fn bipartition(&self) -> &Bipartition {
        &self.bipartition
    }

    fn single(&self) -> usize {
        *self
            .bipartition
            .group1()
            .iter()
            .next()
            .expect("one local party")
    }

    fn pair(&self) -> (usize, usize) {
        let mut it = self.bipartition.group2().iter();
        (*it.next().expect("pair"), *it.next().expect("pair"))
    }

    /// Whether each pair member's outcome depends only on its own setting.
    pub fn pair_is_nonsignalling(&self) -> bool {
        let r = &self.pair_response;
        // o_p unchanged by s_q, o_q unchanged by s_p
        (r[0] >> 1 == r[1] >> 1)
            && (r[2] >> 1 == r[3] >> 1)
            && (r[0] & 1 == r[2] & 1)
            && (r[1] & 1 == r[3] & 1)
    }

    /// Outcome combination index for a setting combination index.
    pub fn outcome(&self, s: usize) -> usize {
        let (l, (p, q)) = (self.single(), self.pair());
        let mut bits = [0usize; 3];
        bits[l] = self.single_response[bit(s, l, 3)] as usize;
        let r = self.pair_response[(bit(s, p, 3) << 1) | bit(s, q, 3)] as usize;
        bits[p] = r >> 1;
        bits[q] = r & 1;
        (bits[0] << 2) | (bits[1] << 1) | bits[2]
    }

    /// Svetlichny value in exact integer arithmetic.
    pub fn svetlichny_exact(&self) -> i32 {
        (0..8)
            .map(|s| {
                let parity = if self.outcome(s).count_ones().is_multiple_of(2) {
                    1
                } else {
                    -1
                };
                i32::from(svetlichny_sign(s)) * parity
            })
            .sum::<i32>()
            .abs()
    }

    /// Induced deterministic table with default setting labels.
    pub fn table(&self) -> DistributionTable {
        DistributionTable::from_fn(3, default_settings_labels(3), |s| {
            let mut row = vec![0.0; 8];
            row[self.outcome(s)] = 1.0;
            row
        })
        .expect("deterministic rows are normalized")
    }
}

impl fmt::Display for HybridStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels = default_settings_labels(3);
        let party = ["A", "B", "C"];
        let sign = |b: u8| if b == 0 { "+1" } else { "-1" };
        let (l, (p, q)) = (self.single(), self.pair());
        write!(f, "local {}:", party[l])?;
        for (s, o) in self.single_response.iter().enumerate() {
            write!(f, " {}->{}", labels[l][s], sign(*o))?;
        }
        write!(f, "; pair {}{}:", party[p], party[q])?;
        for (i, r) in self.pair_response.iter().enumerate() {
            write!(
                f,
                " ({},{})->({},{})",
                labels[p][i >> 1],
                labels[q][i & 1],
                sign(r >> 1),
                sign(r & 1)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BoundOptions {
    /// Only fully local strategies (64 of them).
    pub local_only: bool,
    /// Only pair responses in which neither member signals to the other.
    pub nosignalling_pairs: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundResult {
    pub max: i32,
    /// First maximizer in enumeration order.
    pub argmax: HybridStrategy,
    pub evaluated: usize,
}

/// Every deterministic strategy admitted by `opts`, in enumeration order:
/// local party A, B, C; then pair code; then single code.
pub fn strategies(opts: BoundOptions) -> Vec<HybridStrategy> {
    let mut out = Vec::new();
    if opts.local_only {
        for code in 0..64usize {
            let bits = |k: usize| {
                [
                    ((code >> (2 * k)) & 1) as u8,
                    ((code >> (2 * k + 1)) & 1) as u8,
                ]
            };
            out.push(HybridStrategy::local([bits(0), bits(1), bits(2)]));
        }
        return out;
    }
    for single in 0..3 {
        for pair in 0..PAIR_RESPONSES {
            for sc in 0..SINGLE_RESPONSES {
                let h = HybridStrategy::new(single, pair, sc);
                if !opts.nosignalling_pairs || h.pair_is_nonsignalling() {
                    out.push(h);
                }
            }
        }
    }
    out
}

/// Exhaustive maximum of the Svetlichny value over deterministic hybrid
/// strategies.
pub fn hybrid_bound_bruteforce(opts: BoundOptions) -> BoundResult {
    let all = strategies(opts);
    let evaluated = all.len();
    let mut best: Option<(i32, HybridStrategy)> = None;
    for h in all {
        let v = h.svetlichny_exact();
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, h));
        }
    }
    let (max, argmax) = best.expect("strategy set is nonempty");
    BoundResult {
        max,
        argmax,
        evaluated,
    }
}

#[derive(Debug, Error)]
pub enum MixtureError {
    #[error("a mixture needs at least one component")]
    Empty,
    #[error("weight {0} is negative or not finite")]
    BadWeight(f64),
    #[error("weights sum to {0}, not 1")]
    WeightSum(f64),
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Convex combination of the strategies' deterministic tables.
pub fn table_from_strategy_mixture(
    weights: &[(f64, HybridStrategy)],
) -> Result<DistributionTable, MixtureError> {
    if weights.is_empty() {
        return Err(MixtureError::Empty);
    }
    if let Some((w, _)) = weights.iter().find(|(w, _)| !w.is_finite() || *w < 0.0) {
        return Err(MixtureError::BadWeight(*w));
    }
    let total: f64 = weights.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(MixtureError::WeightSum(total));
    }
    Ok(DistributionTable::from_fn(
        3,
        default_settings_labels(3),
        |s| {
            let mut row = vec![0.0; 8];
            for (w, h) in weights {
                row[h.outcome(s)] += w;
            }
            row
        },
    )?)
}
