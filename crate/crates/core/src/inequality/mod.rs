//! Svetlichny evaluation, no-signalling checks on probability tables, and an
//! exhaustive bound over deterministic hybrid local-nonlocal strategies.

mod hybrid;
mod table;

use serde::Serialize;

pub use hybrid::{
    hybrid_bound_bruteforce, strategies, table_from_strategy_mixture, BoundOptions, BoundResult,
    HybridStrategy, MixtureError, PAIR_RESPONSES, SINGLE_RESPONSES, WEIGHT_TOL,
};
pub use table::{
    bit, default_settings_labels, outcome_pattern, DistributionTable, TableError,
    MAX_TABLE_PARTIES, NEGATIVE_CLAMP, NORMALIZATION_TOL,
};

/// Default tolerance for floating-point comparisons on tables.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NsCheck {
    pub passed: bool,
    /// Largest difference between two marginals that should coincide.
    pub worst: f64,
    /// Human-readable location of `worst`, if any marginal differs at all.
    pub worst_at: Option<String>,
}

/// Checks that for every proper nonempty subset S of parties the marginal
/// `P(a_S | settings)` does not depend on the settings outside S.
pub fn no_signalling_check(t: &DistributionTable, tol: f64) -> NsCheck {
    let n = t.n();
    let m = 1usize << n;
    let mut worst = 0.0f64;
    let mut worst_at = None;
    for mask in 1..m - 1 {
        for s_in in 0..m {
            if s_in & !mask != 0 {
                continue;
            }
            for o_in in 0..m {
                if o_in & !mask != 0 {
                    continue;
                }
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                let mut at_lo = 0;
                let mut at_hi = 0;
                for s_out in 0..m {
                    if s_out & mask != 0 {
                        continue;
                    }
                    let s = s_in | s_out;
                    let marg: f64 = (0..m)
                        .filter(|o| o & mask == o_in)
                        .map(|o| t.prob(s, o))
                        .sum();
                    if marg < lo {
                        lo = marg;
                        at_lo = s;
                    }
                    if marg > hi {
                        hi = marg;
                        at_hi = s;
                    }
                }
                if hi - lo > worst {
                    worst = hi - lo;
                    let parties: Vec<usize> = (0..n)
                        .filter(|&p| bit(mask, p, n) == 1)
                        .map(|p| p + 1)
                        .collect();
                    let outs: String = (0..n)
                        .filter(|&p| bit(mask, p, n) == 1)
                        .map(|p| if bit(o_in, p, n) == 0 { '+' } else { '-' })
                        .collect();
                    worst_at = Some(format!(
                        "marginal of parties {parties:?} at outcomes {outs}: {lo} under ({}) vs {hi} under ({})",
                        t.settings_key(at_lo),
                        t.settings_key(at_hi)
                    ));
                }
            }
        }
    }
    NsCheck {
        passed: worst <= tol,
        worst,
        worst_at,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvetlichnyTerm {
    /// Setting combination, e.g. `x1,y2,z1`.
    pub settings: String,
    pub sign: i8,
    pub correlator: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvetlichnyValue {
    pub value: f64,
    pub terms: Vec<SvetlichnyTerm>,
}

/// Sign of a term: + when at most one party uses its second setting.
pub fn svetlichny_sign(s: usize) -> i8 {
    if s.count_ones() <= 1 {
        1
    } else {
        -1
    }
}

/// `I = |sum over the 8 setting combinations of sign * <abc>|`; hybrid
/// models satisfy `I <= 4`.
pub fn svetlichny_value(t: &DistributionTable) -> Result<SvetlichnyValue, TableError> {
    if t.n() != 3 {
        return Err(TableError::Arity {
            expected: 3,
            got: t.n(),
        });
    }
    let terms: Vec<SvetlichnyTerm> = (0..8)
        .map(|s| SvetlichnyTerm {
            settings: t.settings_key(s),
            sign: svetlichny_sign(s),
            correlator: t.correlator(s),
        })
        .collect();
    let value = terms
        .iter()
        .map(|x| f64::from(x.sign) * x.correlator)
        .sum::<f64>()
        .abs();
    Ok(SvetlichnyValue { value, terms })
}
