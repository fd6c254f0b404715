//! The validity argument for collective postselection, mechanized as
//! d-separation queries over Bell-scenario causal diagrams.
//!
//! A postselection decided by any `d` of the `n` parties is certified when
//! three families of queries all come out separated: freedom of the settings
//! (condition I), factorization of each hybrid-model subensemble across its
//! bipartition (condition II), and no-signalling of the postselected
//! statistics. Failure to certify is not a proof of invalidity; the report
//! then carries open paths as witnesses.

mod certify;
mod scenario;

pub use certify::{
    certify, check_condition_i, check_condition_ii, check_ns_postselected, Attempt, CertReport,
    ConditionReport, Failure, Overall, QueryRecord, Step, SubensembleReport, Witness,
    NO_ADMISSIBLE_DECIDERS,
};
pub use scenario::{
    build_subensemble_template, BellScenario, Bipartition, PostselectionRule, ScenarioError,
    SubensembleId, HIDDEN_LABEL, SELECTION_LABEL,
};
