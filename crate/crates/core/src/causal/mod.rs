//! Causal diagrams with correlated outcomes and no-signalling constraints,
//! and the d-separation machinery that runs on them.

pub mod dag;
pub mod dsep;
pub mod template;

pub use dag::{expand_template, latent_label, Dag, Expansion, NodeSet, NsTable, MAX_DAG_NODES};
pub use dsep::{
    d_separated, enumerate_open_paths, first_open_path, path_blocked, DSepError, DSepQuery,
    OpenPath, PreparedTemplate,
};
pub use template::{is_identifier, CausalTemplate, NodeId, NodeKind, TemplateError};
