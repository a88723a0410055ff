//! Query-time retrieval: subgraph fetching, spreading activation and
//! context assembly.

mod activation;
mod config;
mod context;
mod dot;
mod subgraph;

pub use activation::{spread_activation, Activation, ActivationState};
pub use config::{ConfigError, RetrievalConfig};
pub use context::{assemble_context, Context, ContextDocument, ContextRelation};
pub use dot::{export_activation_dot, node_color};
pub use subgraph::{fetch_subgraph, rescale_weight, Arc, Seed, Subgraph};

use crate::gateway::Embedding;
use crate::graph::{GraphError, GraphStore};

/// Everything one activation-based retrieval produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SaRetrieval {
    pub subgraph: Subgraph,
    pub activation: Activation,
    pub context: Context,
}

/// Fetch, activate and assemble in one call.
pub fn retrieve(
    store: &GraphStore,
    query: &Embedding,
    config: &RetrievalConfig,
) -> Result<SaRetrieval, GraphError> {
    let subgraph = fetch_subgraph(store, query, config)?;
    let activation = spread_activation(&subgraph, config.tau_a);
    let context = assemble_context(
        store,
        &activation.activated,
        &subgraph,
        query,
        config.tau_d,
        config.tau_r,
    )?;
    Ok(SaRetrieval {
        subgraph,
        activation,
        context,
    })
}
