use std::collections::{BTreeMap, BTreeSet};

use crate::gateway::{cosine, Embedding};
use crate::graph::{EntityId, GraphError, GraphStore, RelationId};

use super::RetrievalConfig;

/// `(w - c) / (1 - c)`, clamped to [0, 1].
pub fn rescale_weight(w: f64, c: f64) -> f64 {
    ((w - c) / (1.0 - c)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub target: EntityId,
    /// Rescaled weight used for propagation.
    pub weight: f64,
    /// Cosine between the query and the link embedding, before rescaling.
    pub raw_weight: f64,
    pub link: Option<RelationId>,
    /// True for the arc that follows the stored link direction.
    pub forward: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub entity: EntityId,
    /// Best similarity among this entity's matched descriptions.
    pub score: f64,
}

/// Query-time working set: entities, outgoing weighted arcs per entity, and
/// the ordered seed list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Subgraph {
    entities: BTreeSet<EntityId>,
    arcs: BTreeMap<EntityId, Vec<Arc>>,
    seeds: Vec<Seed>,
    labels: BTreeMap<EntityId, String>,
}

impl Subgraph {
    /// Builds a subgraph from explicit directed arcs `(from, to, weight)`.
    /// Seeds are processed in the given order; arc endpoints and seeds are
    /// added to the entity set.
    pub fn from_arcs(
        entities: impl IntoIterator<Item = EntityId>,
        seeds: &[EntityId],
        arcs: &[(EntityId, EntityId, f64)],
    ) -> Self {
        let mut g = Subgraph::default();
        for e in entities.into_iter().chain(seeds.iter().copied()) {
            g.insert_entity(e);
        }
        for &(from, to, weight) in arcs {
            g.insert_entity(from);
            g.insert_entity(to);
            g.arcs.get_mut(&from).expect("inserted").push(Arc {
                target: to,
                weight,
                raw_weight: weight,
                link: None,
                forward: true,
            });
        }
        let mut seen = BTreeSet::new();
        g.seeds = seeds
            .iter()
            .filter(|s| seen.insert(**s))
            .map(|&entity| Seed { entity, score: 1.0 })
            .collect();
        g
    }

    fn insert_entity(&mut self, e: EntityId) {
        self.entities.insert(e);
        self.arcs.entry(e).or_default();
    }

    pub fn entities(&self) -> &BTreeSet<EntityId> {
        &self.entities
    }

    pub fn seeds(&self) -> &[Seed] {
        &self.seeds
    }

    pub fn seed_ids(&self) -> Vec<EntityId> {
        self.seeds.iter().map(|s| s.entity).collect()
    }

    pub fn arcs_from(&self, e: EntityId) -> &[Arc] {
        self.arcs.get(&e).map_or(&[], Vec::as_slice)
    }

    pub fn arcs(&self) -> impl Iterator<Item = (EntityId, &Arc)> {
        self.arcs
            .iter()
            .flat_map(|(from, arcs)| arcs.iter().map(move |a| (*from, a)))
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.values().map(Vec::len).sum()
    }

    pub fn label(&self, e: EntityId) -> String {
        self.labels
            .get(&e)
            .cloned()
            .unwrap_or_else(|| e.to_string())
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Distinct underlying links with their raw (pre-rescale) weight.
    pub fn links(&self) -> BTreeMap<RelationId, f64> {
        self.arcs()
            .filter_map(|(_, a)| a.link.map(|l| (l, a.raw_weight)))
            .collect()
    }
}

/// Seeds from the top-k descriptions, grown to the n-hop neighborhood, with
/// every related_to link materialized as two arcs of equal rescaled weight.
pub fn fetch_subgraph(
    store: &GraphStore,
    query: &Embedding,
    config: &RetrievalConfig,
) -> Result<Subgraph, GraphError> {
    let top = store.top_k_descriptions(query, config.k)?;
    let mut best: BTreeMap<EntityId, f64> = BTreeMap::new();
    for d in &top {
        let slot = best.entry(d.entity).or_insert(f64::NEG_INFINITY);
        *slot = slot.max(d.score);
    }
    let mut seeds: Vec<Seed> = best
        .into_iter()
        .map(|(entity, score)| Seed { entity, score })
        .collect();
    seeds.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.entity.cmp(&b.entity)));

    let seed_ids: Vec<EntityId> = seeds.iter().map(|s| s.entity).collect();
    let hood = store.neighborhood(&seed_ids, config.n);

    let mut g = Subgraph::default();
    for &e in &hood.entities {
        g.insert_entity(e);
        if let Some(node) = store.entity(e) {
            g.labels.insert(e, node.name.clone());
        }
    }
    for &rel in &hood.links {
        let link = store
            .relation(rel)
            .ok_or_else(|| GraphError::NotFound(rel.to_string()))?;
        let raw = cosine(query, &link.embedding)?;
        let weight = rescale_weight(raw, config.c);
        for (from, to, forward) in [
            (link.source, link.target, true),
            (link.target, link.source, false),
        ] {
            g.arcs
                .get_mut(&from)
                .expect("endpoint in neighborhood")
                .push(Arc {
                    target: to,
                    weight,
                    raw_weight: raw,
                    link: Some(rel),
                    forward,
                });
        }
    }
    g.seeds = seeds;
    Ok(g)
}
