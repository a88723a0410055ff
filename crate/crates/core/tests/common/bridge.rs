//! A hand-built 12-entity graph in which the answer-bearing document is
//! reachable only through a two-hop chain of entities.
//!
//! Every vector is `normalize(s * q + b + sqrt(1 - s^2) * u_i)`: `q` is the
//! query's content axis, `b` a baseline axis shared by all texts and `u_i` an
//! axis unique to the text. The query is `normalize(q + b)`, so the cosine of
//! any stored text to the query is `(s + 1) / 2`, and a text with `s = 0`
//! carries no content similarity at all, only the shared baseline of 0.5.

use sarag::gateway::{Embedding, MockGateway};
use sarag::graph::{DocumentId, EntityId, EntityType, GraphStore};

pub const QUERY: &str =
    "Which river flows through the birthplace of the author of The Glass Orchard?";

pub const DIM: usize = 40;
const QUERY_AXIS: usize = 0;
const BASELINE_AXIS: usize = 1;

/// Index of the entity two hops from the nearest seed.
pub const BRIDGE_ENTITY: EntityId = EntityId(2);
/// Index of the document that names the answer.
pub const BRIDGE_DOCUMENT: DocumentId = DocumentId(2);

const ENTITIES: [(&str, EntityType, &str, f64); 12] = [
    (
        "The Glass Orchard",
        EntityType::Misc,
        "The Glass Orchard is a novel.",
        0.9,
    ),
    (
        "Mira Solen",
        EntityType::Person,
        "Mira Solen is a novelist.",
        0.2,
    ),
    ("Tarnwick", EntityType::Gpe, "Tarnwick is a mill town.", 0.0),
    ("Alde", EntityType::Gpe, "Alde is a stream.", 0.0),
    (
        "Orchard Press",
        EntityType::Organization,
        "Orchard Press is a publisher of glass and orchard books.",
        0.7,
    ),
    (
        "Crystal Flow",
        EntityType::Misc,
        "Crystal Flow is a river cruise.",
        0.6,
    ),
    (
        "Glassmakers Guild",
        EntityType::Organization,
        "The Glassmakers Guild is a glass trade body.",
        0.5,
    ),
    (
        "Pell River",
        EntityType::Gpe,
        "The Pell River is a river.",
        0.5,
    ),
    (
        "Authors Society",
        EntityType::Organization,
        "The Authors Society is a club for authors.",
        0.4,
    ),
    ("Hesk", EntityType::Gpe, "Hesk is a district.", 0.0),
    ("Jon Arle", EntityType::Person, "Jon Arle is a critic.", 0.1),
    (
        "Bram Tull",
        EntityType::Person,
        "Bram Tull is a glassblower.",
        0.1,
    ),
];

const RELATIONS: [(u32, u32, &str, f64); 11] = [
    (1, 0, "wrote", 0.9),
    (1, 2, "was born in", 0.8),
    (2, 3, "lies on", 0.2),
    (4, 0, "published", 0.5),
    (5, 7, "sails on", 0.3),
    (11, 6, "founded", -0.2),
    (2, 9, "is in", 0.0),
    (10, 8, "belongs to", 0.1),
    (6, 9, "is based in", 0.0),
    (7, 9, "flows through", 0.4),
    (8, 1, "honoured", 0.3),
];

pub const DOCUMENTS: [(&str, f64, &[u32]); 10] = [
    (
        "The Glass Orchard is a novel issued by Orchard Press.",
        0.8,
        &[0, 4],
    ),
    (
        "Mira Solen wrote The Glass Orchard and essays on the craft of an author.",
        0.5,
        &[1, 0],
    ),
    (
        "Tarnwick, a mill town in Hesk, sits beside its old weirs on Alde water.",
        0.0,
        &[2, 9, 3],
    ),
    (
        "Crystal Flow is a river cruise that flows past glass studios.",
        0.7,
        &[5, 7],
    ),
    (
        "The Pell River flows through farmland in Hesk.",
        0.6,
        &[7, 9],
    ),
    ("The Glassmakers Guild trains glass artisans.", 0.55, &[6]),
    (
        "The Authors Society awards a prize to a debut author each year.",
        0.45,
        &[8],
    ),
    ("Jon Arle is an author and critic.", 0.4, &[10, 8]),
    ("Bram Tull founded the Glassmakers Guild.", 0.1, &[11, 6]),
    ("Hesk is a rural district.", -0.3, &[9]),
];

fn with_similarity(s: f64, unique_axis: usize) -> Embedding {
    let mut v = vec![0.0; DIM];
    v[QUERY_AXIS] = s;
    v[BASELINE_AXIS] = 1.0;
    v[unique_axis] = (1.0 - s * s).sqrt();
    Embedding::normalized(v).unwrap()
}

fn query_vector() -> Vec<f64> {
    let mut v = vec![0.0; DIM];
    v[QUERY_AXIS] = 1.0;
    v[BASELINE_AXIS] = 1.0;
    v
}

/// Mock gateway that embeds [`QUERY`] to the pinned query vector.
pub fn gateway() -> MockGateway {
    let mut g = MockGateway::embeddings_only(DIM);
    g.pin(QUERY, query_vector());
    g
}

pub fn query_embedding() -> Embedding {
    Embedding::normalized(query_vector()).unwrap()
}

/// The fixture graph. With `orthogonal_bridge`, the bridge document's
/// vector is a bare unique axis instead, so its cosine to the query is 0.
pub fn store(orthogonal_bridge: bool) -> GraphStore {
    let mut axes = 2..;
    let mut next = || axes.next().unwrap();
    let mut s = GraphStore::new();
    for (name, ty, description, sim) in ENTITIES {
        let id = s.upsert_entity(name, ty, &[]).unwrap().id;
        s.add_description(id, description, with_similarity(sim, next()))
            .unwrap();
    }
    for (from, to, relation, sim) in RELATIONS {
        s.add_relation(
            EntityId(from),
            EntityId(to),
            relation,
            with_similarity(sim, next()),
        )
        .unwrap();
    }
    for (i, (text, sim, mentions)) in DOCUMENTS.iter().enumerate() {
        let axis = next();
        let embedding = if orthogonal_bridge && DocumentId(i as u32) == BRIDGE_DOCUMENT {
            let mut v = vec![0.0; DIM];
            v[axis] = 1.0;
            Embedding::normalized(v).unwrap()
        } else {
            with_similarity(*sim, axis)
        };
        let mentioned: Vec<EntityId> = mentions.iter().map(|&e| EntityId(e)).collect();
        s.add_document(&format!("doc{i}"), 0, text, embedding, &mentioned)
            .unwrap();
    }
    s
}

/// Lowercased alphanumeric words.
pub fn words(text: &str) -> std::collections::BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Shortest related_to distance (either direction) from any of `seeds`.
pub fn hops_from(store: &GraphStore, seeds: &[EntityId], target: EntityId) -> Option<usize> {
    let mut dist = vec![None; store.entities().len()];
    let mut frontier: Vec<EntityId> = seeds.to_vec();
    for &s in seeds {
        dist[s.index()] = Some(0);
    }
    let mut d = 0;
    while !frontier.is_empty() {
        d += 1;
        let mut next = Vec::new();
        for e in frontier {
            for r in store.relations() {
                let other = if r.source == e {
                    r.target
                } else if r.target == e {
                    r.source
                } else {
                    continue;
                };
                if dist[other.index()].is_none() {
                    dist[other.index()] = Some(d);
                    next.push(other);
                }
            }
        }
        frontier = next;
    }
    dist[target.index()]
}
