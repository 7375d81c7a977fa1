//! Seeded random instance families.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{ConstraintSpec, Instance};
use crate::matroid::{MatroidKind, MatroidSpec, MAX_EXACT_RANK_ELEMENTS};
use crate::oracle::{ElementId, Objective};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    /// Weighted coverage over `items` items, cardinality constraint `k`.
    CoverageUniform { n: usize, items: usize, k: usize, seed: u64 },
    /// Weighted coverage, elements split round-robin into `parts` parts of capacity `capacity`.
    CoveragePartition {
        n: usize,
        items: usize,
        parts: usize,
        capacity: usize,
        seed: u64,
    },
    /// Edges of a random bipartite graph; a matching constraint (p = 2).
    BipartiteMatching {
        left: usize,
        right: usize,
        edges: usize,
        items: usize,
        seed: u64,
    },
    /// Hyperedges of a random 3-uniform hypergraph; a matching constraint (p = 3).
    #[serde(rename = "3-uniform-hypergraph")]
    Hypergraph3 {
        vertices: usize,
        edges: usize,
        items: usize,
        seed: u64,
    },
    /// Vertices of a random weighted digraph; cut objective under uniform(k).
    DirectedCut { n: usize, arcs: usize, k: usize, seed: u64 },
}

impl GeneratorSpec {
    pub fn family(&self) -> &'static str {
        match self {
            GeneratorSpec::CoverageUniform { .. } => "coverage-uniform",
            GeneratorSpec::CoveragePartition { .. } => "coverage-partition",
            GeneratorSpec::BipartiteMatching { .. } => "bipartite-matching",
            GeneratorSpec::Hypergraph3 { .. } => "3-uniform-hypergraph",
            GeneratorSpec::DirectedCut { .. } => "directed-cut",
        }
    }
}

/// Family names accepted on the command line.
pub const FAMILIES: [&str; 5] = [
    "coverage-uniform",
    "coverage-partition",
    "bipartite-matching",
    "3-uniform-hypergraph",
    "directed-cut",
];

fn weight(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(1..=20) as f64 / 4.0
}

/// Each element covers one to three random items; item weights are multiples of 1/4.
fn coverage(n: usize, items: usize, rng: &mut ChaCha8Rng) -> Objective {
    let items = items.max(1);
    let sets = (0..n)
        .map(|_| {
            let size = rng.gen_range(1..=3.min(items));
            let mut s = sample(rng, items, size).into_vec();
            s.sort_unstable();
            s
        })
        .collect();
    let item_weights = (0..items).map(|_| weight(rng)).collect();
    Objective::Coverage { sets, item_weights }
}

fn ids(range: std::ops::Range<usize>) -> Vec<ElementId> {
    range.map(ElementId::from).collect()
}

/// One capacity-1 matroid per vertex over its incident edges.
fn vertex_matroids(vertices: usize, edge_sets: &[Vec<usize>]) -> Vec<MatroidSpec> {
    (0..vertices)
        .map(|v| {
            let incident: Vec<ElementId> = edge_sets
                .iter()
                .enumerate()
                .filter(|(_, vs)| vs.contains(&v))
                .map(|(j, _)| ElementId::from(j))
                .collect();
            MatroidSpec {
                ground: incident.clone(),
                kind: MatroidKind::Partition {
                    parts: vec![incident],
                    capacities: vec![1],
                },
            }
        })
        .collect()
}

/// Maximum bipartite matching by augmenting paths.
fn max_bipartite_matching(left: usize, right: usize, edges: &[Vec<usize>]) -> usize {
    let mut adj = vec![Vec::new(); left];
    for e in edges {
        adj[e[0]].push(e[1] - left);
    }
    let mut owner = vec![usize::MAX; right];
    fn augment(u: usize, adj: &[Vec<usize>], owner: &mut [usize], seen: &mut [bool]) -> bool {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                if owner[v] == usize::MAX || augment(owner[v], adj, owner, seen) {
                    owner[v] = u;
                    return true;
                }
            }
        }
        false
    }
    (0..left)
        .filter(|&u| augment(u, &adj, &mut owner, &mut vec![false; right]))
        .count()
}

fn distinct_tuples(rng: &mut ChaCha8Rng, universe: usize, count: usize, decode: impl Fn(usize) -> Option<Vec<usize>>) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::with_capacity(count);
    let candidates: Vec<Vec<usize>> = (0..universe).filter_map(decode).collect();
    for j in sample(rng, candidates.len(), count.min(candidates.len())).into_vec() {
        out.push(candidates[j].clone());
    }
    out
}

pub fn generate_instance(spec: &GeneratorSpec) -> Result<Instance> {
    match *spec {
        GeneratorSpec::CoverageUniform { n, items, k, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(Instance {
                n,
                objective: coverage(n, items, &mut rng),
                monotone: true,
                constraint: ConstraintSpec {
                    p: 1,
                    rank: Some(k.min(n)),
                    matroids: vec![MatroidSpec {
                        ground: ids(0..n),
                        kind: MatroidKind::Uniform { capacity: k },
                    }],
                },
            })
        }
        GeneratorSpec::CoveragePartition {
            n,
            items,
            parts,
            capacity,
            seed,
        } => {
            if parts == 0 {
                return Err(Error::Config("partition family needs at least one part".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let groups: Vec<Vec<ElementId>> =
                (0..parts).map(|q| (q..n).step_by(parts).map(ElementId::from).collect()).collect();
            let rank = groups.iter().map(|g| g.len().min(capacity)).sum();
            Ok(Instance {
                n,
                objective: coverage(n, items, &mut rng),
                monotone: true,
                constraint: ConstraintSpec {
                    p: 1,
                    rank: Some(rank),
                    matroids: vec![MatroidSpec {
                        ground: ids(0..n),
                        kind: MatroidKind::Partition {
                            parts: groups,
                            capacities: vec![capacity; parts],
                        },
                    }],
                },
            })
        }
        GeneratorSpec::BipartiteMatching {
            left,
            right,
            edges,
            items,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs = distinct_tuples(&mut rng, left * right, edges, |c| Some(vec![c / right, left + c % right]));
            let n = pairs.len();
            Ok(Instance {
                n,
                objective: coverage(n, items, &mut rng),
                monotone: true,
                constraint: ConstraintSpec {
                    p: 2,
                    rank: Some(max_bipartite_matching(left, right, &pairs)),
                    matroids: vertex_matroids(left + right, &pairs),
                },
            })
        }
        GeneratorSpec::Hypergraph3 {
            vertices,
            edges,
            items,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = vertices;
            let triples = distinct_tuples(&mut rng, v * v * v, edges, |c| {
                let (a, b, d) = (c / (v * v), (c / v) % v, c % v);
                (a < b && b < d).then(|| vec![a, b, d])
            });
            let n = triples.len();
            // exact rank for small instances, otherwise the vertex-count bound
            let rank = (n > MAX_EXACT_RANK_ELEMENTS).then(|| n.min(v / 3));
            Ok(Instance {
                n,
                objective: coverage(n, items, &mut rng),
                monotone: true,
                constraint: ConstraintSpec {
                    p: 3,
                    rank,
                    matroids: vertex_matroids(v, &triples),
                },
            })
        }
        GeneratorSpec::DirectedCut { n, arcs, k, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs = distinct_tuples(&mut rng, n * n, arcs, |c| (c / n != c % n).then(|| vec![c / n, c % n]));
            let arcs = pairs.iter().map(|a| (a[0], a[1], weight(&mut rng))).collect();
            Ok(Instance {
                n,
                objective: Objective::DirectedCut { arcs },
                monotone: false,
                constraint: ConstraintSpec {
                    p: 1,
                    rank: Some(k.min(n)),
                    matroids: vec![MatroidSpec {
                        ground: ids(0..n),
                        kind: MatroidKind::Uniform { capacity: k },
                    }],
                },
            })
        }
    }
}
