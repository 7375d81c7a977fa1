#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use matchoid_stream::generate::{generate_instance, GeneratorSpec};
use matchoid_stream::instance::Instance;
use matchoid_stream::matroid::PMatchoid;
use matchoid_stream::oracle::{subset_from_mask, ElementId, SubmodularOracle};
use matchoid_stream::pass::PassResult;

pub const TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    CoverageUniform,
    Bipartite,
    Hypergraph,
    DirectedCut,
}

/// Random generator spec of the family with at most 14 elements.
pub fn random_spec(family: Family, seed: u64) -> GeneratorSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    match family {
        Family::CoverageUniform => GeneratorSpec::CoverageUniform {
            n: rng.gen_range(6..=14),
            items: rng.gen_range(6..=16),
            k: rng.gen_range(1..=5),
            seed,
        },
        Family::Bipartite => {
            let left = rng.gen_range(2..=5);
            let right = rng.gen_range(2..=5);
            GeneratorSpec::BipartiteMatching {
                left,
                right,
                edges: rng.gen_range(4..=14usize).min(left * right),
                items: rng.gen_range(6..=16),
                seed,
            }
        }
        Family::Hypergraph => GeneratorSpec::Hypergraph3 {
            vertices: rng.gen_range(6..=9),
            edges: rng.gen_range(4..=14),
            items: rng.gen_range(6..=16),
            seed,
        },
        Family::DirectedCut => {
            let n = rng.gen_range(5..=12);
            GeneratorSpec::DirectedCut {
                n,
                arcs: rng.gen_range(n..=3 * n),
                k: rng.gen_range(1..=4),
                seed,
            }
        }
    }
}

pub fn corpus(family: Family, count: usize, base_seed: u64) -> Vec<Instance> {
    (0..count as u64)
        .map(|i| generate_instance(&random_spec(family, base_seed + i)).expect("generated instance is valid"))
        .collect()
}

/// Maximum of `f` over feasible subsets of `candidates` by plain enumeration of
/// every bitmask, without pruning.
pub fn enumerate_opt(f: &SubmodularOracle, mp: &PMatchoid, candidates: &[ElementId]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for mask in 0u64..(1 << candidates.len()) {
        let set: Vec<ElementId> = subset_from_mask(mask, candidates.len())
            .into_iter()
            .map(|j| candidates[j.index()])
            .collect();
        if mp.feasible(&set) {
            best = best.max(f.value(&set).unwrap());
        }
    }
    best
}

/// `β Σχ <= f(S̃) - f(S_init)`, and `|Ã| <= f(OPT)/α` when `α > 0`.
pub fn check_pass_accounting(r: &PassResult, opt: f64) -> Result<(), String> {
    let lhs = r.params.beta * r.eviction_sum();
    let rhs = r.f_final - r.f_init;
    if lhs > rhs + TOL {
        return Err(format!("beta * sum chi = {lhs} exceeds f gain {rhs}"));
    }
    if r.params.alpha > 0.0 {
        let bound = opt / r.params.alpha;
        if r.accepted.len() as f64 > bound + TOL {
            return Err(format!("{} accepted exceeds f(OPT)/alpha = {bound}", r.accepted.len()));
        }
    }
    Ok(())
}
