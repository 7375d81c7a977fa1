//! Matroid independence oracles and their composition into p-matchoids.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::ElementId;
use crate::state::SolutionState;

/// Largest ground set for which the rank is computed exactly.
pub const MAX_EXACT_RANK_ELEMENTS: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MatroidKind {
    Uniform {
        capacity: usize,
    },
    /// Every ground element lies in exactly one part.
    Partition {
        parts: Vec<Vec<ElementId>>,
        capacities: Vec<usize>,
    },
    /// `edges[j]` is the endpoint pair of `ground[j]`; independent sets are forests.
    Graphic { edges: Vec<(usize, usize)> },
    /// `adjacency[j]` lists the right-hand vertices `ground[j]` may be matched to.
    Transversal { adjacency: Vec<Vec<usize>> },
}

/// Serialized form of a matroid: its ground subset plus kind parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatroidSpec {
    pub ground: Vec<ElementId>,
    #[serde(flatten)]
    pub kind: MatroidKind,
}

#[derive(Clone, Debug)]
pub struct Matroid {
    spec: MatroidSpec,
    position: HashMap<ElementId, usize>,
    // Partition: part index per ground position.
    part_of: Vec<usize>,
    vertex_count: usize,
}

impl Matroid {
    pub fn new(ground: Vec<ElementId>, kind: MatroidKind) -> Result<Self> {
        Self::from_spec(MatroidSpec { ground, kind })
    }

    pub fn uniform(ground: Vec<ElementId>, capacity: usize) -> Self {
        Self::new(ground, MatroidKind::Uniform { capacity }).expect("uniform matroid is always valid")
    }

    pub fn partition(parts: Vec<Vec<ElementId>>, capacities: Vec<usize>) -> Result<Self> {
        let ground = parts.iter().flatten().copied().collect();
        Self::new(ground, MatroidKind::Partition { parts, capacities })
    }

    pub fn from_spec(spec: MatroidSpec) -> Result<Self> {
        let mut position = HashMap::with_capacity(spec.ground.len());
        for (j, &e) in spec.ground.iter().enumerate() {
            if position.insert(e, j).is_some() {
                return Err(Error::Instance(format!(
                    "element {e} listed twice in a matroid ground set"
                )));
            }
        }
        let len = spec.ground.len();
        let mut part_of = Vec::new();
        let mut vertex_count = 0;
        match &spec.kind {
            MatroidKind::Uniform { .. } => {}
            MatroidKind::Partition { parts, capacities } => {
                if parts.len() != capacities.len() {
                    return Err(Error::Instance(
                        "partition matroid needs one capacity per part".into(),
                    ));
                }
                part_of = vec![usize::MAX; len];
                for (pi, part) in parts.iter().enumerate() {
                    for e in part {
                        let j = *position.get(e).ok_or_else(|| {
                            Error::Instance(format!("partition part lists {e} outside the ground"))
                        })?;
                        if part_of[j] != usize::MAX {
                            return Err(Error::Instance(format!("element {e} in two parts")));
                        }
                        part_of[j] = pi;
                    }
                }
                if let Some(j) = part_of.iter().position(|&p| p == usize::MAX) {
                    return Err(Error::Instance(format!(
                        "element {} belongs to no partition part",
                        spec.ground[j]
                    )));
                }
            }
            MatroidKind::Graphic { edges } => {
                if edges.len() != len {
                    return Err(Error::Instance(
                        "graphic matroid needs one edge per ground element".into(),
                    ));
                }
                vertex_count = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
            }
            MatroidKind::Transversal { adjacency } => {
                if adjacency.len() != len {
                    return Err(Error::Instance(
                        "transversal matroid needs one adjacency list per ground element".into(),
                    ));
                }
                vertex_count = adjacency.iter().flatten().map(|&v| v + 1).max().unwrap_or(0);
            }
        }
        Ok(Matroid {
            spec,
            position,
            part_of,
            vertex_count,
        })
    }

    pub fn spec(&self) -> &MatroidSpec {
        &self.spec
    }

    pub fn ground(&self) -> &[ElementId] {
        &self.spec.ground
    }

    pub fn contains(&self, e: ElementId) -> bool {
        self.position.contains_key(&e)
    }

    /// Whether `A ∩ ground` is independent; elements outside the ground are ignored.
    pub fn independent(&self, set: &[ElementId]) -> bool {
        let mut positions: Vec<usize> = set.iter().filter_map(|e| self.position.get(e).copied()).collect();
        positions.sort_unstable();
        positions.dedup();
        match &self.spec.kind {
            MatroidKind::Uniform { capacity } => positions.len() <= *capacity,
            MatroidKind::Partition { capacities, .. } => {
                let mut counts = vec![0usize; capacities.len()];
                positions.iter().all(|&j| {
                    let part = self.part_of[j];
                    counts[part] += 1;
                    counts[part] <= capacities[part]
                })
            }
            MatroidKind::Graphic { edges } => {
                let mut forest = DisjointSets::new(self.vertex_count);
                positions.iter().all(|&j| {
                    let (u, v) = edges[j];
                    forest.union(u, v)
                })
            }
            MatroidKind::Transversal { adjacency } => {
                let mut owner = vec![usize::MAX; self.vertex_count];
                positions.iter().all(|&j| {
                    let mut visited = vec![false; self.vertex_count];
                    augment(j, adjacency, &mut owner, &mut visited)
                })
            }
        }
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False when `u` and `v` are already connected (the edge closes a cycle).
    fn union(&mut self, u: usize, v: usize) -> bool {
        let (ru, rv) = (self.find(u), self.find(v));
        if ru == rv {
            return false;
        }
        self.parent[ru] = rv;
        true
    }
}

// Kuhn's augmenting path step for the transversal matroid.
fn augment(j: usize, adjacency: &[Vec<usize>], owner: &mut [usize], visited: &mut [bool]) -> bool {
    for &v in &adjacency[j] {
        if visited[v] {
            continue;
        }
        visited[v] = true;
        if owner[v] == usize::MAX || augment(owner[v], adjacency, owner, visited) {
            owner[v] = j;
            return true;
        }
    }
    false
}

/// A collection of matroids on subsets of `0..n` where each element belongs
/// to at most `p` of the subsets. A set is feasible iff it is independent in
/// every constituent.
#[derive(Clone, Debug)]
pub struct PMatchoid {
    n: usize,
    p: usize,
    rank: usize,
    matroids: Vec<Matroid>,
    // Matroid indices containing each element, in instance order.
    membership: Vec<Vec<usize>>,
}

impl PMatchoid {
    /// Validates the at-most-`p` membership property. The rank is computed
    /// exactly when `n <= 16` (and must agree with `rank` if one is given);
    /// larger instances must supply it.
    pub fn new(n: usize, p: usize, matroids: Vec<Matroid>, rank: Option<usize>) -> Result<Self> {
        if p == 0 {
            return Err(Error::Instance("p must be positive".into()));
        }
        let mut membership = vec![Vec::new(); n];
        for (mi, m) in matroids.iter().enumerate() {
            for &e in m.ground() {
                if e.index() >= n {
                    return Err(Error::Domain { element: e, n });
                }
                membership[e.index()].push(mi);
            }
        }
        if let Some(e) = membership.iter().position(|ms| ms.len() > p) {
            return Err(Error::Instance(format!(
                "element {e} appears in {} matroids but p = {p}",
                membership[e].len()
            )));
        }
        let mut mp = PMatchoid {
            n,
            p,
            rank: 0,
            matroids,
            membership,
        };
        mp.rank = if n <= MAX_EXACT_RANK_ELEMENTS {
            let exact = mp.exact_rank();
            if let Some(r) = rank {
                if r != exact {
                    return Err(Error::Instance(format!(
                        "supplied rank {r} differs from the exact rank {exact}"
                    )));
                }
            }
            exact
        } else {
            rank.ok_or(Error::Size {
                what: "ground set without supplied rank",
                size: n,
                limit: MAX_EXACT_RANK_ELEMENTS,
            })?
        };
        Ok(mp)
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Size of the largest feasible set.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matroids(&self) -> &[Matroid] {
        &self.matroids
    }

    /// Indices of the matroids whose ground contains `e`.
    pub fn matroids_containing(&self, e: ElementId) -> &[usize] {
        self.membership.get(e.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn feasible(&self, set: &[ElementId]) -> bool {
        self.matroids.iter().all(|m| m.independent(set))
    }

    /// Exact rank by branch-and-bound; limited to `n <= 16`.
    pub fn compute_rank(&self) -> Result<usize> {
        if self.n > MAX_EXACT_RANK_ELEMENTS {
            return Err(Error::Size {
                what: "ground set",
                size: self.n,
                limit: MAX_EXACT_RANK_ELEMENTS,
            });
        }
        Ok(self.exact_rank())
    }

    fn exact_rank(&self) -> usize {
        let ground: Vec<ElementId> = (0..self.n).map(ElementId::from).collect();
        let mut current = Vec::with_capacity(self.n);
        let mut best = 0;
        self.rank_search(&ground, 0, &mut current, &mut best);
        best
    }

    fn rank_search(&self, ground: &[ElementId], next: usize, current: &mut Vec<ElementId>, best: &mut usize) {
        *best = (*best).max(current.len());
        if current.len() + (ground.len() - next) <= *best {
            return;
        }
        for j in next..ground.len() {
            if current.len() + (ground.len() - j) <= *best {
                return;
            }
            current.push(ground[j]);
            if self.feasible(current) {
                self.rank_search(ground, j + 1, current, best);
            }
            current.pop();
        }
    }

    /// The candidate set `C_x` whose removal makes room for `x`.
    ///
    /// For every matroid containing `x` (instance order) in which `S_ℓ + x` is
    /// dependent, the element of `T_ℓ = {y ∈ S_ℓ : S_ℓ - y + x independent}`
    /// with the smallest incremental value is added; ties go to the earliest
    /// arrival. The same element chosen by two matroids is added once.
    pub fn exchange_set(&self, x: ElementId, state: &SolutionState) -> Result<Vec<ElementId>> {
        let mut chosen: Vec<ElementId> = Vec::with_capacity(self.p);
        let mut restricted = Vec::new();
        for &mi in self.matroids_containing(x) {
            let m = &self.matroids[mi];
            restricted.clear();
            restricted.extend(state.entries().iter().map(|en| en.id).filter(|&e| m.contains(e)));
            restricted.push(x);
            if m.independent(&restricted) {
                continue;
            }
            restricted.pop();
            let mut best: Option<(f64, ElementId)> = None;
            let mut probe = restricted.clone();
            for (j, &y) in restricted.iter().enumerate() {
                probe[j] = x;
                if m.independent(&probe) {
                    let nu = state.nu(y).expect("restricted set is drawn from the solution");
                    // entries are in arrival order, so strict < keeps the earliest
                    if best.is_none_or(|(b, _)| nu < b) {
                        best = Some((nu, y));
                    }
                }
                probe[j] = y;
            }
            match best {
                Some((_, y)) => {
                    if !chosen.contains(&y) {
                        chosen.push(y);
                    }
                }
                None => return Err(Error::Infeasible { matroid: mi, element: x }),
            }
        }
        Ok(chosen)
    }
}
