//! JSON instance files: an objective plus a p-matchoid constraint.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matroid::{Matroid, MatroidSpec, PMatchoid};
use crate::oracle::{ElementId, Objective, SubmodularOracle};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub p: usize,
    #[serde(default)]
    pub rank: Option<usize>,
    pub matroids: Vec<MatroidSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub n: usize,
    pub objective: Objective,
    pub monotone: bool,
    pub constraint: ConstraintSpec,
}

impl Instance {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn oracle(&self) -> Result<SubmodularOracle> {
        SubmodularOracle::new(self.n, self.objective.clone(), self.monotone)
    }

    pub fn matchoid(&self) -> Result<PMatchoid> {
        let matroids = self
            .constraint
            .matroids
            .iter()
            .cloned()
            .map(Matroid::from_spec)
            .collect::<Result<Vec<_>>>()?;
        for m in &matroids {
            if let Some(&e) = m.ground().iter().find(|e| e.index() >= self.n) {
                return Err(Error::Domain { element: e, n: self.n });
            }
        }
        PMatchoid::new(self.n, self.constraint.p, matroids, self.constraint.rank)
    }

    pub fn build(&self) -> Result<(SubmodularOracle, PMatchoid)> {
        Ok((self.oracle()?, self.matchoid()?))
    }
}

/// Stream order: ascending ids, or one fixed shuffle of them.
pub fn stream_order(n: usize, shuffle_seed: Option<u64>) -> Vec<ElementId> {
    let mut order: Vec<ElementId> = (0..n).map(ElementId::from).collect();
    if let Some(seed) = shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order
}

/// Rejects streams that are not a permutation of `0..n`.
pub fn check_permutation(stream: &[ElementId], n: usize) -> Result<()> {
    let mut seen = HashSet::with_capacity(stream.len());
    for &e in stream {
        if e.index() >= n {
            return Err(Error::Domain { element: e, n });
        }
        if !seen.insert(e) {
            return Err(Error::DuplicateArrival(e));
        }
    }
    if seen.len() != n {
        return Err(Error::Config(format!("stream presents {} of {n} elements", seen.len())));
    }
    Ok(())
}
