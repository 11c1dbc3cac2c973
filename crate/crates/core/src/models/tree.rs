use crate::error::{HistoriesError, Result};
use crate::operator::DEFAULT_ALG_TOL;

/// An M-ary tree of depth N: every vertex has one incoming and M outgoing
/// edges, and level `k` carries the transition weights for trial `k + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchTree {
    branching: usize,
    levels: Vec<Vec<f64>>,
}

impl BranchTree {
    /// The same weights at every level.
    pub fn uniform(depth: usize, weights: Vec<f64>) -> Result<Self> {
        if depth == 0 {
            return Err(HistoriesError::Validation("tree depth must be positive".into()));
        }
        Self::per_level(vec![weights; depth])
    }

    pub fn per_level(levels: Vec<Vec<f64>>) -> Result<Self> {
        let branching = levels
            .first()
            .map(Vec::len)
            .ok_or_else(|| HistoriesError::Validation("tree needs at least one level".into()))?;
        if branching == 0 {
            return Err(HistoriesError::Validation("branching must be positive".into()));
        }
        for (k, level) in levels.iter().enumerate() {
            if level.len() != branching {
                return Err(HistoriesError::dimension(
                    format!("{branching} weights"),
                    format!("{} weights at level {k}", level.len()),
                ));
            }
            if level.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(HistoriesError::Validation(format!(
                    "level {k} has a negative or non-finite weight"
                )));
            }
            let sum: f64 = level.iter().sum();
            if (sum - 1.0).abs() > DEFAULT_ALG_TOL {
                return Err(HistoriesError::Validation(format!(
                    "level {k} weights sum to {sum}, expected 1"
                )));
            }
        }
        Ok(BranchTree { branching, levels })
    }

    pub fn equiprobable(depth: usize, branching: usize) -> Result<Self> {
        if branching == 0 {
            return Err(HistoriesError::Validation("branching must be positive".into()));
        }
        Self::uniform(depth, vec![1.0 / branching as f64; branching])
    }

    /// Yes/no trials with probability `p` for outcome 0.
    pub fn bernoulli(depth: usize, p: f64) -> Result<Self> {
        Self::uniform(depth, vec![p, 1.0 - p])
    }

    /// Two successive equiprobable divisions.
    pub fn two_stage_division() -> Self {
        Self::equiprobable(2, 2).expect("valid tree")
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn branching(&self) -> usize {
        self.branching
    }

    pub fn level(&self, k: usize) -> Option<&[f64]> {
        self.levels.get(k).map(Vec::as_slice)
    }

    /// The shared per-level weights, if every level is the same.
    pub fn uniform_weights(&self) -> Option<&[f64]> {
        let first = &self.levels[0];
        self.levels.iter().all(|l| l == first).then_some(first.as_slice())
    }

    /// Product of edge weights along `path`.
    pub fn history_measure(&self, path: &[usize]) -> Result<f64> {
        if path.len() != self.depth() {
            return Err(HistoriesError::dimension(
                format!("path of length {}", self.depth()),
                path.len(),
            ));
        }
        path.iter()
            .enumerate()
            .try_fold(1.0, |acc, (k, &o)| match self.levels[k].get(o) {
                Some(w) => Ok(acc * w),
                None => Err(HistoriesError::IndexOutOfRange {
                    position: k,
                    index: o,
                    outcomes: self.branching,
                }),
            })
    }

    /// All root-to-leaf paths, earliest level varying slowest.
    pub fn paths(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let total = self.branching.checked_pow(self.depth() as u32).unwrap_or(usize::MAX);
        (0..total).map(move |mut code| {
            let mut path = vec![0; self.depth()];
            for slot in path.iter_mut().rev() {
                *slot = code % self.branching;
                code /= self.branching;
            }
            path
        })
    }
}

pub fn tree_history_measure(tree: &BranchTree, path: &[usize]) -> Result<f64> {
    tree.history_measure(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unequal_single_division() {
        let tree = BranchTree::uniform(1, vec![0.99, 0.01]).unwrap();
        assert_eq!(tree.history_measure(&[1]).unwrap(), 0.01);
        assert_eq!(tree.history_measure(&[0]).unwrap(), 0.99);
    }

    #[test]
    fn uniform_binary_paths() {
        let tree = BranchTree::equiprobable(3, 2).unwrap();
        for path in tree.paths() {
            assert_eq!(tree.history_measure(&path).unwrap(), 0.125);
        }
        assert_eq!(tree.paths().count(), 8);
    }

    #[test]
    fn two_stage_division_gives_a_quarter() {
        let tree = BranchTree::two_stage_division();
        assert_eq!(tree.history_measure(&[0, 0]).unwrap(), 0.25);
    }

    #[test]
    fn path_measures_sum_to_one() {
        let tree = BranchTree::per_level(vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.1, 0.3]]).unwrap();
        let total: f64 = tree.paths().map(|p| tree.history_measure(&p).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_paths_and_weights() {
        let tree = BranchTree::bernoulli(2, 0.3).unwrap();
        assert!(tree.history_measure(&[0]).is_err());
        assert!(tree.history_measure(&[0, 2]).is_err());
        assert!(BranchTree::uniform(2, vec![0.5, 0.6]).is_err());
        assert!(BranchTree::uniform(2, vec![1.2, -0.2]).is_err());
        assert!(BranchTree::per_level(vec![vec![1.0], vec![0.5, 0.5]]).is_err());
        assert!(BranchTree::uniform(0, vec![1.0]).is_err());
    }

    #[test]
    fn uniform_detection() {
        assert!(BranchTree::bernoulli(3, 0.4).unwrap().uniform_weights().is_some());
        let mixed = BranchTree::per_level(vec![vec![0.5, 0.5], vec![0.9, 0.1]]).unwrap();
        assert!(mixed.uniform_weights().is_none());
    }
}
