use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lcz::NUM_LABELS;

/// Per-patch vote vectors over the 17 labels.
///
/// Unclassified patches (nodata features) hold all-zero votes and are
/// flagged. After fusion the votes are weights rather than counts and no
/// longer sum to the number of trees.
#[derive(Debug, Clone, PartialEq)]
pub struct VotesCube {
    rows: usize,
    cols: usize,
    votes: Vec<f64>,
    classified: Vec<bool>,
}

impl VotesCube {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        VotesCube { rows, cols, votes: vec![0.0; rows * cols * NUM_LABELS], classified: vec![false; rows * cols] }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        let o = (i * self.cols + j) * NUM_LABELS;
        &self.votes[o..o + NUM_LABELS]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let o = (i * self.cols + j) * NUM_LABELS;
        &mut self.votes[o..o + NUM_LABELS]
    }

    pub fn is_classified(&self, i: usize, j: usize) -> bool {
        self.classified[i * self.cols + j]
    }

    pub fn set_classified(&mut self, i: usize, j: usize, v: bool) {
        self.classified[i * self.cols + j] = v;
    }

    pub fn set(&mut self, i: usize, j: usize, votes: &[f64]) -> Result<()> {
        if votes.len() != NUM_LABELS {
            return Err(Error::InvalidParameter("vote vector must have 17 entries".into()));
        }
        if votes.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter("votes must be finite and nonnegative".into()));
        }
        self.get_mut(i, j).copy_from_slice(votes);
        self.set_classified(i, j, votes.iter().any(|v| *v > 0.0));
        Ok(())
    }

    pub fn total(&self, i: usize, j: usize) -> f64 {
        self.get(i, j).iter().sum()
    }

    /// Fraction of patches without votes.
    pub fn unclassified_fraction(&self) -> f64 {
        let n = self.classified.len();
        self.classified.iter().filter(|c| !**c).count() as f64 / n as f64
    }
}
