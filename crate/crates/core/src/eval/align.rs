/// Monotone matching between predicted and reference terminal positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alignment {
    /// Matched `(pred, ref)` position pairs in increasing order.
    pub pairs: Vec<(usize, usize)>,
    pub pred_len: usize,
    pub ref_len: usize,
}

impl Alignment {
    /// Number of insert/delete operations turning `pred` into `ref`.
    pub fn edits(&self) -> usize {
        self.pred_len + self.ref_len - 2 * self.pairs.len()
    }

    /// For each predicted position, the index of its pair, if aligned.
    pub fn pred_to_pair(&self) -> Vec<Option<usize>> {
        let mut m = vec![None; self.pred_len];
        for (k, (p, _)) in self.pairs.iter().enumerate() {
            m[*p] = Some(k);
        }
        m
    }

    pub fn ref_to_pair(&self) -> Vec<Option<usize>> {
        let mut m = vec![None; self.ref_len];
        for (k, (_, r)) in self.pairs.iter().enumerate() {
            m[*r] = Some(k);
        }
        m
    }

    /// The same alignment seen from the other side.
    pub fn swapped(&self) -> Alignment {
        Alignment {
            pairs: self.pairs.iter().map(|(p, r)| (*r, *p)).collect(),
            pred_len: self.ref_len,
            ref_len: self.pred_len,
        }
    }
}

/// Minimum insert/delete alignment (longest common subsequence). Walking
/// left to right, a match is taken as soon as it lies on some optimal
/// path, so ties resolve towards the earliest match.
pub fn align_terminals<S: AsRef<str>>(pred: &[S], reference: &[S]) -> Alignment {
    let (n, m) = (pred.len(), reference.len());
    // suffix[i][j] = LCS length of pred[i..], reference[j..]
    let mut suffix = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            suffix[i][j] = if pred[i].as_ref() == reference[j].as_ref() {
                suffix[i + 1][j + 1] + 1
            } else {
                suffix[i + 1][j].max(suffix[i][j + 1])
            };
        }
    }
    let mut pairs = Vec::with_capacity(suffix[0][0]);
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if pred[i].as_ref() == reference[j].as_ref() && suffix[i][j] == suffix[i + 1][j + 1] + 1 {
            pairs.push((i, j));
            i += 1;
            j += 1;
        } else if suffix[i + 1][j] >= suffix[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    Alignment {
        pairs,
        pred_len: n,
        ref_len: m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sequences() {
        let a = align_terminals(&["DT", "NN", "VBD"], &["DT", "NN", "VBD"]);
        assert_eq!(a.pairs, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(a.edits(), 0);
    }

    #[test]
    fn one_insert() {
        let a = align_terminals(&["DT", "NN"], &["DT", "JJ", "NN"]);
        assert_eq!(a.pairs, vec![(0, 0), (1, 2)]);
        assert_eq!(a.edits(), 1);
    }

    #[test]
    fn disjoint_tags() {
        let a = align_terminals(&["DT", "NN"], &["VB", "IN"]);
        assert!(a.pairs.is_empty());
        assert_eq!(a.edits(), 4);
    }

    #[test]
    fn ties_prefer_earliest_match() {
        let a = align_terminals(&["NN"], &["NN", "NN"]);
        assert_eq!(a.pairs, vec![(0, 0)]);
    }
}
