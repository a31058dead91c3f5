use super::{check_dim, ActionSpace, ENUMERATION_LIMIT};
use crate::{Error, Result};

/// Permutation vectors `y ∈ σ(n)` with entries `1..=n`.
///
/// `⟨θ|y⟩` is maximized by giving rank `n` to the largest score
/// (rearrangement inequality). Equal scores: the lower index gets the lower
/// rank.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankingSpace {
    n: usize,
}

impl RankingSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSelection { k: 0, n });
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

impl ActionSpace for RankingSpace {
    fn dim(&self) -> usize {
        self.n
    }

    fn argmax(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_dim("score vector", self.n, theta.len())?;
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&i, &j| theta[i].total_cmp(&theta[j]).then(i.cmp(&j)));
        let mut y = vec![0.0; self.n];
        for (rank, &i) in order.iter().enumerate() {
            y[i] = (rank + 1) as f64;
        }
        Ok(y)
    }

    /// Lexicographic order of the rank vectors, starting at `[1, 2, …, n]`.
    fn enumerate(&self) -> Result<Vec<Vec<f64>>> {
        let count = (1..=self.n).try_fold(1usize, |acc, i| acc.checked_mul(i));
        match count {
            Some(c) if c <= ENUMERATION_LIMIT => {}
            _ => {
                return Err(Error::EnumerationTooLarge {
                    limit: ENUMERATION_LIMIT,
                })
            }
        }
        let mut perm: Vec<usize> = (1..=self.n).collect();
        let mut out = Vec::new();
        loop {
            out.push(perm.iter().map(|&r| r as f64).collect());
            if !next_permutation(&mut perm) {
                break;
            }
        }
        Ok(out)
    }

    fn is_feasible(&self, action: &[f64]) -> bool {
        if action.len() != self.n {
            return false;
        }
        let mut seen = vec![false; self.n];
        for &r in action {
            if r.fract() != 0.0 || r < 1.0 || r > self.n as f64 {
                return false;
            }
            let i = r as usize - 1;
            if seen[i] {
                return false;
            }
            seen[i] = true;
        }
        true
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Processing order encoded by a rank vector: highest rank first.
pub fn ranks_to_sequence(ranks: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ranks.len()).collect();
    order.sort_by(|&i, &j| ranks[j].total_cmp(&ranks[i]).then(i.cmp(&j)));
    order
}

/// Inverse of [`ranks_to_sequence`] for a valid job sequence.
pub fn sequence_to_ranks(sequence: &[usize]) -> Vec<f64> {
    let n = sequence.len();
    let mut y = vec![0.0; n];
    for (pos, &j) in sequence.iter().enumerate() {
        y[j] = (n - pos) as f64;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::colayer::{brute_force_argmax, dot};
    use rand::{Rng, SeedableRng};

    #[test]
    fn ranks_by_score() {
        let s = RankingSpace::new(3).unwrap();
        assert_eq!(s.argmax(&[0.1, 0.5, 0.3]).unwrap(), vec![1.0, 3.0, 2.0]);
    }

    #[test]
    fn increasing_scores_give_identity() {
        let s = RankingSpace::new(5).unwrap();
        let theta = [-2.0, -1.0, 0.0, 0.5, 9.0];
        assert_eq!(s.argmax(&theta).unwrap(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn exhaustive_check_small() {
        let s = RankingSpace::new(3).unwrap();
        let all = s.enumerate().unwrap();
        assert_eq!(all.len(), 6);
        let theta = [0.1, 0.5, 0.3];
        let best = brute_force_argmax(&s, &theta).unwrap();
        assert_eq!(best, vec![1.0, 3.0, 2.0]);
    }

    #[test]
    fn zero_scores_return_first_enumerated() {
        let s = RankingSpace::new(4).unwrap();
        let first = s.enumerate().unwrap()[0].clone();
        assert_eq!(brute_force_argmax(&s, &[0.0; 4]).unwrap(), first);
        assert_eq!(s.argmax(&[0.0; 4]).unwrap(), first);
    }

    #[test]
    fn matches_brute_force() {
        let s = RankingSpace::new(5).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let theta: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fast = s.argmax(&theta).unwrap();
            let slow = brute_force_argmax(&s, &theta).unwrap();
            assert!(s.is_feasible(&fast));
            assert_eq!(dot(&theta, &fast), dot(&theta, &slow));
        }
    }

    #[test]
    fn sequence_round_trip() {
        let seq = vec![2, 0, 3, 1];
        assert_eq!(ranks_to_sequence(&sequence_to_ranks(&seq)), seq);
    }

    #[test]
    fn feasibility() {
        let s = RankingSpace::new(3).unwrap();
        assert!(s.is_feasible(&[2.0, 3.0, 1.0]));
        assert!(!s.is_feasible(&[2.0, 2.0, 1.0]));
        assert!(!s.is_feasible(&[0.0, 2.0, 1.0]));
        assert!(!s.is_feasible(&[1.5, 2.0, 1.0]));
    }
}
