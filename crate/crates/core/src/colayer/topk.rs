use super::{check_dim, ActionSpace, ENUMERATION_LIMIT};
use crate::{Error, Result};

/// Subsets of exactly `k` out of `n` items, encoded as 0/1 vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TopKSpace {
    n: usize,
    k: usize,
}

impl TopKSpace {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidSelection { k, n });
        }
        Ok(Self { n, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

impl ActionSpace for TopKSpace {
    fn dim(&self) -> usize {
        self.n
    }

    /// Ones at the `k` largest scores; equal scores favor the lower index.
    fn argmax(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_dim("score vector", self.n, theta.len())?;
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&i, &j| theta[j].total_cmp(&theta[i]).then(i.cmp(&j)));
        let mut a = vec![0.0; self.n];
        for &i in &order[..self.k] {
            a[i] = 1.0;
        }
        Ok(a)
    }

    /// Lexicographic order of the selected index sets.
    fn enumerate(&self) -> Result<Vec<Vec<f64>>> {
        match binomial(self.n, self.k) {
            Some(c) if c <= ENUMERATION_LIMIT => {}
            _ => {
                return Err(Error::EnumerationTooLarge {
                    limit: ENUMERATION_LIMIT,
                })
            }
        }
        let (n, k) = (self.n, self.k);
        let mut out = Vec::new();
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let mut a = vec![0.0; n];
            for &i in &idx {
                a[i] = 1.0;
            }
            out.push(a);
            // advance to the next combination
            let mut pos = k;
            while pos > 0 && idx[pos - 1] == n - k + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            for j in pos..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
        Ok(out)
    }

    fn is_feasible(&self, action: &[f64]) -> bool {
        action.len() == self.n
            && action.iter().all(|&x| x == 0.0 || x == 1.0)
            && action.iter().filter(|&&x| x == 1.0).count() == self.k
    }
}
