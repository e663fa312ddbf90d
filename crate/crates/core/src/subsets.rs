//! The family `r([k])` of nonempty subsets of `{1..k}` in canonical order.
//!
//! Subsets are bitmasks over `0..k` (bit `i` stands for element `i + 1`). The
//! canonical order sorts by cardinality first and then lexicographically on the
//! sorted elements, so the singletons come first (in order `{1}, …, {k}`) and
//! `[k]` itself is last. Every tensor in the crate is flattened along this order.

use crate::error::{Error, Result};

pub type Subset = u32;

pub const MAX_ARITY: usize = 8;

/// Which part of `r([k])` to list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `r([k])`.
    Full,
    /// `r_<([k])`, everything except `[k]`.
    Proper,
    /// `r([k], j)`, subsets of size at most `j`.
    Bounded(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetIndex {
    k: usize,
    order: Vec<Subset>,
    position: Vec<usize>,
}

impl SubsetIndex {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroArity);
        }
        if k > MAX_ARITY {
            return Err(Error::ArityTooLarge(k));
        }
        let mut order: Vec<Subset> = (1..(1u32 << k)).collect();
        order.sort_by_key(|&s| (s.count_ones(), members(s)));
        let mut position = vec![usize::MAX; 1 << k];
        for (i, &s) in order.iter().enumerate() {
            position[s as usize] = i;
        }
        Ok(SubsetIndex { k, order, position })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `|r([k])| = 2^k - 1`.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// `|r_<([k])|`; these occupy positions `0..lower_len()`.
    pub fn lower_len(&self) -> usize {
        self.order.len() - 1
    }

    pub fn top(&self) -> usize {
        self.order.len() - 1
    }

    pub fn order(&self) -> &[Subset] {
        &self.order
    }

    pub fn subset(&self, pos: usize) -> Subset {
        self.order[pos]
    }

    pub fn position(&self, s: Subset) -> usize {
        self.position[s as usize]
    }

    /// Position of the singleton `{i + 1}`.
    pub fn singleton(&self, i: usize) -> usize {
        i
    }

    /// Positions of `r_<(S)` for the subset at `pos`, in canonical order.
    pub fn lower_positions(&self, pos: usize) -> Vec<usize> {
        let s = self.order[pos];
        (0..pos)
            .filter(|&p| {
                let t = self.order[p];
                t & s == t && t != s
            })
            .collect()
    }

    /// Positions of `r(S)`, i.e. `r_<(S)` followed by `S` itself.
    pub fn closure_positions(&self, pos: usize) -> Vec<usize> {
        let mut v = self.lower_positions(pos);
        v.push(pos);
        v
    }

    /// For `σ` given in one-line notation on `0..k`, returns `src` with
    /// `(σ̃·c)[p] = c[src[p]]`, i.e. `src[pos(S)] = pos(σ⁻¹(S))`.
    pub fn induced(&self, sigma: &[usize]) -> Vec<usize> {
        let mut inv = vec![0usize; self.k];
        for (i, &j) in sigma.iter().enumerate() {
            inv[j] = i;
        }
        self.order
            .iter()
            .map(|&s| {
                let mapped = members(s).into_iter().fold(0u32, |acc, e| acc | (1 << inv[e]));
                self.position(mapped)
            })
            .collect()
    }

    /// `induced` for every `σ ∈ S_k`, in lexicographic order of `σ`.
    pub fn all_induced(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        crate::perm::all_permutations(self.k)
            .into_iter()
            .map(|s| {
                let ind = self.induced(&s);
                (s, ind)
            })
            .collect()
    }

    pub fn family(&self, mode: Family) -> Result<Vec<Vec<usize>>> {
        let bound = match mode {
            Family::Full => self.k,
            Family::Proper => self.k - 1,
            Family::Bounded(j) => {
                if j == 0 || j > self.k {
                    return Err(Error::InvalidArgument(format!("bound {j} outside 1..={}", self.k)));
                }
                j
            }
        };
        Ok(self
            .order
            .iter()
            .filter(|s| s.count_ones() as usize <= bound)
            .map(|&s| members(s).into_iter().map(|e| e + 1).collect())
            .collect())
    }
}

/// 0-based elements of a mask, ascending.
pub fn members(s: Subset) -> Vec<usize> {
    (0..32).filter(|&i| s & (1 << i) != 0).collect()
}

/// `r([k])`, `r_<([k])` or `r([k], j)` as 1-based sets in canonical order.
pub fn subset_family(k: usize, mode: Family) -> Result<Vec<Vec<usize>>> {
    SubsetIndex::new(k)?.family(mode)
}

/// All `j`-subsets of `{1..n}` as sorted 1-based vectors, in lexicographic order.
pub fn k_subsets(n: usize, j: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if j > n {
        return out;
    }
    if j == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut cur: Vec<usize> = (1..=j).collect();
    loop {
        out.push(cur.clone());
        let mut i = j;
        while i > 0 && cur[i - 1] == n - j + i {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        cur[i - 1] += 1;
        for t in i..j {
            cur[t] = cur[t - 1] + 1;
        }
    }
    out
}

pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_for_small_k() {
        assert_eq!(
            subset_family(2, Family::Full).unwrap(),
            vec![vec![1], vec![2], vec![1, 2]]
        );
        assert_eq!(subset_family(2, Family::Proper).unwrap(), vec![vec![1], vec![2]]);
        let full3 = subset_family(3, Family::Full).unwrap();
        assert_eq!(full3.len(), 7);
        assert_eq!(full3.last().unwrap(), &vec![1, 2, 3]);
        assert_eq!(subset_family(3, Family::Bounded(2)).unwrap().len(), 6);
        assert_eq!(subset_family(0, Family::Full), Err(Error::ZeroArity));
        assert!(subset_family(3, Family::Bounded(4)).is_err());
    }

    #[test]
    fn index_sizes() {
        for k in 1..=5 {
            let idx = SubsetIndex::new(k).unwrap();
            let expect: u128 = (1..=k).map(|j| binomial(k, j)).sum();
            assert_eq!(idx.len() as u128, expect);
            assert_eq!(idx.subset(idx.top()), (1 << k) - 1);
            for p in 0..idx.lower_len() {
                assert!((idx.subset(p).count_ones() as usize) < k);
            }
        }
    }

    #[test]
    fn lower_positions_of_top() {
        let idx = SubsetIndex::new(3).unwrap();
        assert_eq!(idx.lower_positions(idx.top()), (0..6).collect::<Vec<_>>());
        // {1,2} sits at position 3; below it are {1} and {2}.
        assert_eq!(idx.lower_positions(3), vec![0, 1]);
    }

    #[test]
    fn induced_swap_k2() {
        let idx = SubsetIndex::new(2).unwrap();
        assert_eq!(idx.induced(&[1, 0]), vec![1, 0, 2]);
        assert_eq!(idx.induced(&[0, 1]), vec![0, 1, 2]);
    }

    #[test]
    fn k_subsets_lex() {
        assert_eq!(
            k_subsets(4, 2),
            vec![vec![1, 2], vec![1, 3], vec![1, 4], vec![2, 3], vec![2, 4], vec![3, 4]]
        );
        assert_eq!(k_subsets(2, 3), Vec::<Vec<usize>>::new());
        assert_eq!(k_subsets(5, 3).len(), 10);
    }
}
