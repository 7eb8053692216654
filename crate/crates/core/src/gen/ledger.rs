use std::collections::{BTreeMap, BTreeSet};

use crate::model::{BoundaryCategory, DataType, OperatorSpec};
use crate::rng::RandomSource;

/// Groups of spec inputs that always share one dtype.
///
/// Without `type_tied` every input is its own group. With it, inputs with
/// identical type lists share a group. Groups are ordered by their first
/// member.
pub fn type_groups(spec: &OperatorSpec) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, t) in spec.inputs.iter().enumerate() {
        let found = spec.type_tied.then(|| groups.iter_mut().find(|g| spec.inputs[g[0]].types == t.types)).flatten();
        match found {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}

/// Number of distinct dtype assignments to the inputs.
pub fn count_type_combinations(spec: &OperatorSpec) -> usize {
    type_groups(spec).iter().map(|g| spec.inputs[g[0]].types.len()).fold(1usize, |acc, n| acc.saturating_mul(n))
}

/// Every dtype assignment, one dtype per spec input.
///
/// Order is lexicographic over declared type-list positions, group by group,
/// with the last group varying fastest.
pub fn type_combinations(spec: &OperatorSpec) -> Vec<Vec<DataType>> {
    let groups = type_groups(spec);
    let sizes: Vec<usize> = groups.iter().map(|g| spec.inputs[g[0]].types.len()).collect();
    if sizes.contains(&0) {
        return Vec::new();
    }
    let mut digits = vec![0usize; groups.len()];
    let mut out = Vec::new();
    loop {
        let mut combo = vec![DataType::F32; spec.inputs.len()];
        for (g, &d) in groups.iter().zip(&digits) {
            for &i in g {
                combo[i] = spec.inputs[g[0]].types[d];
            }
        }
        out.push(combo);
        let mut k = groups.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < sizes[k] {
                break;
            }
            digits[k] = 0;
        }
    }
}

/// Per-combination test counts for a budget of `count` tests.
///
/// Each of `n` combinations gets `count / n`; the remainder goes one each to
/// the first combinations. When `n > count` only the first `count` get a test.
pub fn split_budget(n: usize, count: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let base = count / n;
    let extra = count % n;
    (0..n).map(|k| base + usize::from(k < extra)).collect()
}

/// Bookkeeping for the three coverage phases.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageLedger {
    /// Combinations in lexicographic order with their remaining test counts.
    pub combination_quota: Vec<(Vec<DataType>, usize)>,
    pub rank_quota: Vec<usize>,
    pub rank_occurrences: Vec<BTreeMap<usize, usize>>,
    /// Completed visiting rounds per input; a rank is visited in the current
    /// round once it has occurred `rank_quota * (round + 1)` times.
    rounds: Vec<usize>,
    rank_bounds: Vec<(usize, usize)>,
    pub boundary_hits: BTreeSet<BoundaryCategory>,
}

/// Builds the ledger for `count` tests of `spec`.
pub fn allocate_budget(spec: &OperatorSpec, count: usize) -> CoverageLedger {
    let combos = type_combinations(spec);
    let quotas = split_budget(combos.len(), count);
    let rank_bounds: Vec<(usize, usize)> = spec.inputs.iter().map(|t| (t.min_dim, t.max_dim)).collect();
    CoverageLedger {
        combination_quota: combos.into_iter().zip(quotas).collect(),
        rank_quota: rank_bounds.iter().map(|&(lo, hi)| (count / (hi.saturating_sub(lo) + 1)).max(1)).collect(),
        rank_occurrences: vec![BTreeMap::new(); spec.inputs.len()],
        rounds: vec![0; spec.inputs.len()],
        rank_bounds,
        boundary_hits: BTreeSet::new(),
    }
}

impl CoverageLedger {
    pub fn total_budget(&self) -> usize {
        self.combination_quota.iter().map(|(_, q)| q).sum()
    }

    /// Combination index for each test, interleaved round-robin so every
    /// stretch of the plan sees many combinations.
    pub fn schedule(&self) -> Vec<usize> {
        let mut left: Vec<usize> = self.combination_quota.iter().map(|(_, q)| *q).collect();
        let mut out = Vec::with_capacity(self.total_budget());
        while left.iter().any(|&q| q > 0) {
            for (k, q) in left.iter_mut().enumerate() {
                if *q > 0 {
                    *q -= 1;
                    out.push(k);
                }
            }
        }
        out
    }

    pub fn occurrences(&self, input: usize, rank: usize) -> usize {
        self.rank_occurrences[input].get(&rank).copied().unwrap_or(0)
    }

    pub fn is_visited(&self, input: usize, rank: usize) -> bool {
        self.occurrences(input, rank) >= self.rank_quota[input] * (self.rounds[input] + 1)
    }

    /// Counts one occurrence of `rank` and starts a new round once every
    /// rank of the input's range has been visited.
    pub fn record_rank(&mut self, input: usize, rank: usize) {
        *self.rank_occurrences[input].entry(rank).or_insert(0) += 1;
        let (lo, hi) = self.rank_bounds[input];
        if (lo..=hi).all(|r| self.is_visited(input, r)) {
            self.rounds[input] += 1;
        }
    }

    /// Uniform draw among non-visited ranks of `[lo, hi]`, or among all of
    /// `[lo, hi]` when every rank there is visited. Records the draw.
    pub fn sample_rank_in(&mut self, input: usize, lo: usize, hi: usize, rng: &mut RandomSource) -> usize {
        let open: Vec<usize> = (lo..=hi).filter(|&r| !self.is_visited(input, r)).collect();
        let rank = if open.is_empty() { rng.range_usize(lo, hi) } else { open[rng.index(open.len())] };
        self.record_rank(input, rank);
        rank
    }

    /// [`Self::sample_rank_in`] over the input's full declared range.
    pub fn sample_rank(&mut self, input: usize, rng: &mut RandomSource) -> usize {
        let (lo, hi) = self.rank_bounds[input];
        self.sample_rank_in(input, lo, hi, rng)
    }
}
