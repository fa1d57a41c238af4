//! Smallset selection.
//!
//! Three methods pick K of the N original rows:
//!
//! * `random`: seeded uniform sample without replacement.
//! * `coverage`: any K rows such that every step alters at least one of them.
//! * `coverage_variety`: the coverage constraints plus maximal total pairwise
//!   Hamming distance between the chosen rows' appearance vectors, i.e.
//!   maximise `z^T Q z` subject to `sum(z) = K` and `C^T z >= 1`.
//!
//! Steps that alter no original row cannot be covered by anything; their
//! constraints are dropped and reported.
//!
//! Ties between equally good selections go to the lexicographically smallest
//! sorted row-id set.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{CoverageMatrix, DistanceMatrix};
use crate::table::RowId;
use crate::warning::Warning;

/// Recommended Smallset size range.
pub const RECOMMENDED_K: (usize, usize) = (5, 15);
pub const DEFAULT_EXHAUSTIVE_LIMIT: u64 = 2_000_000;
/// Local-search starts when exhaustive search is over the limit.
pub const LOCAL_SEARCH_RESTARTS: usize = 32;
/// Step masks are held in a `u128`.
pub const MAX_STEPS: usize = 128;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default, clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Method {
    Random,
    Coverage,
    #[default]
    CoverageVariety,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::Coverage => "coverage",
            Method::CoverageVariety => "coverage_variety",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectorConfig {
    pub k: usize,
    pub method: Method,
    pub seed: u64,
    pub exhaustive_limit: u64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        SelectorConfig {
            k: RECOMMENDED_K.0,
            method: Method::CoverageVariety,
            seed: 0,
            exhaustive_limit: DEFAULT_EXHAUSTIVE_LIMIT,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SelectError {
    #[error("K = {k} exceeds the {n} original rows")]
    KTooLarge { k: usize, n: usize },
    #[error("K must be at least 1")]
    ZeroK,
    #[error(
        "K = {k} is too small to cover every step: a greedy cover needs {greedy} rows, the minimum is {minimum}"
    )]
    InfeasibleK {
        k: usize,
        greedy: usize,
        minimum: usize,
    },
    #[error("coverage has {coverage} rows but the distance matrix has {distance}")]
    DimensionMismatch { coverage: usize, distance: usize },
    #[error("{steps} steps exceed the supported maximum of {MAX_STEPS}")]
    TooManySteps { steps: usize },
}

/// The chosen Smallset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmallsetSelection {
    pub method: Method,
    pub k: usize,
    /// In original-table order.
    pub selected_row_ids: Vec<RowId>,
    /// Indicator over the original rows.
    pub z: Vec<u8>,
    /// `z^T Q z`; 0 for random and coverage.
    pub objective_value: u64,
    /// Seed used, for methods that consume randomness.
    pub seed: Option<u64>,
    /// 1-based steps whose coverage constraint was dropped.
    pub dropped_steps: Vec<usize>,
    /// True when the optimum was not proven (local search).
    pub heuristic: bool,
}

impl SmallsetSelection {
    pub fn selected_indices(&self) -> Vec<usize> {
        self.z
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 1)
            .map(|(i, _)| i)
            .collect()
    }

    /// 1-based retained steps no selected row alters.
    pub fn uncovered_steps(&self, coverage: &CoverageMatrix) -> Vec<usize> {
        let chosen = self.selected_indices();
        (0..coverage.n_steps())
            .filter(|h| !self.dropped_steps.contains(&(h + 1)))
            .filter(|&h| !chosen.iter().any(|&i| coverage.get(i, h)))
            .map(|h| h + 1)
            .collect()
    }
}

/// Selection plus the warnings raised while making it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelectionReport {
    pub selection: SmallsetSelection,
    pub warnings: Vec<Warning>,
}

/// z^T Q z of any selection.
pub fn objective(q: &DistanceMatrix, selection: &SmallsetSelection) -> u64 {
    q.quadratic_form(&selection.selected_indices())
}

/// Dispatches on `cfg.method`.
pub fn select(
    coverage: &CoverageMatrix,
    distance: &DistanceMatrix,
    cfg: &SelectorConfig,
) -> Result<SelectionReport, SelectError> {
    match cfg.method {
        Method::Random => select_random(coverage, cfg),
        Method::Coverage => select_coverage(coverage, cfg),
        Method::CoverageVariety => select_coverage_variety(coverage, distance, cfg),
    }
}

/// Coverage constraints as bitmasks over the retained steps.
struct Instance {
    n: usize,
    k: usize,
    row_ids: Vec<RowId>,
    masks: Vec<u128>,
    required: u128,
    dropped: Vec<usize>,
    /// Indices sorted by row id.
    by_id: Vec<usize>,
    warnings: Vec<Warning>,
}

impl Instance {
    fn new(coverage: &CoverageMatrix, k: usize) -> Result<Self, SelectError> {
        let n = coverage.n_rows();
        let h = coverage.n_steps();
        if k == 0 {
            return Err(SelectError::ZeroK);
        }
        if k > n {
            return Err(SelectError::KTooLarge { k, n });
        }
        if h > MAX_STEPS {
            return Err(SelectError::TooManySteps { steps: h });
        }
        let mut warnings = Vec::new();
        if k < RECOMMENDED_K.0 || k > RECOMMENDED_K.1 {
            warnings.push(Warning::SmallsetSize {
                k,
                min: RECOMMENDED_K.0,
                max: RECOMMENDED_K.1,
            });
        }
        let mut dropped = Vec::new();
        let mut required = 0u128;
        for step in 0..h {
            if coverage.column_sum(step) == 0 {
                dropped.push(step + 1);
                warnings.push(Warning::DroppedStep { step: step + 1 });
            } else {
                required |= 1 << step;
            }
        }
        let masks = (0..n)
            .map(|i| {
                (0..h)
                    .filter(|&s| coverage.get(i, s))
                    .fold(0u128, |m, s| m | (1 << s))
                    & required
            })
            .collect();
        let row_ids = coverage.row_ids().to_vec();
        let mut by_id: Vec<usize> = (0..n).collect();
        by_id.sort_by_key(|&i| row_ids[i]);
        Ok(Instance {
            n,
            k,
            row_ids,
            masks,
            required,
            dropped,
            by_id,
            warnings,
        })
    }

    fn union(&self, set: &[usize]) -> u128 {
        set.iter().fold(0, |m, &i| m | self.masks[i])
    }

    fn feasible(&self, set: &[usize]) -> bool {
        self.union(set) & self.required == self.required
    }

    fn sorted_ids(&self, set: &[usize]) -> Vec<RowId> {
        let mut ids: Vec<RowId> = set.iter().map(|&i| self.row_ids[i]).collect();
        ids.sort();
        ids
    }

    /// Greedy set cover. `order` breaks ties (earlier wins).
    fn greedy_cover(&self, order: &[usize]) -> Vec<usize> {
        let mut uncovered = self.required;
        let mut cover = Vec::new();
        while uncovered != 0 {
            let mut best: Option<(u32, usize)> = None;
            for &i in order {
                let gain = (self.masks[i] & uncovered).count_ones();
                if gain > 0 && best.is_none_or(|(g, _)| gain > g) {
                    best = Some((gain, i));
                }
            }
            let (_, i) = best.expect("required steps are coverable by construction");
            uncovered &= !self.masks[i];
            cover.push(i);
        }
        cover
    }

    /// Minimum cover by depth-first branch and bound over distinct masks.
    fn minimum_cover(&self, upper: &[usize]) -> Vec<usize> {
        // One representative (smallest id) per distinct nonzero pattern.
        let mut reps: Vec<(u128, usize)> = Vec::new();
        for &i in &self.by_id {
            let m = self.masks[i];
            if m != 0 && !reps.iter().any(|(r, _)| *r == m) {
                reps.push((m, i));
            }
        }
        let mut best = upper.to_vec();
        let mut chosen = Vec::new();
        min_cover_dfs(&reps, self.required, &mut chosen, &mut best);
        best
    }

    /// Fills `cover` up to K with unused rows taken in `order`.
    fn fill(&self, cover: &[usize], order: &[usize]) -> Vec<usize> {
        let mut set = cover.to_vec();
        for &i in order {
            if set.len() >= self.k {
                break;
            }
            if !set.contains(&i) {
                set.push(i);
            }
        }
        set
    }

    /// A feasible K-set: greedy cover, exact cover if greedy is too large.
    fn coverage_set(&self, order: &[usize]) -> Result<Vec<usize>, SelectError> {
        let greedy = self.greedy_cover(order);
        let cover = if greedy.len() <= self.k {
            greedy
        } else {
            let min = self.minimum_cover(&greedy);
            if min.len() > self.k {
                return Err(SelectError::InfeasibleK {
                    k: self.k,
                    greedy: greedy.len(),
                    minimum: min.len(),
                });
            }
            min
        };
        let set = self.fill(&cover, order);
        debug_assert!(self.feasible(&set));
        Ok(set)
    }

    fn finish(
        self,
        method: Method,
        mut set: Vec<usize>,
        objective_value: u64,
        seed: Option<u64>,
        heuristic: bool,
    ) -> SelectionReport {
        set.sort_unstable();
        let mut z = vec![0u8; self.n];
        for &i in &set {
            z[i] = 1;
        }
        SelectionReport {
            selection: SmallsetSelection {
                method,
                k: self.k,
                selected_row_ids: set.iter().map(|&i| self.row_ids[i]).collect(),
                z,
                objective_value,
                seed,
                dropped_steps: self.dropped,
                heuristic,
            },
            warnings: self.warnings,
        }
    }
}

fn min_cover_dfs(
    reps: &[(u128, usize)],
    uncovered: u128,
    chosen: &mut Vec<usize>,
    best: &mut Vec<usize>,
) {
    if uncovered == 0 {
        if chosen.len() < best.len() {
            *best = chosen.clone();
        }
        return;
    }
    if chosen.len() + 1 >= best.len() {
        return;
    }
    let max_gain = reps
        .iter()
        .map(|(m, _)| (m & uncovered).count_ones())
        .max()
        .unwrap_or(0);
    if max_gain == 0 {
        return;
    }
    let lower = (uncovered.count_ones()).div_ceil(max_gain) as usize;
    if chosen.len() + lower >= best.len() {
        return;
    }
    let bit = uncovered & uncovered.wrapping_neg();
    let mut branches: Vec<&(u128, usize)> = reps.iter().filter(|(m, _)| m & bit != 0).collect();
    branches.sort_by_key(|(m, _)| std::cmp::Reverse((m & uncovered).count_ones()));
    for &(m, i) in branches {
        chosen.push(i);
        min_cover_dfs(reps, uncovered & !m, chosen, best);
        chosen.pop();
    }
}

/// Uniform sample without replacement, seeded.
pub fn select_random(
    coverage: &CoverageMatrix,
    cfg: &SelectorConfig,
) -> Result<SelectionReport, SelectError> {
    let mut inst = Instance::new(coverage, cfg.k)?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed);
    let mut pool: Vec<usize> = (0..inst.n).collect();
    for i in 0..inst.k {
        let j = i + rng.gen_range(0..(inst.n - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(inst.k);
    let covered = inst.union(&pool);
    for step in 0..coverage.n_steps() {
        if inst.required & (1 << step) != 0 && covered & (1 << step) == 0 {
            inst.warnings
                .push(Warning::UncoveredStep { step: step + 1 });
        }
    }
    Ok(inst.finish(Method::Random, pool, 0, Some(cfg.seed), false))
}

/// Any K rows covering every step that alters at least one row.
pub fn select_coverage(
    coverage: &CoverageMatrix,
    cfg: &SelectorConfig,
) -> Result<SelectionReport, SelectError> {
    let inst = Instance::new(coverage, cfg.k)?;
    let set = inst.coverage_set(&inst.by_id)?;
    Ok(inst.finish(Method::Coverage, set, 0, None, false))
}

/// Number of K-subsets of N, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Coverage constraints plus maximal `z^T Q z`.
///
/// Exact when `C(N, K)` is within `cfg.exhaustive_limit`; otherwise a
/// seeded steepest-ascent swap search with restarts, flagged heuristic.
pub fn select_coverage_variety(
    coverage: &CoverageMatrix,
    distance: &DistanceMatrix,
    cfg: &SelectorConfig,
) -> Result<SelectionReport, SelectError> {
    if distance.n() != coverage.n_rows() {
        return Err(SelectError::DimensionMismatch {
            coverage: coverage.n_rows(),
            distance: distance.n(),
        });
    }
    let mut inst = Instance::new(coverage, cfg.k)?;
    // Fails early with InfeasibleK, and seeds the local search.
    let start = inst.coverage_set(&inst.by_id)?;

    let subsets = binomial(inst.n, inst.k);
    if subsets <= u128::from(cfg.exhaustive_limit) {
        let mut search = ExactSearch::new(&inst, distance);
        search.run();
        let (pair_sum, set) = search.best.expect("a feasible set exists");
        return Ok(inst.finish(Method::CoverageVariety, set, 2 * pair_sum, None, false));
    }

    inst.warnings.push(Warning::HeuristicSearch {
        subsets,
        limit: cfg.exhaustive_limit,
    });
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(cfg.seed);
    let mut best: Option<(u64, Vec<RowId>, Vec<usize>)> = None;
    for restart in 0..LOCAL_SEARCH_RESTARTS {
        let initial = if restart == 0 {
            start.clone()
        } else {
            let mut order = inst.by_id.clone();
            for i in (1..order.len()).rev() {
                let j = rng.gen_range(0..=i as u64) as usize;
                order.swap(i, j);
            }
            inst.coverage_set(&order).unwrap_or_else(|_| start.clone())
        };
        let set = local_search(&inst, distance, initial);
        let pair_sum = distance.quadratic_form(&set) / 2;
        let ids = inst.sorted_ids(&set);
        let better = match &best {
            None => true,
            Some((b, bids, _)) => pair_sum > *b || (pair_sum == *b && ids < *bids),
        };
        if better {
            best = Some((pair_sum, ids, set));
        }
    }
    let (pair_sum, _, set) = best.expect("at least one restart");
    Ok(inst.finish(
        Method::CoverageVariety,
        set,
        2 * pair_sum,
        Some(cfg.seed),
        true,
    ))
}

/// Lexicographic depth-first branch and bound over K-subsets in row-id order.
struct ExactSearch<'a> {
    inst: &'a Instance,
    q: &'a DistanceMatrix,
    /// `suffix_union[p]` = union of masks of `by_id[p..]`.
    suffix_union: Vec<u128>,
    q_max: u64,
    chosen: Vec<usize>,
    /// Distance from each row to the currently chosen rows.
    gain: Vec<u64>,
    best: Option<(u64, Vec<usize>)>,
    scratch: Vec<u64>,
}

impl<'a> ExactSearch<'a> {
    fn new(inst: &'a Instance, q: &'a DistanceMatrix) -> Self {
        let mut suffix_union = vec![0u128; inst.n + 1];
        for p in (0..inst.n).rev() {
            suffix_union[p] = suffix_union[p + 1] | inst.masks[inst.by_id[p]];
        }
        let q_max = (0..inst.n)
            .flat_map(|i| q.row(i).iter().copied())
            .max()
            .map_or(0, u64::from);
        ExactSearch {
            inst,
            q,
            suffix_union,
            q_max,
            chosen: Vec::with_capacity(inst.k),
            gain: vec![0; inst.n],
            best: None,
            scratch: Vec::with_capacity(inst.n),
        }
    }

    fn run(&mut self) {
        self.dfs(0, 0, 0);
    }

    /// Largest value any completion from position `from` could add.
    fn upper_bound(&mut self, from: usize, remaining: usize) -> u64 {
        self.scratch.clear();
        let by_id = &self.inst.by_id;
        self.scratch
            .extend(by_id[from..].iter().map(|&i| self.gain[i]));
        self.scratch.sort_unstable_by(|a, b| b.cmp(a));
        let top: u64 = self.scratch.iter().take(remaining).sum();
        let r = remaining as u64;
        top + r * r.saturating_sub(1) / 2 * self.q_max
    }

    fn dfs(&mut self, from: usize, covered: u128, value: u64) {
        let inst = self.inst;
        let remaining = inst.k - self.chosen.len();
        if remaining == 0 {
            if covered & inst.required == inst.required
                && self.best.as_ref().is_none_or(|(b, _)| value > *b)
            {
                self.best = Some((value, self.chosen.clone()));
            }
            return;
        }
        if let Some((b, _)) = self.best {
            // Later subsets in this order can only tie the incumbent, never beat
            // it on the tie-break.
            if value + self.upper_bound(from, remaining) <= b {
                return;
            }
        }
        for p in from..=(inst.n - remaining) {
            if (covered | self.suffix_union[p]) & inst.required != inst.required {
                break;
            }
            let i = inst.by_id[p];
            let add = self.gain[i];
            self.chosen.push(i);
            for (l, g) in self.gain.iter_mut().enumerate() {
                *g += u64::from(self.q.get(i, l));
            }
            self.dfs(p + 1, covered | inst.masks[i], value + add);
            for (l, g) in self.gain.iter_mut().enumerate() {
                *g -= u64::from(self.q.get(i, l));
            }
            self.chosen.pop();
        }
    }
}

/// Steepest-ascent single swaps that keep every constraint satisfied.
///
/// Zero-gain swaps are taken only when they make the sorted id set
/// lexicographically smaller, so the search always terminates.
fn local_search(inst: &Instance, q: &DistanceMatrix, mut set: Vec<usize>) -> Vec<usize> {
    let n = inst.n;
    let steps = 128 - inst.required.leading_zeros() as usize;
    loop {
        let mut in_set = vec![false; n];
        for &i in &set {
            in_set[i] = true;
        }
        let gain: Vec<i64> = (0..n)
            .map(|l| set.iter().map(|&i| i64::from(q.get(i, l))).sum())
            .collect();
        let mut count = vec![0u32; steps];
        for &i in &set {
            for (s, c) in count.iter_mut().enumerate() {
                if inst.masks[i] & (1 << s) != 0 {
                    *c += 1;
                }
            }
        }

        let mut best: Option<(i64, usize, usize, Vec<RowId>)> = None;
        for (slot, &out) in set.iter().enumerate() {
            let critical = (0..steps)
                .filter(|&s| count[s] == 1 && inst.masks[out] & (1 << s) != 0)
                .fold(0u128, |m, s| m | (1 << s));
            for cand in 0..n {
                if in_set[cand] || inst.masks[cand] & critical != critical {
                    continue;
                }
                let delta = gain[cand] - i64::from(q.get(out, cand)) - gain[out];
                if delta < 0 {
                    continue;
                }
                if delta == 0 && inst.row_ids[cand] >= inst.row_ids[out] {
                    continue;
                }
                let take = match &best {
                    None => true,
                    Some((d, _, _, ids)) => match delta.cmp(d) {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        Ordering::Equal => {
                            let mut trial = set.clone();
                            trial[slot] = cand;
                            inst.sorted_ids(&trial) < *ids
                        }
                    },
                };
                if take {
                    let mut trial = set.clone();
                    trial[slot] = cand;
                    let ids = inst.sorted_ids(&trial);
                    best = Some((delta, slot, cand, ids));
                }
            }
        }
        match best {
            Some((_, slot, cand, _)) => set[slot] = cand,
            None => return set,
        }
    }
}
