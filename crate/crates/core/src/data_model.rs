//! Grouped semicontinuous data, presence patterns, and variable filtering.
//!
//! Zeros encode absence, detected by exact comparison with `0.0`; any
//! tolerance-based treatment of small values is a preprocessing concern of
//! the caller. Log values exist only for present entries and are stored
//! packed along each observation's support, so an absent entry has no
//! numeric representation that could leak into arithmetic.

use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;

/// Validated dataset: an n×p matrix of nonnegative values plus group labels.
#[derive(Debug, Clone)]
pub struct SemicontDataset {
    values: Vec<f64>,
    n: usize,
    p: usize,
    group_ids: Vec<usize>,
    group_labels: Vec<String>,
    variable_names: Vec<String>,
}

impl SemicontDataset {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_groups(&self) -> usize {
        self.group_labels.len()
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.p + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.p..(row + 1) * self.p]
    }

    /// Zero-based group id per observation; ids are contiguous and ordered by
    /// first appearance of the original labels.
    pub fn group_ids(&self) -> &[usize] {
        &self.group_ids
    }

    pub fn group_labels(&self) -> &[String] {
        &self.group_labels
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.n_groups()];
        for &g in &self.group_ids {
            sizes[g] += 1;
        }
        sizes
    }
}

/// Validates and assembles a dataset.
///
/// Group labels are remapped to contiguous ids preserving first-appearance
/// order, so every group is nonempty by construction. Values must be finite
/// and nonnegative; violations are reported with their position (1-based row,
/// column name).
pub fn ingest(
    rows: Vec<Vec<f64>>,
    groups: Vec<String>,
    variable_names: Option<Vec<String>>,
) -> Result<SemicontDataset> {
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if rows.len() != groups.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} data rows but {} group labels",
            rows.len(),
            groups.len()
        )));
    }
    let p = rows[0].len();
    let variable_names = match variable_names {
        Some(names) => {
            if names.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "{} variable names for {} columns",
                    names.len(),
                    p
                )));
            }
            names
        }
        None => (1..=p).map(|j| format!("v{j}")).collect(),
    };

    let n = rows.len();
    let mut values = Vec::with_capacity(n * p);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "row {} has {} columns, expected {}",
                i + 1,
                row.len(),
                p
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: i + 1,
                    column: variable_names[j].clone(),
                });
            }
            if v < 0.0 {
                return Err(Error::NegativeValue {
                    row: i + 1,
                    column: variable_names[j].clone(),
                    value: v,
                });
            }
            values.push(v);
        }
    }

    let mut group_labels: Vec<String> = Vec::new();
    let mut group_ids = Vec::with_capacity(n);
    for label in &groups {
        let id = match group_labels.iter().position(|l| l == label) {
            Some(id) => id,
            None => {
                group_labels.push(label.clone());
                group_labels.len() - 1
            }
        };
        group_ids.push(id);
    }

    Ok(SemicontDataset {
        values,
        n,
        p,
        group_ids,
        group_labels,
        variable_names,
    })
}

/// Presence/absence mask of one observation with its support index set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PresencePattern {
    mask: Box<[u64]>,
    support: Vec<u32>,
}

impl PresencePattern {
    pub fn from_present_flags(flags: &[bool]) -> Self {
        let words = flags.len().div_ceil(64);
        let mut mask = vec![0u64; words].into_boxed_slice();
        let mut support = Vec::new();
        for (j, &present) in flags.iter().enumerate() {
            if present {
                mask[j / 64] |= 1u64 << (j % 64);
                support.push(j as u32);
            }
        }
        PresencePattern { mask, support }
    }

    /// Number of present variables.
    pub fn count(&self) -> usize {
        self.support.len()
    }

    /// Sorted indices of present variables.
    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn is_present(&self, j: usize) -> bool {
        self.mask
            .get(j / 64)
            .is_some_and(|w| w >> (j % 64) & 1 == 1)
    }

    pub fn mask_words(&self) -> &[u64] {
        &self.mask
    }
}

/// Log-transformed data: one packed vector of log values per observation,
/// aligned with the observation's support.
#[derive(Debug, Clone)]
pub struct LogData {
    p: usize,
    patterns: Vec<PresencePattern>,
    rows: Vec<Vec<f64>>,
}

impl LogData {
    pub fn n(&self) -> usize {
        self.patterns.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn pattern(&self, i: usize) -> &PresencePattern {
        &self.patterns[i]
    }

    pub fn patterns(&self) -> &[PresencePattern] {
        &self.patterns
    }

    /// Log values of observation `i`, one per support index.
    pub fn log_values(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    /// Log value at (i, j) when variable j is present in observation i.
    pub fn log_at(&self, i: usize, j: usize) -> Option<f64> {
        let pos = self.patterns[i].support().binary_search(&(j as u32)).ok()?;
        Some(self.rows[i][pos])
    }

    /// Projects onto the given variables (sorted, deduplicated indices),
    /// renumbering them as 0..kept.len().
    pub fn restrict(&self, kept: &[usize]) -> LogData {
        let mut patterns = Vec::with_capacity(self.n());
        let mut rows = Vec::with_capacity(self.n());
        for i in 0..self.n() {
            let mut flags = vec![false; kept.len()];
            let mut values = Vec::new();
            for (new_j, &old_j) in kept.iter().enumerate() {
                if let Some(v) = self.log_at(i, old_j) {
                    flags[new_j] = true;
                    values.push(v);
                }
            }
            patterns.push(PresencePattern::from_present_flags(&flags));
            rows.push(values);
        }
        LogData {
            p: kept.len(),
            patterns,
            rows,
        }
    }
}

/// Takes logarithms of the positive entries and derives presence patterns.
pub fn to_log_data(ds: &SemicontDataset) -> LogData {
    let mut patterns = Vec::with_capacity(ds.n());
    let mut rows = Vec::with_capacity(ds.n());
    for i in 0..ds.n() {
        let row = ds.row(i);
        let flags: Vec<bool> = row.iter().map(|&v| v > 0.0).collect();
        let values: Vec<f64> = row.iter().filter(|&&v| v > 0.0).map(|v| v.ln()).collect();
        patterns.push(PresencePattern::from_present_flags(&flags));
        rows.push(values);
    }
    LogData {
        p: ds.p(),
        patterns,
        rows,
    }
}

/// Result of the pairwise co-presence filter.
#[derive(Debug, Clone)]
pub struct FilterOutcome {
    kept: Vec<usize>,
    removed: Vec<RemovedVariable>,
}

/// A variable dropped by the filter, with its total absence count at removal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemovedVariable {
    pub index: usize,
    pub absences: usize,
}

impl FilterOutcome {
    /// Retained variable indices, ascending.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    /// Removed variables in removal order.
    pub fn removed(&self) -> &[RemovedVariable] {
        &self.removed
    }

    pub fn p_star(&self) -> usize {
        self.kept.len()
    }
}

/// Enforces the pairwise co-presence condition: every retained pair of
/// variables must be simultaneously present in at least one observation.
///
/// Variables absent from every observation are removed first. Then violating
/// pairs are resolved one at a time in ascending index order: the pair
/// member with the larger total absence count is removed, ties breaking
/// toward the smaller variable index, and the scan restarts on the reduced
/// set. Only variables participating in a violating pair can be removed, and
/// the outcome depends only on the zero pattern of the data.
pub fn filter_variables(ld: &LogData) -> Result<FilterOutcome> {
    let p = ld.p();
    let n = ld.n();
    let words = n.div_ceil(64);

    // Per-variable observation bitsets.
    let mut obs_mask = vec![vec![0u64; words]; p];
    for i in 0..n {
        for &j in ld.pattern(i).support() {
            obs_mask[j as usize][i / 64] |= 1u64 << (i % 64);
        }
    }
    let present_count: Vec<usize> = obs_mask
        .iter()
        .map(|m| m.iter().map(|w| w.count_ones() as usize).sum())
        .collect();

    let mut kept: Vec<usize> = (0..p).collect();
    let mut removed = Vec::new();

    // Never-present variables violate even the diagonal of the co-presence
    // count matrix; drop them up front in index order.
    kept.retain(|&j| {
        if present_count[j] == 0 {
            removed.push(RemovedVariable {
                index: j,
                absences: n,
            });
            false
        } else {
            true
        }
    });

    let co_present = |a: usize, b: usize| -> bool {
        obs_mask[a]
            .iter()
            .zip(obs_mask[b].iter())
            .any(|(x, y)| x & y != 0)
    };

    loop {
        // First violating pair in ascending index order.
        let mut first_violation: Option<(usize, usize)> = None;
        'scan: for ai in 0..kept.len() {
            for bi in (ai + 1)..kept.len() {
                if !co_present(kept[ai], kept[bi]) {
                    first_violation = Some((kept[ai], kept[bi]));
                    break 'scan;
                }
            }
        }
        match first_violation {
            None => break,
            Some((a, b)) => {
                let absences = |j: usize| n - present_count[j];
                // The more absent member goes; ties to the smaller index.
                let j = if absences(b) > absences(a) { b } else { a };
                kept.retain(|&x| x != j);
                removed.push(RemovedVariable {
                    index: j,
                    absences: absences(j),
                });
            }
        }
    }

    if kept.len() < 2 {
        return Err(Error::InsufficientVariables { kept: kept.len() });
    }
    Ok(FilterOutcome { kept, removed })
}

/// Group assignment of observations with per-group row lists in row order.
#[derive(Debug, Clone)]
pub struct Grouping {
    ids: Vec<usize>,
    rows_by_group: Vec<Vec<usize>>,
}

impl Grouping {
    pub fn new(ids: Vec<usize>, n_groups: usize) -> Result<Self> {
        let mut rows_by_group = vec![Vec::new(); n_groups];
        for (i, &g) in ids.iter().enumerate() {
            if g >= n_groups {
                return Err(Error::Internal(format!(
                    "group id {g} out of range for {n_groups} groups"
                )));
            }
            rows_by_group[g].push(i);
        }
        if rows_by_group.iter().any(|r| r.is_empty()) {
            return Err(Error::Internal("empty group after assignment".into()));
        }
        Ok(Grouping { ids, rows_by_group })
    }

    pub fn from_dataset(ds: &SemicontDataset) -> Self {
        Grouping::new(ds.group_ids().to_vec(), ds.n_groups())
            .expect("dataset construction guarantees nonempty groups")
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn n_groups(&self) -> usize {
        self.rows_by_group.len()
    }

    #[inline]
    pub fn id(&self, row: usize) -> usize {
        self.ids[row]
    }

    /// Observation indices of group `g`, in row order.
    pub fn group_rows(&self, g: usize) -> &[usize] {
        &self.rows_by_group[g]
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.rows_by_group.iter().map(|r| r.len()).collect()
    }

    /// Uniformly shuffled group labels over all rows.
    ///
    /// Permuting labels can leave a group empty only when the label vector
    /// itself lacks some group, which `Grouping::new` already rejects, so the
    /// rebuild cannot fail.
    pub fn permuted<R: Rng>(&self, rng: &mut R) -> Grouping {
        let mut ids = self.ids.clone();
        ids.shuffle(rng);
        Grouping::new(ids, self.n_groups()).expect("permutation preserves label multiset")
    }
}
