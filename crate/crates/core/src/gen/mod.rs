//! Coverage-driven test planning.
//!
//! A plan is built in three phases that share one budget of `count` tests:
//! the budget is split over every dtype combination, each input's rank is
//! drawn from the ranks not yet at quota, and a reserved slice of the budget
//! is forced onto boundary conditions (minimum and maximum rank, a
//! dimension of length 1, value-range endpoints).
//!
//! Planning is a pure function of `(spec, profile, count, seed)`.

mod ledger;
mod sample;

use std::collections::BTreeMap;
use std::fmt;

use crate::constraints::{apply_broadcast, apply_corner_case, check_case, rank_window, CandidateAssignment};
use crate::model::{AttributeValue, BoundaryCategory, DataType, InputInstance, OperatorSpec, TestCase, ValueDirective};
use crate::rng::RandomSource;

pub use ledger::{
    allocate_budget, count_type_combinations, split_budget, type_combinations, type_groups, CoverageLedger,
};
pub use sample::{
    alphanumeric, base_directive, draw_attribute, draw_attributes, pin_attribute, pinned_directive, sample_shape,
    MAX_STRING_LEN,
};

/// Default number of tests per operator.
pub const DEFAULT_COUNT: usize = 200;

/// Tests reserved for boundary conditions: one in ten.
pub const BOUNDARY_PERIOD: usize = 10;

/// Attempts at one test case before giving up.
pub const MAX_ATTEMPTS: usize = 32;

/// Attribute draws tried when fixing the smoke-profile instance.
const SMOKE_ATTRIBUTE_DRAWS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Profile {
    /// One attribute instance shared by every test.
    Smoke,
    /// Attributes re-drawn for every test.
    Full,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Smoke => "smoke",
            Profile::Full => "full",
        }
    }

    pub fn from_name(s: &str) -> Option<Profile> {
        match s {
            "smoke" => Some(Profile::Smoke),
            "full" => Some(Profile::Full),
            _ => None,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("test count must be at least 1")]
    EmptyBudget,
    #[error("{op}: no input has a declared type")]
    NoCombinations { op: String },
    #[error("{op}: no valid candidate for test {ordinal} after {MAX_ATTEMPTS} attempts ({reason})")]
    Unrepairable { op: String, ordinal: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenWarning {
    /// Fewer tests than dtype combinations; only the first combinations run.
    BudgetTooSmall { combinations: usize, count: usize },
}

impl fmt::Display for GenWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenWarning::BudgetTooSmall { combinations, count } => write!(
                f,
                "{count} tests cannot cover {combinations} type combinations; only the first {count} are used"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestPlan {
    pub profile: Profile,
    pub seed: u64,
    pub cases: Vec<TestCase>,
    pub warnings: Vec<GenWarning>,
    pub ledger: CoverageLedger,
}

/// Boundary categories that can hold for some case of `spec`.
pub fn applicable_boundaries(spec: &OperatorSpec, profile: Profile) -> Vec<BoundaryCategory> {
    let has_dims = spec.inputs.iter().any(|t| t.max_dim >= 1);
    let tensor_ranges =
        spec.inputs.iter().any(|t| t.value_ranges.is_some() && t.types.iter().any(|d| *d != DataType::String));
    let attr_ranges = profile == Profile::Full && spec.attributes.iter().any(|a| a.value_ranges.is_some());
    BoundaryCategory::ALL
        .into_iter()
        .filter(|c| match c {
            BoundaryCategory::RankMin | BoundaryCategory::RankMax => true,
            BoundaryCategory::DimLengthOne => has_dims,
            BoundaryCategory::ValueRangeMin | BoundaryCategory::ValueRangeMax => tensor_ranges || attr_ranges,
        })
        .collect()
}

/// Number of boundary tests in a plan of `count` tests: a tenth of the
/// budget, raised so every applicable category fits.
pub fn boundary_budget(count: usize, applicable: usize) -> usize {
    (count / BOUNDARY_PERIOD).max(applicable).min(count)
}

/// Whether test `i` of `count` is a boundary slot. Slots are spread evenly.
fn is_boundary_slot(i: usize, count: usize, budget: usize) -> bool {
    budget > 0 && ((i + 1) * budget / count) > (i * budget / count)
}

/// Rank of the first present instance of each spec input.
fn present_ranks(spec: &OperatorSpec, inputs: &[InputInstance]) -> Vec<Option<usize>> {
    (0..spec.inputs.len())
        .map(|s| inputs.iter().find(|i| i.source == s && !i.omitted).map(InputInstance::rank))
        .collect()
}

fn is_endpoint(v: f64, ranges: &crate::model::ValueRanges, dtype: DataType, min: bool) -> bool {
    ranges.ranges().iter().filter_map(|r| sample::endpoints(r, dtype)).any(|(lo, hi)| v == if min { lo } else { hi })
}

/// True iff `case` actually exercises `category`.
///
/// Rank boundaries are relative to the feasible rank window of each input,
/// which accounts for attribute- and operator-imposed rank limits.
pub fn boundary_holds(spec: &OperatorSpec, case: &TestCase, category: BoundaryCategory) -> bool {
    match category {
        BoundaryCategory::RankMin | BoundaryCategory::RankMax => {
            let ranks = present_ranks(spec, &case.inputs);
            let mut any = false;
            for (s, r) in ranks.iter().enumerate() {
                let Some(r) = *r else { continue };
                let Some((lo, hi)) = rank_window(spec, s, &case.attributes, &ranks[..s]) else { return false };
                let want = if category == BoundaryCategory::RankMin { lo } else { hi };
                if r != want {
                    return false;
                }
                any = true;
            }
            any
        }
        BoundaryCategory::DimLengthOne => case.inputs.iter().any(|i| !i.omitted && i.shape.contains(&1)),
        BoundaryCategory::ValueRangeMin | BoundaryCategory::ValueRangeMax => {
            let min = category == BoundaryCategory::ValueRangeMin;
            let tensor = case.inputs.iter().filter(|i| !i.omitted).any(|i| {
                let t = &spec.inputs[i.source];
                let Some(targets) = sample::pin_targets(spec, t, i.dtype) else { return false };
                match &i.directive {
                    ValueDirective::UniformInRanges { ranges } | ValueDirective::NonZeroUniform { ranges } => {
                        let r = ranges.ranges();
                        r.len() == 1 && r[0].min() == r[0].max() && is_endpoint(r[0].min(), &targets, i.dtype, min)
                    }
                    _ => false,
                }
            });
            let attribute = spec.attributes.iter().any(|a| {
                let (Some(ranges), Some(v)) = (&a.value_ranges, case.attributes.get(&a.name)) else { return false };
                let elements = v.value.elements();
                !elements.is_empty()
                    && elements.iter().all(|e| e.as_f64().is_some_and(|x| is_endpoint(x, ranges, v.ty.element, min)))
            });
            tensor || attribute
        }
    }
}

/// Picks the attribute instance shared by all smoke tests: the first draw
/// under which every input has a feasible rank.
fn smoke_attributes(spec: &OperatorSpec, rng: &mut RandomSource) -> BTreeMap<String, AttributeValue> {
    let mut first = None;
    for _ in 0..SMOKE_ATTRIBUTE_DRAWS {
        let attrs = draw_attributes(spec, rng);
        if feasible(spec, &attrs) {
            return attrs;
        }
        first.get_or_insert(attrs);
    }
    first.unwrap_or_default()
}

fn feasible(spec: &OperatorSpec, attrs: &BTreeMap<String, AttributeValue>) -> bool {
    let mut ranks = Vec::with_capacity(spec.inputs.len());
    for s in 0..spec.inputs.len() {
        match rank_window(spec, s, attrs, &ranks) {
            Some((lo, _)) => ranks.push(Some(lo)),
            None => return false,
        }
    }
    true
}

struct Attempt<'a> {
    spec: &'a OperatorSpec,
    profile: Profile,
    combo: &'a [DataType],
    boundary: Option<BoundaryCategory>,
}

impl Attempt<'_> {
    fn attributes(
        &self,
        fixed: &BTreeMap<String, AttributeValue>,
        rng: &mut RandomSource,
    ) -> BTreeMap<String, AttributeValue> {
        if self.profile == Profile::Smoke {
            return fixed.clone();
        }
        let mut attrs = draw_attributes(self.spec, rng);
        if let Some(c @ (BoundaryCategory::ValueRangeMin | BoundaryCategory::ValueRangeMax)) = self.boundary {
            for a in &self.spec.attributes {
                if let Some(v) = attrs.get_mut(&a.name) {
                    pin_attribute(a, v, c, rng);
                }
            }
        }
        attrs
    }

    fn run(
        &self,
        name: String,
        fixed: &BTreeMap<String, AttributeValue>,
        ledger: &mut CoverageLedger,
        rng: &mut RandomSource,
    ) -> Result<TestCase, String> {
        let spec = self.spec;
        let attributes = self.attributes(fixed, rng);
        let mut inputs = Vec::new();
        let mut ranks: Vec<Option<usize>> = Vec::with_capacity(spec.inputs.len());
        for (s, t) in spec.inputs.iter().enumerate() {
            let dtype = self.combo[s];
            if t.optional && rng.coin() {
                inputs.push(InputInstance {
                    source: s,
                    dtype,
                    shape: Vec::new(),
                    directive: base_directive(spec, t, dtype),
                    seed: 0,
                    omitted: true,
                });
                ranks.push(None);
                continue;
            }
            let (lo, hi) =
                rank_window(spec, s, &attributes, &ranks).ok_or_else(|| format!("input {s} has no feasible rank"))?;
            let rank = match self.boundary {
                Some(BoundaryCategory::RankMin) => {
                    ledger.record_rank(s, lo);
                    lo
                }
                Some(BoundaryCategory::RankMax) => {
                    ledger.record_rank(s, hi);
                    hi
                }
                Some(BoundaryCategory::DimLengthOne) if hi >= 1 => ledger.sample_rank_in(s, lo.max(1), hi, rng),
                _ => ledger.sample_rank_in(s, lo, hi, rng),
            };
            ranks.push(Some(rank));
            let k = if t.is_variadic() {
                rng.range_usize(crate::constraints::VARIADIC_MIN, crate::constraints::VARIADIC_MAX)
            } else {
                1
            };
            for _ in 0..k {
                let shape_boundary = self.boundary.filter(|c| *c == BoundaryCategory::DimLengthOne);
                let shape = sample_shape(rank, rng, shape_boundary);
                let directive = match self.boundary {
                    Some(c @ (BoundaryCategory::ValueRangeMin | BoundaryCategory::ValueRangeMax)) => {
                        pinned_directive(spec, t, dtype, c, rng).unwrap_or_else(|| base_directive(spec, t, dtype))
                    }
                    _ => base_directive(spec, t, dtype),
                };
                let seed = rng.next_u64();
                inputs.push(InputInstance { source: s, dtype, shape, directive, seed, omitted: false });
            }
        }

        let cand = CandidateAssignment { attributes, inputs };
        let cand = apply_broadcast(spec, cand).map_err(|e| e.to_string())?;
        let cand = apply_corner_case(spec, cand, rng).map_err(|e| e.to_string())?;
        let case = TestCase { name, attributes: cand.attributes, inputs: cand.inputs, boundary: self.boundary };
        if let Some(v) = check_case(spec, &case).into_iter().next() {
            return Err(v.to_string());
        }
        if let Some(c) = self.boundary {
            if !boundary_holds(spec, &case, c) {
                return Err(format!("boundary {c:?} not exercised"));
            }
        }
        Ok(case)
    }
}

/// Builds `count` valid test cases for `spec`.
///
/// The result is a deterministic function of the four arguments.
pub fn generate_plan(spec: &OperatorSpec, profile: Profile, count: usize, seed: u64) -> Result<TestPlan, GenError> {
    if count == 0 {
        return Err(GenError::EmptyBudget);
    }
    let mut ledger = allocate_budget(spec, count);
    let combinations = ledger.combination_quota.len();
    if combinations == 0 {
        return Err(GenError::NoCombinations { op: spec.op_code.clone() });
    }
    let mut warnings = Vec::new();
    if combinations > count {
        warnings.push(GenWarning::BudgetTooSmall { combinations, count });
    }

    let mut rng = RandomSource::new(seed);
    let fixed = match profile {
        Profile::Smoke => smoke_attributes(spec, &mut rng),
        Profile::Full => BTreeMap::new(),
    };
    let schedule = ledger.schedule();
    let total = schedule.len();
    let applicable = applicable_boundaries(spec, profile);
    let budget = boundary_budget(total, applicable.len());
    let mut next_category = 0;
    let prefix = spec.test_prefix();
    let mut cases = Vec::with_capacity(total);

    for (ordinal, &combo) in schedule.iter().enumerate() {
        let combo = ledger.combination_quota[combo].0.clone();
        let name = format!("{prefix}_{ordinal}");
        // boundary slots try each category from the next pending one, then
        // fall back to an unlabelled case
        let mut plans: Vec<Option<BoundaryCategory>> = Vec::new();
        if is_boundary_slot(ordinal, total, budget) {
            plans.extend((0..applicable.len()).map(|k| Some(applicable[(next_category + k) % applicable.len()])));
        }
        plans.push(None);

        let mut last_error = String::new();
        let mut done = None;
        'plans: for boundary in plans {
            let attempt = Attempt { spec, profile, combo: &combo, boundary };
            for _ in 0..MAX_ATTEMPTS {
                let mut trial = ledger.clone();
                match attempt.run(name.clone(), &fixed, &mut trial, &mut rng) {
                    Ok(case) => {
                        ledger = trial;
                        done = Some(case);
                        break 'plans;
                    }
                    Err(e) => last_error = e,
                }
            }
        }
        let case =
            done.ok_or_else(|| GenError::Unrepairable { op: spec.op_code.clone(), ordinal, reason: last_error })?;
        if let Some(c) = case.boundary {
            ledger.boundary_hits.insert(c);
            let k = applicable.iter().position(|a| *a == c).unwrap_or(0);
            next_category = (k + 1) % applicable.len();
        }
        cases.push(case);
    }

    Ok(TestPlan { profile, seed, cases, warnings, ledger })
}
