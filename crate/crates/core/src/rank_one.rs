//! Nonsingular rank-one cutting-and-stacking transformations with exact
//! rational interval arithmetic.
//!
//! A spec gives, per stage n, the number of cuts r_n >= 2, spacer counts
//! s_n(j), and a proportion vector p_n. Columns are built inductively: every
//! level is cut into r_n sublevels with lengths in the proportions p_n,
//! s_n(j) spacer levels the width of subcolumn j's top sublevel are placed
//! above subcolumn j, and the subcolumns are stacked right on top of left.
//! Spacers are allocated from a single fresh-space region growing to the
//! right of used space, so columns are reproducible and endpoints canonical.
//!
//! All endpoints are exact rationals. The transformation is a stage limit,
//! so partiality is explicit: `undefined-at-depth` is a first-class outcome.

use std::sync::{Arc, RwLock};

use num::rational::BigRational;
use num::traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rational::{format_rational, rational_from_f64};
use crate::shift::ProbabilityVector;

/// Half-open interval [left, right) with exact rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalInterval {
    left: BigRational,
    right: BigRational,
}

impl RationalInterval {
    pub fn new(left: BigRational, right: BigRational) -> Result<Self> {
        if left >= right {
            return Err(Error::InvalidSpec(format!(
                "empty interval [{}, {})",
                format_rational(&left),
                format_rational(&right)
            )));
        }
        Ok(Self { left, right })
    }

    pub fn left(&self) -> &BigRational {
        &self.left
    }

    pub fn right(&self) -> &BigRational {
        &self.right
    }

    pub fn length(&self) -> BigRational {
        &self.right - &self.left
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.left <= x && x < &self.right
    }

    pub fn contains_interval(&self, other: &RationalInterval) -> bool {
        self.left <= other.left && other.right <= self.right
    }

    pub fn overlaps(&self, other: &RationalInterval) -> bool {
        self.left < other.right && other.left < self.right
    }

    /// Image of `self` (a subinterval of `src`) under the unique
    /// orientation-preserving affine map taking `src` onto `dst`.
    fn map_affine(&self, src: &RationalInterval, dst: &RationalInterval) -> RationalInterval {
        let slope = dst.length() / src.length();
        let left = &dst.left + (&self.left - &src.left) * &slope;
        let right = &dst.left + (&self.right - &src.left) * &slope;
        RationalInterval { left, right }
    }
}

fn map_point_affine(x: &BigRational, src: &RationalInterval, dst: &RationalInterval) -> BigRational {
    &dst.left + (x - &src.left) * dst.length() / src.length()
}

/// One cutting-and-stacking stage.
#[derive(Debug, Clone)]
pub struct Stage {
    cuts: usize,
    spacers: Vec<u64>,
    proportions: ProbabilityVector,
}

impl Stage {
    pub fn new(cuts: usize, spacers: Vec<u64>, proportions: ProbabilityVector) -> Result<Self> {
        if cuts < 2 {
            return Err(Error::InvalidSpec(format!("cuts r = {cuts} violates r >= 2")));
        }
        if spacers.len() != cuts {
            return Err(Error::InvalidSpec(format!(
                "spacer list has {} entries for {} cuts",
                spacers.len(),
                cuts
            )));
        }
        if proportions.len() != cuts {
            return Err(Error::InvalidSpec(format!(
                "proportion vector has {} entries for {} cuts",
                proportions.len(),
                cuts
            )));
        }
        Ok(Self { cuts, spacers, proportions })
    }

    pub fn uniform(cuts: usize, spacers: Vec<u64>) -> Result<Self> {
        Self::new(cuts, spacers, ProbabilityVector::uniform(cuts))
    }

    pub fn cuts(&self) -> usize {
        self.cuts
    }

    pub fn spacers(&self) -> &[u64] {
        &self.spacers
    }

    pub fn proportions(&self) -> &ProbabilityVector {
        &self.proportions
    }

    pub fn is_uniform(&self) -> bool {
        let first = &self.proportions.entries()[0];
        self.proportions.entries().iter().all(|p| p == first)
    }
}

/// Cutting-and-stacking data: a finite list of leading stages followed by an
/// eventually-periodic cycle (the canonical way to express infinite specs
/// finitely; an empty cycle means the spec is finite-depth only).
#[derive(Debug, Clone)]
pub struct RankOneSpec {
    head: Vec<Stage>,
    cycle: Vec<Stage>,
    initial_width: BigRational,
    space_cap: Option<BigRational>,
}

impl RankOneSpec {
    pub fn new(
        head: Vec<Stage>,
        cycle: Vec<Stage>,
        initial_width: BigRational,
        space_cap: Option<BigRational>,
    ) -> Result<Self> {
        if head.is_empty() && cycle.is_empty() {
            return Err(Error::InvalidSpec("spec has no stages".into()));
        }
        if !initial_width.is_positive() {
            return Err(Error::InvalidSpec("initial width must be positive".into()));
        }
        Ok(Self { head, cycle, initial_width, space_cap })
    }

    /// The classical three-cut construction: r = 3, one spacer over the
    /// middle subcolumn, uniform proportions, total measure 1.
    pub fn chacon() -> Self {
        let stage = Stage::uniform(3, vec![0, 1, 0]).unwrap();
        Self::new(vec![], vec![stage], BigRational::new(2.into(), 3.into()), None).unwrap()
    }

    pub fn stage(&self, n: usize) -> Result<&Stage> {
        if n < self.head.len() {
            return Ok(&self.head[n]);
        }
        if self.cycle.is_empty() {
            return Err(Error::InvalidSpec(format!(
                "spec defines only {} stages but stage {} was requested",
                self.head.len(),
                n
            )));
        }
        Ok(&self.cycle[(n - self.head.len()) % self.cycle.len()])
    }

    pub fn head(&self) -> &[Stage] {
        &self.head
    }

    pub fn cycle(&self) -> &[Stage] {
        &self.cycle
    }

    pub fn initial_width(&self) -> &BigRational {
        &self.initial_width
    }

    /// Total-measure cap; defaults to 1, matching the unit-interval setting.
    pub fn space_cap(&self) -> BigRational {
        self.space_cap.clone().unwrap_or_else(|| BigRational::from_integer(1.into()))
    }

    /// True iff every stage's proportion vector is uniform (the
    /// measure-preserving case).
    pub fn measure_preserving(&self) -> bool {
        self.head.iter().chain(self.cycle.iter()).all(Stage::is_uniform)
    }

    /// Uniform lower bound c on all proportions across all stages.
    pub fn min_proportion(&self) -> BigRational {
        self.head
            .iter()
            .chain(self.cycle.iter())
            .map(|s| s.proportions.min_prob().clone())
            .min()
            .expect("spec has at least one stage")
    }
}

/// A constructed column: ordered levels, bottom to top.
#[derive(Debug)]
pub struct Column {
    stage: usize,
    levels: Vec<RationalInterval>,
    /// Level indices sorted by left endpoint, for point/interval location.
    by_position: Vec<u32>,
    min_width: BigRational,
    max_width: BigRational,
}

impl Column {
    fn new(stage: usize, levels: Vec<RationalInterval>) -> Self {
        let mut by_position: Vec<u32> = (0..levels.len() as u32).collect();
        by_position.sort_by(|&a, &b| levels[a as usize].left.cmp(&levels[b as usize].left));
        let min_width = levels.iter().map(RationalInterval::length).min().unwrap();
        let max_width = levels.iter().map(RationalInterval::length).max().unwrap();
        Self { stage, levels, by_position, min_width, max_width }
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn height(&self) -> u64 {
        self.levels.len() as u64
    }

    pub fn levels(&self) -> &[RationalInterval] {
        &self.levels
    }

    pub fn min_width(&self) -> &BigRational {
        &self.min_width
    }

    pub fn max_width(&self) -> &BigRational {
        &self.max_width
    }

    /// Index of the level containing x, if any.
    pub fn level_of_point(&self, x: &BigRational) -> Option<usize> {
        let pos = self.by_position.partition_point(|&i| &self.levels[i as usize].left <= x);
        if pos == 0 {
            return None;
        }
        let idx = self.by_position[pos - 1] as usize;
        self.levels[idx].contains(x).then_some(idx)
    }

    /// Index of the level containing the whole interval, if any.
    fn level_of_interval(&self, iv: &RationalInterval) -> Option<usize> {
        let idx = self.level_of_point(&iv.left)?;
        self.levels[idx].contains_interval(iv).then_some(idx)
    }

    /// Split `iv` into pieces each contained in a single level, or None if
    /// the levels of this column do not cover all of `iv`.
    fn split_cover(&self, iv: &RationalInterval) -> Option<Vec<(usize, RationalInterval)>> {
        let mut pieces = Vec::new();
        let mut start = iv.left.clone();
        let mut pos = self.by_position.partition_point(|&i| &self.levels[i as usize].left <= &iv.left);
        pos = pos.saturating_sub(1);
        while start < iv.right {
            // advance to a level containing `start`
            let mut found = None;
            while pos < self.by_position.len() {
                let idx = self.by_position[pos] as usize;
                let lvl = &self.levels[idx];
                if lvl.contains(&start) {
                    found = Some(idx);
                    break;
                }
                if lvl.left > start {
                    return None; // gap
                }
                pos += 1;
            }
            let idx = found?;
            let lvl = &self.levels[idx];
            let end = if &iv.right <= &lvl.right { iv.right.clone() } else { lvl.right.clone() };
            pieces.push((idx, RationalInterval { left: start, right: end.clone() }));
            start = end;
            pos += 1;
        }
        Some(pieces)
    }
}

#[derive(Debug)]
struct BuildState {
    columns: Vec<Arc<Column>>,
    /// Left endpoint of the next fresh spacer allocation.
    fresh: BigRational,
}

/// Default stage search depth for the limit transformation.
pub const DEFAULT_DEPTH_CAP: usize = 64;

/// Hard budget on levels per column; deepening past this is reported as a
/// runtime incapacity rather than an attempt to allocate gigabytes.
pub const MAX_LEVELS_PER_COLUMN: u64 = 500_000;

/// A rank-one system: memoized column tower plus pure query operations.
/// Deepening is linearized behind a write lock; queries clone `Arc`s.
pub struct RankOneSystem {
    spec: RankOneSpec,
    allow_infinite_measure: bool,
    state: RwLock<BuildState>,
}

impl std::fmt::Debug for RankOneSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RankOneSystem").field("spec", &self.spec).finish()
    }
}

impl RankOneSystem {
    pub fn new(spec: RankOneSpec) -> Self {
        Self::with_space_override(spec, false)
    }

    /// `allow_infinite_measure` disables the total-space cap for
    /// infinite-measure experiments.
    pub fn with_space_override(spec: RankOneSpec, allow_infinite_measure: bool) -> Self {
        let base = RationalInterval::new(BigRational::zero(), spec.initial_width.clone())
            .expect("initial width is positive");
        let fresh = spec.initial_width.clone();
        let c0 = Column::new(0, vec![base]);
        Self {
            spec,
            allow_infinite_measure,
            state: RwLock::new(BuildState { columns: vec![Arc::new(c0)], fresh }),
        }
    }

    pub fn spec(&self) -> &RankOneSpec {
        &self.spec
    }

    /// Total measure of the space constructed so far.
    pub fn total_measure(&self) -> BigRational {
        self.state.read().unwrap().fresh.clone()
    }

    /// The column at stage `n`, building intermediate stages on demand.
    pub fn column(&self, n: usize) -> Result<Arc<Column>> {
        {
            let state = self.state.read().unwrap();
            if n < state.columns.len() {
                return Ok(state.columns[n].clone());
            }
        }
        let mut state = self.state.write().unwrap();
        while state.columns.len() <= n {
            self.build_next(&mut state)?;
        }
        Ok(state.columns[n].clone())
    }

    fn build_next(&self, state: &mut BuildState) -> Result<()> {
        let n = state.columns.len() - 1;
        let stage = self.spec.stage(n)?;
        let col = state.columns[n].clone();
        let r = stage.cuts;
        let total_spacers: u64 = stage.spacers.iter().sum();
        let new_height = r as u64 * col.height() + total_spacers;
        if new_height > MAX_LEVELS_PER_COLUMN {
            return Err(Error::BudgetExceeded(format!(
                "column at stage {} would have {} levels (cap {})",
                n + 1,
                new_height,
                MAX_LEVELS_PER_COLUMN
            )));
        }

        // Cut every level into r sublevels with lengths in proportion p.
        let mut sub: Vec<Vec<RationalInterval>> = vec![Vec::with_capacity(col.levels.len()); r];
        for lvl in &col.levels {
            let len = lvl.length();
            let mut left = lvl.left.clone();
            for (j, s) in sub.iter_mut().enumerate() {
                let w = &len * &stage.proportions.entries()[j];
                let right = &left + &w;
                s.push(RationalInterval { left, right: right.clone() });
                left = right;
            }
            debug_assert_eq!(&left, &lvl.right);
        }

        // Stack subcolumns left-to-right, spacers on top of each.
        let cap = self.spec.space_cap();
        let mut new_levels = Vec::with_capacity(new_height as usize);
        for (j, subcol) in sub.into_iter().enumerate() {
            let spacer_width = subcol.last().unwrap().length();
            new_levels.extend(subcol);
            for _ in 0..stage.spacers[j] {
                let left = state.fresh.clone();
                let right = &left + &spacer_width;
                if !self.allow_infinite_measure && right > cap {
                    return Err(Error::BudgetExceeded(format!(
                        "cumulative measure {} exceeds space cap {}",
                        format_rational(&right),
                        format_rational(&cap)
                    )));
                }
                state.fresh = right.clone();
                new_levels.push(RationalInterval { left, right });
            }
        }
        state.columns.push(Arc::new(Column::new(n + 1, new_levels)));
        Ok(())
    }

    /// T(x) = lim T_n(x): the column map of the smallest stage at which x
    /// lies in a non-top level.
    pub fn apply_t(&self, x: &BigRational, depth_cap: usize) -> Result<BigRational> {
        self.branch_through(x, depth_cap).map(|(_, _, y)| y)
    }

    /// Inverse map: the column map of the smallest stage at which x lies in
    /// a non-bottom level.
    pub fn apply_t_inverse(&self, x: &BigRational, depth_cap: usize) -> Result<BigRational> {
        self.check_inside(x)?;
        for n in 0..=depth_cap {
            let col = self.column(n)?;
            if let Some(i) = col.level_of_point(x) {
                if i > 0 {
                    return Ok(map_point_affine(x, &col.levels[i], &col.levels[i - 1]));
                }
            }
        }
        Err(Error::UndefinedAtDepth { depth_cap })
    }

    /// Radon-Nikodym derivative at x: destination-length over source-length
    /// of the affine branch through x (1 everywhere iff measure-preserving).
    pub fn radon_nikodym(&self, x: &BigRational, depth_cap: usize) -> Result<BigRational> {
        self.branch_through(x, depth_cap)
            .map(|(src, dst, _)| dst.length() / src.length())
    }

    fn check_inside(&self, x: &BigRational) -> Result<()> {
        let fresh = self.total_measure();
        if x.is_negative() || *x >= fresh {
            return Err(Error::OutsideSpace(format!(
                "{} not in [0, {})",
                format_rational(x),
                format_rational(&fresh)
            )));
        }
        Ok(())
    }

    fn branch_through(
        &self,
        x: &BigRational,
        depth_cap: usize,
    ) -> Result<(RationalInterval, RationalInterval, BigRational)> {
        self.check_inside(x)?;
        for n in 0..=depth_cap {
            let col = self.column(n)?;
            if let Some(i) = col.level_of_point(x) {
                if (i as u64) < col.height() - 1 {
                    let src = col.levels[i].clone();
                    let dst = col.levels[i + 1].clone();
                    let y = map_point_affine(x, &src, &dst);
                    return Ok((src, dst, y));
                }
            }
        }
        Err(Error::UndefinedAtDepth { depth_cap })
    }

    /// One application of T to a whole interval, splitting at affine-branch
    /// boundaries. Returns the exact image as disjoint intervals.
    fn image_once(&self, iv: &RationalInterval, depth_cap: usize) -> Result<Vec<RationalInterval>> {
        for n in 0..=depth_cap {
            let col = self.column(n)?;
            if let Some(i) = col.level_of_interval(iv) {
                if (i as u64) < col.height() - 1 {
                    return Ok(vec![iv.map_affine(&col.levels[i], &col.levels[i + 1])]);
                }
                continue; // inside the top level: deepen
            }
            if let Some(pieces) = col.split_cover(iv) {
                if pieces.len() > 1 {
                    let mut out = Vec::new();
                    for (_, piece) in pieces {
                        out.extend(self.image_once(&piece, depth_cap)?);
                    }
                    return Ok(out);
                }
            }
            // Not yet covered at this stage (spacer space appears later).
        }
        Err(Error::UndefinedAtDepth { depth_cap })
    }

    /// One application of T^-1 to a whole interval.
    fn preimage_once(&self, iv: &RationalInterval, depth_cap: usize) -> Result<Vec<RationalInterval>> {
        for n in 0..=depth_cap {
            let col = self.column(n)?;
            if let Some(i) = col.level_of_interval(iv) {
                if i > 0 {
                    return Ok(vec![iv.map_affine(&col.levels[i], &col.levels[i - 1])]);
                }
                continue; // bottom level: deepen
            }
            if let Some(pieces) = col.split_cover(iv) {
                if pieces.len() > 1 {
                    let mut out = Vec::new();
                    for (_, piece) in pieces {
                        out.extend(self.preimage_once(&piece, depth_cap)?);
                    }
                    return Ok(out);
                }
            }
        }
        Err(Error::UndefinedAtDepth { depth_cap })
    }

    /// Exact image of J under T^n as a finite union of rational intervals,
    /// plus the diameter sup |T^n y - T^n y'| of the image.
    pub fn transform_interval(
        &self,
        j: &RationalInterval,
        n: u64,
        depth_cap: usize,
    ) -> Result<(Vec<RationalInterval>, BigRational)> {
        let mut pieces = vec![j.clone()];
        for _ in 0..n {
            let mut next = Vec::new();
            for p in &pieces {
                next.extend(self.image_once(p, depth_cap)?);
            }
            pieces = merge_intervals(next);
        }
        let diameter = interval_set_diameter(&pieces);
        Ok((pieces, diameter))
    }

    /// Exact preimage of a finite union of intervals under one application
    /// of T.
    pub fn preimage_intervals(
        &self,
        set: &[RationalInterval],
        depth_cap: usize,
    ) -> Result<Vec<RationalInterval>> {
        let mut out = Vec::new();
        for iv in set {
            out.extend(self.preimage_once(iv, depth_cap)?);
        }
        Ok(merge_intervals(out))
    }

    /// lambda((x - eps, x + eps) ∩ [0, total)): 2*eps for interior points,
    /// truncated at the space boundary.
    pub fn lebesgue_ball_measure(&self, x: &BigRational, eps: &BigRational) -> Result<BigRational> {
        if !eps.is_positive() {
            return Err(Error::InvalidParameter("radius must be positive".into()));
        }
        self.check_inside(x)?;
        let total = self.total_measure();
        let lo = if (x - eps).is_negative() { BigRational::zero() } else { x - eps };
        let hi = if x + eps > total { total } else { x + eps };
        Ok(hi - lo)
    }

    /// Uniform sample from the constructed space [0, total). `depth` controls
    /// how much of the tower is built before sampling.
    pub fn sample_point(&self, seed: u64, depth: usize) -> Result<BigRational> {
        self.column(depth)?;
        let total = self.total_measure();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: f64 = rng.gen_range(0.0..1.0);
        Ok(rational_from_f64(u)? * total)
    }
}

fn merge_intervals(mut pieces: Vec<RationalInterval>) -> Vec<RationalInterval> {
    if pieces.len() <= 1 {
        return pieces;
    }
    pieces.sort_by(|a, b| a.left.cmp(&b.left));
    let mut out: Vec<RationalInterval> = Vec::with_capacity(pieces.len());
    for p in pieces {
        if let Some(last) = out.last_mut() {
            if last.right >= p.left {
                if p.right > last.right {
                    last.right = p.right;
                }
                continue;
            }
        }
        out.push(p);
    }
    out
}

fn interval_set_diameter(pieces: &[RationalInterval]) -> BigRational {
    let min = pieces.iter().map(|p| &p.left).min().expect("nonempty image");
    let max = pieces.iter().map(|p| &p.right).max().expect("nonempty image");
    max - min
}

/// Structural validation plus a finite-depth summary of a spec.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub issues: Vec<String>,
    pub heights: Vec<u64>,
    pub total_measure: String,
    pub min_width: String,
    pub max_width: String,
    pub widths_shrinking: bool,
    pub within_space_cap: bool,
    pub measure_preserving: bool,
}

/// Build `depth` stages and report heights, widths, and whether the total
/// measure stays under the configured cap.
pub fn validate_spec(spec: &RankOneSpec, depth: usize) -> ValidationReport {
    let sys = RankOneSystem::new(spec.clone());
    let mut issues = Vec::new();
    let mut heights = Vec::new();
    let mut within_cap = true;
    for n in 0..=depth {
        match sys.column(n) {
            Ok(col) => heights.push(col.height()),
            Err(e) => {
                within_cap = false;
                issues.push(format!("stage {n}: {e}"));
                break;
            }
        }
    }
    let last = heights.len().saturating_sub(1);
    let (min_w, max_w, w0) = match (sys.column(last), sys.column(0)) {
        (Ok(col), Ok(base)) => (col.min_width().clone(), col.max_width().clone(), base.max_width().clone()),
        _ => (BigRational::zero(), BigRational::zero(), BigRational::zero()),
    };
    let widths_shrinking = last == 0 || max_w < w0;
    ValidationReport {
        valid: issues.is_empty(),
        issues,
        heights,
        total_measure: format_rational(&sys.total_measure()),
        min_width: format_rational(&min_w),
        max_width: format_rational(&max_w),
        widths_shrinking,
        within_space_cap: within_cap,
        measure_preserving: spec.measure_preserving(),
    }
}
