//! Basin samples and power-law fits.
//!
//! Fits are ordinary least squares on `(log₁₀ x, log₁₀ y)`. Samples with a
//! non-positive coordinate (sources have zero volume and zero length) cannot
//! be logged; they are dropped and counted in [`ScalingFit::excluded`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{OcnError, Result};
use crate::grid::GridSpec;
use crate::metrics::TreeMetrics;
use crate::scalar::Scalar;
use crate::tree::Tree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasinKind {
    /// One sample per tree: the outlet.
    Whole,
    /// One sample per node.
    Subbasin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Area,
    Volume,
    Length,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Area => "area",
            Field::Volume => "volume",
            Field::Length => "length",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasinSample<T> {
    pub area: u64,
    pub volume: u64,
    pub upstream_length: T,
    pub side: usize,
    pub dimension: usize,
    pub kind: BasinKind,
}

impl<T: Scalar> BasinSample<T> {
    pub fn get(&self, field: Field) -> T {
        match field {
            Field::Area => T::of_count(self.area),
            Field::Volume => T::of_count(self.volume),
            Field::Length => self.upstream_length,
        }
    }
}

/// Which samples enter a fit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleFilter {
    pub label: String,
    pub kind: BasinKind,
    pub area_min: u64,
    pub area_max: Option<u64>,
    /// Restrict to trees of this dimension.
    pub dimension: Option<usize>,
    /// Restrict to trees of this grid side.
    pub side: Option<usize>,
    /// In subbasin mode, whether the outlet's own (whole) basin is included.
    pub include_outlet: bool,
}

impl Default for SampleFilter {
    fn default() -> Self {
        Self {
            label: String::new(),
            kind: BasinKind::Whole,
            area_min: 1,
            area_max: None,
            dimension: None,
            side: None,
            include_outlet: true,
        }
    }
}

impl SampleFilter {
    pub fn whole() -> Self {
        Self {
            label: "whole basins".into(),
            ..Self::default()
        }
    }

    pub fn subbasins() -> Self {
        Self {
            label: "all subbasins".into(),
            kind: BasinKind::Subbasin,
            ..Self::default()
        }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn area_range(mut self, min: u64, max: Option<u64>) -> Self {
        self.area_min = min;
        self.area_max = max;
        self
    }

    pub fn in_dimension(mut self, dimension: usize) -> Self {
        self.dimension = Some(dimension);
        self
    }

    pub fn of_side(mut self, side: usize) -> Self {
        self.side = Some(side);
        self
    }

    pub fn proper_only(mut self) -> Self {
        self.include_outlet = false;
        self
    }

    fn admits_area(&self, area: u64) -> bool {
        area >= self.area_min && self.area_max.is_none_or(|m| area <= m)
    }
}

impl fmt::Display for SampleFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            BasinKind::Whole => "whole",
            BasinKind::Subbasin if self.include_outlet => "subbasin",
            BasinKind::Subbasin => "proper-subbasin",
        };
        write!(f, "{kind}")?;
        if let Some(d) = self.dimension {
            write!(f, " dim={d}")?;
        }
        if let Some(s) = self.side {
            write!(f, " side={s}")?;
        }
        match self.area_max {
            Some(m) => write!(f, " area=[{},{}]", self.area_min, m),
            None => write!(f, " area>={}", self.area_min),
        }
    }
}

/// Whole basins and all subbasins, for each dimension.
pub fn length_table_filters() -> Vec<SampleFilter> {
    [2, 3]
        .into_iter()
        .flat_map(|d| {
            [
                SampleFilter::whole()
                    .in_dimension(d)
                    .labeled(format!("{d}d whole basins")),
                SampleFilter::subbasins()
                    .in_dimension(d)
                    .labeled(format!("{d}d all subbasins")),
            ]
        })
        .collect()
}

/// Eight 3D populations for volume fits. `large` and `small` are the sides of
/// the largest and a mid-sized grid of the ensemble.
pub fn volume_table_filters(large: usize, small: usize) -> Vec<SampleFilter> {
    let sub = || SampleFilter::subbasins().in_dimension(3);
    vec![
        SampleFilter::whole()
            .in_dimension(3)
            .labeled("whole networks"),
        sub().labeled("all subbasins"),
        sub()
            .of_side(large)
            .labeled(format!("all subbasins of {large}^3 network")),
        sub()
            .area_range(1001, None)
            .labeled("subbasins with area > 1000"),
        sub()
            .of_side(large)
            .area_range(1001, None)
            .labeled(format!("subbasins of {large}^3 network with area > 1000")),
        sub()
            .area_range(1, Some(1000))
            .labeled("all subbasins with area <= 1000"),
        sub()
            .of_side(large)
            .area_range(1, Some(100))
            .labeled(format!("subbasins of {large}^3 network with area <= 100")),
        sub()
            .of_side(small)
            .labeled(format!("subbasins of {small}^3 network")),
    ]
}

/// A finished tree with its grid shape and metrics.
#[derive(Debug, Clone)]
pub struct BasinMetrics<T> {
    pub dimension: usize,
    pub side: usize,
    pub root: usize,
    pub metrics: TreeMetrics<T>,
}

impl<T: Scalar> BasinMetrics<T> {
    pub fn new(spec: &GridSpec, tree: &Tree<T>) -> Result<Self> {
        Ok(Self {
            dimension: spec.dimension,
            side: spec.side,
            root: tree.root(),
            metrics: TreeMetrics::compute(tree)?,
        })
    }
}

/// Whole mode yields each tree's outlet; subbasin mode yields every node (the
/// outlet only when `include_outlet`). Samples outside the area range or the
/// dimension/side restriction are skipped.
pub fn collect_samples<T: Scalar>(
    basins: &[BasinMetrics<T>],
    filter: &SampleFilter,
) -> Vec<BasinSample<T>> {
    let mut out = Vec::new();
    for b in basins {
        if filter.dimension.is_some_and(|d| d != b.dimension)
            || filter.side.is_some_and(|s| s != b.side)
        {
            continue;
        }
        let sample = |i: usize| BasinSample {
            area: b.metrics.area[i],
            volume: b.metrics.volume[i],
            upstream_length: b.metrics.upstream_length[i],
            side: b.side,
            dimension: b.dimension,
            kind: filter.kind,
        };
        match filter.kind {
            BasinKind::Whole => {
                if filter.admits_area(b.metrics.area[b.root]) {
                    out.push(sample(b.root));
                }
            }
            BasinKind::Subbasin => {
                for i in 0..b.metrics.area.len() {
                    if i == b.root && !filter.include_outlet {
                        continue;
                    }
                    if filter.admits_area(b.metrics.area[i]) {
                        out.push(sample(i));
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum FitMode {
    /// Every sample is one regression point.
    #[default]
    Raw,
    /// Points are averaged inside equal-width bins of `log₁₀ x` first.
    Binned { bins: usize },
    /// `y` is averaged over all samples sharing the same `x`, and the fit runs
    /// through the per-`x` means.
    #[serde(rename = "area-mean")]
    AreaMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit<T> {
    pub x: Field,
    pub y: Field,
    pub exponent: T,
    /// `log₁₀` of the prefactor.
    pub intercept: T,
    pub r_squared: T,
    /// Regression points actually used (bins in binned mode).
    pub points: usize,
    /// Samples passed in.
    pub samples: usize,
    /// Samples dropped for a non-positive coordinate.
    pub excluded: usize,
    pub filter: String,
}

/// Least-squares line through `(xs, ys)`: returns `(slope, intercept, r²)`.
pub fn ols<T: Scalar>(xs: &[T], ys: &[T]) -> Result<(T, T, T)> {
    if xs.len() != ys.len() {
        return Err(OcnError::config("x and y lengths differ"));
    }
    if xs.len() < 3 {
        return Err(OcnError::InsufficientData(format!(
            "{} points, need at least 3",
            xs.len()
        )));
    }
    let n = T::of_count(xs.len() as u64);
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() || xs.iter().all(|&x| x == xs[0]) {
        return Err(OcnError::InsufficientData("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == T::zero() {
        T::one()
    } else {
        let ss_res: T = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| {
                let r = y - (intercept + slope * x);
                r * r
            })
            .sum();
        (T::one() - ss_res / syy).max(T::zero()).min(T::one())
    };
    Ok((slope, intercept, r2))
}

pub fn fit_power_law<T: Scalar>(
    samples: &[BasinSample<T>],
    x: Field,
    y: Field,
    mode: FitMode,
    filter: &SampleFilter,
) -> Result<ScalingFit<T>> {
    let pairs: Vec<(T, T)> = samples
        .iter()
        .map(|s| (s.get(x), s.get(y)))
        .filter(|&(a, b)| a > T::zero() && b > T::zero())
        .collect();
    let excluded = samples.len() - pairs.len();
    if pairs.len() < 3 {
        return Err(OcnError::InsufficientData(format!(
            "{} positive samples for {} vs {} ({filter}), need at least 3",
            pairs.len(),
            y.name(),
            x.name()
        )));
    }
    let logs = |p: Vec<(T, T)>| -> Vec<(T, T)> {
        p.into_iter().map(|(a, b)| (a.log10(), b.log10())).collect()
    };
    let (lx, ly): (Vec<T>, Vec<T>) = match mode {
        FitMode::Raw => logs(pairs).into_iter().unzip(),
        FitMode::Binned { bins } => bin_means(&logs(pairs), bins)?,
        FitMode::AreaMean => logs(group_means(pairs)).into_iter().unzip(),
    };
    let (exponent, intercept, r_squared) = ols(&lx, &ly)?;
    Ok(ScalingFit {
        x,
        y,
        exponent,
        intercept,
        r_squared,
        points: lx.len(),
        samples: samples.len(),
        excluded,
        filter: filter.to_string(),
    })
}

fn group_means<T: Scalar>(mut pairs: Vec<(T, T)>) -> Vec<(T, T)> {
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<(T, T)> = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let x = pairs[i].0;
        let mut j = i;
        let mut sum = T::zero();
        while j < pairs.len() && pairs[j].0 == x {
            sum = sum + pairs[j].1;
            j += 1;
        }
        out.push((x, sum / T::of_count((j - i) as u64)));
        i = j;
    }
    out
}

fn bin_means<T: Scalar>(pairs: &[(T, T)], bins: usize) -> Result<(Vec<T>, Vec<T>)> {
    if bins < 3 {
        return Err(OcnError::config("binned fits need at least 3 bins"));
    }
    let lo = pairs.iter().map(|p| p.0).fold(T::infinity(), T::min);
    let hi = pairs.iter().map(|p| p.0).fold(T::neg_infinity(), T::max);
    let width = (hi - lo) / T::of_count(bins as u64);
    let mut acc = vec![(T::zero(), T::zero(), 0u64); bins];
    for &(x, y) in pairs {
        let k = if width > T::zero() {
            ((x - lo) / width).to_usize().unwrap_or(0).min(bins - 1)
        } else {
            0
        };
        acc[k].0 = acc[k].0 + x;
        acc[k].1 = acc[k].1 + y;
        acc[k].2 += 1;
    }
    Ok(acc
        .into_iter()
        .filter(|a| a.2 > 0)
        .map(|(sx, sy, c)| (sx / T::of_count(c), sy / T::of_count(c)))
        .unzip())
}

/// Length exponent `h`, volume exponent `α`, the gap `α − (1 + h)` and the
/// metabolic analog `1/α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllometryReport<T> {
    pub h: T,
    pub alpha: T,
    pub discrepancy: T,
    pub inverse_alpha: T,
}

pub fn allometry_report<T: Scalar>(h: T, alpha: T) -> AllometryReport<T> {
    AllometryReport {
        h,
        alpha,
        discrepancy: alpha - (T::one() + h),
        inverse_alpha: T::one() / alpha,
    }
}

/// Builds the report from a length fit and a volume fit over `area`.
pub fn allometry_from_fits<T: Scalar>(
    length: &ScalingFit<T>,
    volume: &ScalingFit<T>,
) -> Result<AllometryReport<T>> {
    if length.x != Field::Area || length.y != Field::Length {
        return Err(OcnError::config("first fit must be length against area"));
    }
    if volume.x != Field::Area || volume.y != Field::Volume {
        return Err(OcnError::config("second fit must be volume against area"));
    }
    if length.filter != volume.filter {
        return Err(OcnError::config(format!(
            "fits use different filters: {} vs {}",
            length.filter, volume.filter
        )));
    }
    Ok(allometry_report(length.exponent, volume.exponent))
}
