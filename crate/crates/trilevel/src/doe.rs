//! The factorial study: an L9(3^3) orthogonal design over the temperature
//! difference and the two dissipation modes, evaluated by sweep-and-maximize,
//! then range analysis, variance analysis, and best-combination selection.
//!
//! The analysis half is pure arithmetic on nine (P, eta, P*eta) triples, so
//! it also runs standalone on a bundled results fixture without touching
//! either engine.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dressed::{carnot_efficiency, BathSpec};
use crate::error::{Error, Result};
use crate::kinetic::WorkChannelClosure;
use crate::stats::f_survival;
use crate::sweep::{run_sweep, EngineKind, GridSpec, SweepResult};

/// The three design factors, in the column order of the design table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Factor {
    /// Temperature-difference level (both inverse temperatures move).
    #[serde(rename = "dbeta")]
    DeltaBeta,
    /// Resonant dissipation: each bath on its intended transition.
    #[serde(rename = "dr")]
    Resonant,
    /// Detuning dissipation: the crossed, leakage-carrying couplings.
    #[serde(rename = "dd")]
    Detuning,
}

impl Factor {
    pub const ALL: [Factor; 3] = [Factor::DeltaBeta, Factor::Resonant, Factor::Detuning];

    /// Stable short label used in file headers.
    pub fn label(self) -> &'static str {
        match self {
            Factor::DeltaBeta => "dbeta",
            Factor::Resonant => "dr",
            Factor::Detuning => "dd",
        }
    }

    fn index(self) -> usize {
        match self {
            Factor::DeltaBeta => 0,
            Factor::Resonant => 1,
            Factor::Detuning => 2,
        }
    }
}

/// The three performance metrics the study ranks factors by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "p")]
    Power,
    #[serde(rename = "eta")]
    Efficiency,
    #[serde(rename = "peta")]
    Efficacy,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Power, Metric::Efficiency, Metric::Efficacy];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Power => "p",
            Metric::Efficiency => "eta",
            Metric::Efficacy => "peta",
        }
    }

    fn index(self) -> usize {
        match self {
            Metric::Power => 0,
            Metric::Efficiency => 1,
            Metric::Efficacy => 2,
        }
    }
}

/// Human-readable name of a 1-based level index.
pub fn level_name(level: u8) -> &'static str {
    match level {
        1 => "low",
        2 => "medium",
        3 => "high",
        _ => "?",
    }
}

/// Level definitions for the three factors. Each level fixes one pair of
/// physical parameters; see the field docs for which pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorLevels {
    /// (beta_c, beta_h) per level.
    pub dbeta: [(f64, f64); 3],
    /// (gamma_c at eps10, gamma_h at eps20) per level.
    pub dr: [(f64, f64); 3],
    /// (gamma_c at eps20, gamma_h at eps10) per level.
    pub dd: [(f64, f64); 3],
}

impl Default for FactorLevels {
    fn default() -> Self {
        FactorLevels {
            dbeta: [(5.0, 1.0), (2.5, 0.5), (1.0, 0.2)],
            dr: [(0.5, 0.5), (1.0, 1.0), (2.0, 2.0)],
            dd: [(0.0, 0.0), (0.5, 0.5), (2.0, 2.0)],
        }
    }
}

impl FactorLevels {
    pub fn validate(&self) -> Result<()> {
        let fail = |why: String| Error::InvalidInput {
            what: "factor levels",
            why,
        };
        for (i, (bc, bh)) in self.dbeta.iter().enumerate() {
            if !(bc.is_finite() && *bc > 0.0 && bh.is_finite() && *bh > 0.0) {
                return Err(fail(format!(
                    "dbeta level {}: ({bc}, {bh}) must be positive",
                    i + 1
                )));
            }
        }
        for (name, levels) in [("dr", &self.dr), ("dd", &self.dd)] {
            for (i, (gc, gh)) in levels.iter().enumerate() {
                if !(gc.is_finite() && *gc >= 0.0 && gh.is_finite() && *gh >= 0.0) {
                    return Err(fail(format!(
                        "{name} level {}: ({gc}, {gh}) must be nonnegative",
                        i + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Bath parameters of one case, given its 1-based level triple.
    pub fn bath_spec(&self, levels: [u8; 3]) -> Result<BathSpec> {
        for l in levels {
            if !(1..=3).contains(&l) {
                return Err(Error::InvalidInput {
                    what: "case levels",
                    why: format!("level index {l} outside 1..=3"),
                });
            }
        }
        let (beta_c, beta_h) = self.dbeta[levels[0] as usize - 1];
        let (g_c_res, g_h_res) = self.dr[levels[1] as usize - 1];
        let (g_c_det, g_h_det) = self.dd[levels[2] as usize - 1];
        Ok(BathSpec {
            beta_c,
            beta_h,
            g_c_res,
            g_h_res,
            g_c_det,
            g_h_det,
        })
    }
}

/// The standard L9 layout: 1-based level indices per (case, factor).
pub const DESIGN_LAYOUT: [[u8; 3]; 9] = [
    [1, 1, 1],
    [1, 2, 3],
    [1, 3, 2],
    [2, 1, 3],
    [2, 2, 2],
    [2, 3, 1],
    [3, 1, 2],
    [3, 2, 1],
    [3, 3, 3],
];

/// One row of the design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoeCase {
    /// 1-based case number.
    pub id: u8,
    /// 1-based level per factor.
    pub levels: [u8; 3],
}

/// The full ordered design.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoeDesign {
    pub cases: [DoeCase; 9],
}

/// Checks the defining balance properties: each level three times per
/// column, and every ordered column pair covering all nine level
/// combinations exactly once.
pub fn verify_orthogonality(rows: &[[u8; 3]; 9]) -> Result<()> {
    for col in 0..3 {
        let mut counts = [0usize; 3];
        for row in rows {
            let l = row[col] as usize;
            if !(1..=3).contains(&l) {
                return Err(Error::Inconsistent(format!(
                    "design level {l} outside 1..=3"
                )));
            }
            counts[l - 1] += 1;
        }
        if counts != [3, 3, 3] {
            return Err(Error::Inconsistent(format!(
                "design column {col} is unbalanced: {counts:?}"
            )));
        }
    }
    for a in 0..3 {
        for b in (a + 1)..3 {
            let mut seen = [false; 9];
            for row in rows {
                let key = (row[a] as usize - 1) * 3 + (row[b] as usize - 1);
                if seen[key] {
                    return Err(Error::Inconsistent(format!(
                        "design columns ({a}, {b}) repeat a level pair"
                    )));
                }
                seen[key] = true;
            }
        }
    }
    Ok(())
}

/// Builds the design for a validated level set and re-verifies the
/// orthogonality invariant on the constant layout.
pub fn build_design(levels: &FactorLevels) -> Result<DoeDesign> {
    levels.validate()?;
    verify_orthogonality(&DESIGN_LAYOUT)?;
    let mut cases = [DoeCase {
        id: 0,
        levels: [0; 3],
    }; 9];
    for (i, row) in DESIGN_LAYOUT.iter().enumerate() {
        cases[i] = DoeCase {
            id: i as u8 + 1,
            levels: *row,
        };
    }
    Ok(DoeDesign { cases })
}

/// Grid maxima of one case, with the coordinates they were found at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case_id: u8,
    pub levels: [u8; 3],
    /// Largest power over engine-valid cells; 0 when never an engine.
    pub max_p: f64,
    pub argmax_p: (f64, f64),
    /// Largest efficiency, including the lam = 0 limit line.
    pub max_eta: f64,
    pub argmax_eta: (f64, f64),
    /// Largest efficacy P * eta.
    pub max_peta: f64,
    pub argmax_peta: (f64, f64),
    /// Smallest entropy production rate over all non-excluded cells.
    pub min_sigma: f64,
    /// Set when no cell of the grid operates as an engine; the maxima are
    /// then zeroed.
    pub never_engine: bool,
}

/// Sweeps one case and extracts the three maxima independently, each under
/// the first-hit row-major tie-break.
pub fn evaluate_case(
    case: &DoeCase,
    levels: &FactorLevels,
    grid: &GridSpec,
    engine: EngineKind,
    closure: &WorkChannelClosure,
) -> Result<(CaseResult, SweepResult)> {
    if grid.omega20.min > 1.0 || grid.omega20.max < 5.0 || grid.lam.min > 0.0 || grid.lam.max < 1.0
    {
        return Err(Error::InvalidInput {
            what: "case grid",
            why: "must cover omega20 in [1, 5] and lam in [0, 1]".into(),
        });
    }
    let baths = levels.bath_spec(case.levels)?;
    let sweep = run_sweep(engine, &baths, closure, grid)?;

    let mut best_p: Option<(f64, (f64, f64))> = None;
    let mut best_eta: Option<(f64, (f64, f64))> = None;
    let mut best_peta: Option<(f64, (f64, f64))> = None;
    let mut min_sigma: Option<f64> = None;
    for c in &sweep.cells {
        if c.excluded {
            continue;
        }
        if let Some(s) = c.sigma {
            if min_sigma.is_none_or(|m| s < m) {
                min_sigma = Some(s);
            }
        }
        if c.engine_ok {
            if let Some(p) = c.power {
                if best_p.is_none_or(|(m, _)| p > m) {
                    best_p = Some((p, (c.omega20, c.lam)));
                }
            }
            if let Some(pe) = c.efficacy {
                if best_peta.is_none_or(|(m, _)| pe > m) {
                    best_peta = Some((pe, (c.omega20, c.lam)));
                }
            }
        }
        if let Some(e) = c.eta {
            if best_eta.is_none_or(|(m, _)| e > m) {
                best_eta = Some((e, (c.omega20, c.lam)));
            }
        }
    }

    if baths.beta_c > baths.beta_h {
        let ceiling = carnot_efficiency(&baths)? + 1e-9;
        if let Some((eta, at)) = best_eta {
            if eta > ceiling {
                return Err(Error::Inconsistent(format!(
                    "case {}: efficiency {eta:.9} at {at:?} exceeds the Carnot bound",
                    case.id
                )));
            }
        }
    }

    let never_engine = best_p.is_none() && best_eta.is_none();
    let zero = (0.0, (0.0, 0.0));
    let (max_p, argmax_p) = best_p.unwrap_or(zero);
    let (max_eta, argmax_eta) = best_eta.unwrap_or(zero);
    let (max_peta, argmax_peta) = best_peta.unwrap_or(zero);
    Ok((
        CaseResult {
            case_id: case.id,
            levels: case.levels,
            max_p,
            argmax_p,
            max_eta,
            argmax_eta,
            max_peta,
            argmax_peta,
            min_sigma: min_sigma.unwrap_or(0.0),
            never_engine,
        },
        sweep,
    ))
}

/// Evaluates all nine cases in parallel, preserving case order.
pub fn run_design(
    design: &DoeDesign,
    levels: &FactorLevels,
    grid: &GridSpec,
    engine: EngineKind,
    closure: &WorkChannelClosure,
) -> Result<Vec<(CaseResult, SweepResult)>> {
    design
        .cases
        .par_iter()
        .map(|c| evaluate_case(c, levels, grid, engine, closure))
        .collect()
}

/// The metric triple of one case, the unit the analysis half works on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub case_id: u8,
    pub levels: [u8; 3],
    pub p: f64,
    pub eta: f64,
    pub peta: f64,
}

impl CaseMetrics {
    pub fn from_result(r: &CaseResult) -> Self {
        CaseMetrics {
            case_id: r.case_id,
            levels: r.levels,
            p: r.max_p,
            eta: r.max_eta,
            peta: r.max_peta,
        }
    }

    pub fn value(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Power => self.p,
            Metric::Efficiency => self.eta,
            Metric::Efficacy => self.peta,
        }
    }
}

fn check_alignment(metrics: &[CaseMetrics]) -> Result<()> {
    if metrics.len() != 9 {
        return Err(Error::Misaligned(format!(
            "expected 9 cases, got {}",
            metrics.len()
        )));
    }
    for (i, m) in metrics.iter().enumerate() {
        if m.case_id != i as u8 + 1 || m.levels != DESIGN_LAYOUT[i] {
            return Err(Error::Misaligned(format!(
                "row {} (case {}) does not follow the design layout",
                i + 1,
                m.case_id
            )));
        }
        for v in [m.p, m.eta, m.peta] {
            if !v.is_finite() {
                return Err(Error::Misaligned(format!(
                    "case {} carries a non-finite metric",
                    m.case_id
                )));
            }
        }
    }
    Ok(())
}

/// Level sums, means, and range of one (metric, factor) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeEntry {
    /// Sum of the metric over the three cases at each level.
    pub k: [f64; 3],
    /// Level means k / 3.
    pub kbar: [f64; 3],
    /// Spread max(kbar) - min(kbar).
    pub r: f64,
    /// 1-based level with the largest mean (first one on ties).
    pub best_level: u8,
    /// Set when the range is exactly zero and no level is preferred.
    pub no_preference: bool,
}

/// Full range analysis: entries indexed by metric then factor, plus the
/// per-metric factor ranking by descending range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeTable {
    pub entries: [[RangeEntry; 3]; 3],
    pub ranking: [[Factor; 3]; 3],
}

impl RangeTable {
    pub fn entry(&self, metric: Metric, factor: Factor) -> &RangeEntry {
        &self.entries[metric.index()][factor.index()]
    }

    pub fn ranking_for(&self, metric: Metric) -> [Factor; 3] {
        self.ranking[metric.index()]
    }
}

/// Range analysis of nine aligned case results.
pub fn range_analysis(metrics: &[CaseMetrics]) -> Result<RangeTable> {
    check_alignment(metrics)?;
    let blank = RangeEntry {
        k: [0.0; 3],
        kbar: [0.0; 3],
        r: 0.0,
        best_level: 1,
        no_preference: false,
    };
    let mut entries = [[blank; 3]; 3];
    let mut ranking = [[Factor::DeltaBeta; 3]; 3];
    for metric in Metric::ALL {
        for factor in Factor::ALL {
            let mut k = [0.0; 3];
            for m in metrics {
                k[m.levels[factor.index()] as usize - 1] += m.value(metric);
            }
            let kbar = k.map(|v| v / 3.0);
            let hi = kbar.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = kbar.iter().cloned().fold(f64::INFINITY, f64::min);
            let best = kbar.iter().position(|&v| v == hi).unwrap_or(0);
            let r = hi - lo;
            entries[metric.index()][factor.index()] = RangeEntry {
                k,
                kbar,
                r,
                best_level: best as u8 + 1,
                no_preference: r == 0.0,
            };
        }
        let mut order = Factor::ALL;
        order.sort_by(|a, b| {
            entries[metric.index()][b.index()]
                .r
                .total_cmp(&entries[metric.index()][a.index()].r)
        });
        ranking[metric.index()] = order;
    }
    Ok(RangeTable { entries, ranking })
}

/// One factor row of a variance table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnovaRow {
    pub factor: Factor,
    /// Sum of squared level-mean deviations, times 3.
    pub s: f64,
    pub df: u32,
    pub mean_square: f64,
    /// Infinite when the fit is saturated and the factor carries variance.
    pub f_value: f64,
    pub p_value: f64,
    /// Significance mark: "**" under 0.01, "*" under 0.05, else empty.
    pub mark: &'static str,
}

/// Variance analysis of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnovaMetric {
    pub metric: Metric,
    pub rows: [AnovaRow; 3],
    pub s_error: f64,
    pub df_error: u32,
    pub ms_error: f64,
    pub s_total: f64,
    /// Set when the residual sum collapsed to zero and was floored.
    pub saturated: bool,
}

/// Variance analysis of all three metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnovaTable {
    pub metrics: [AnovaMetric; 3],
}

impl AnovaTable {
    pub fn metric(&self, metric: Metric) -> &AnovaMetric {
        &self.metrics[metric.index()]
    }

    pub fn row(&self, metric: Metric, factor: Factor) -> &AnovaRow {
        &self.metric(metric).rows[factor.index()]
    }
}

fn significance_mark(p: f64) -> &'static str {
    if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Variance analysis of nine aligned case results: three factor rows at two
/// degrees of freedom each, against the two-degree residual of the
/// saturated L9 fit.
pub fn anova(metrics: &[CaseMetrics]) -> Result<AnovaTable> {
    check_alignment(metrics)?;
    let range = range_analysis(metrics)?;
    let blank = AnovaRow {
        factor: Factor::DeltaBeta,
        s: 0.0,
        df: 2,
        mean_square: 0.0,
        f_value: 0.0,
        p_value: 1.0,
        mark: "",
    };
    let mut table = [AnovaMetric {
        metric: Metric::Power,
        rows: [blank; 3],
        s_error: 0.0,
        df_error: 2,
        ms_error: 0.0,
        s_total: 0.0,
        saturated: false,
    }; 3];

    for metric in Metric::ALL {
        let grand = metrics.iter().map(|m| m.value(metric)).sum::<f64>() / 9.0;
        let s_total = metrics
            .iter()
            .map(|m| {
                let d = m.value(metric) - grand;
                d * d
            })
            .sum::<f64>();
        let mut s_factors = [0.0; 3];
        for factor in Factor::ALL {
            let kbar = range.entry(metric, factor).kbar;
            s_factors[factor.index()] = 3.0
                * kbar
                    .iter()
                    .map(|&v| {
                        let d = v - grand;
                        d * d
                    })
                    .sum::<f64>();
        }
        let mut s_error = s_total - s_factors.iter().sum::<f64>();
        let saturated = s_error <= 0.0;
        if saturated {
            s_error = 0.0;
        }
        let ms_error = s_error / 2.0;

        let mut rows = [blank; 3];
        for factor in Factor::ALL {
            let s = s_factors[factor.index()];
            let (f_value, p_value) = if saturated {
                if s > 0.0 {
                    (f64::INFINITY, 0.0)
                } else {
                    (0.0, 1.0)
                }
            } else {
                let f = s / s_error;
                (f, f_survival(f, 2, 2)?)
            };
            rows[factor.index()] = AnovaRow {
                factor,
                s,
                df: 2,
                mean_square: s / 2.0,
                f_value,
                p_value,
                mark: significance_mark(p_value),
            };
        }
        table[metric.index()] = AnovaMetric {
            metric,
            rows,
            s_error,
            df_error: 2,
            ms_error,
            s_total,
            saturated,
        };
    }
    Ok(AnovaTable { metrics: table })
}

/// Chosen level of one factor; `None` when the range analysis showed no
/// preference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BestPick {
    pub factor: Factor,
    pub level: Option<u8>,
}

/// Best combination for one metric. Picks are presented in the fixed
/// importance order detuning, resonant, temperature difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BestMetric {
    pub metric: Metric,
    pub picks: [BestPick; 3],
    /// True when the range ranking and the variance p ranking name the
    /// factors in the same order.
    pub rankings_agree: bool,
}

/// Best-combination report over all metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BestReport {
    pub metrics: [BestMetric; 3],
}

impl BestReport {
    pub fn metric(&self, metric: Metric) -> &BestMetric {
        &self.metrics[metric.index()]
    }
}

/// Presentation order of the factors in best-combination reports.
pub const PICK_ORDER: [Factor; 3] = [Factor::Detuning, Factor::Resonant, Factor::DeltaBeta];

/// Selects the optimal level per factor and metric, and cross-checks that
/// both analyses rank the factors identically. Disagreement is reported in
/// the output, never resolved silently.
pub fn select_best(range: &RangeTable, anova: &AnovaTable) -> BestReport {
    let mut metrics = [BestMetric {
        metric: Metric::Power,
        picks: [BestPick {
            factor: Factor::DeltaBeta,
            level: None,
        }; 3],
        rankings_agree: false,
    }; 3];
    for metric in Metric::ALL {
        let mut picks = [BestPick {
            factor: Factor::DeltaBeta,
            level: None,
        }; 3];
        for (slot, factor) in PICK_ORDER.into_iter().enumerate() {
            let entry = range.entry(metric, factor);
            picks[slot] = BestPick {
                factor,
                level: (!entry.no_preference).then_some(entry.best_level),
            };
        }
        let mut by_p = Factor::ALL;
        by_p.sort_by(|a, b| {
            anova
                .row(metric, *a)
                .p_value
                .total_cmp(&anova.row(metric, *b).p_value)
        });
        metrics[metric.index()] = BestMetric {
            metric,
            picks,
            rankings_agree: by_p == range.ranking_for(metric),
        };
    }
    BestReport { metrics }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Bundled nine-case reference results driving the analysis fixtures.
    fn reference_metrics() -> Vec<CaseMetrics> {
        let rows = [
            (0.023, 0.800, 0.014),
            (0.012, 0.401, 0.002),
            (0.057, 0.561, 0.022),
            (0.019, 0.591, 0.007),
            (0.048, 0.671, 0.023),
            (0.105, 0.800, 0.067),
            (0.024, 0.695, 0.013),
            (0.045, 0.800, 0.031),
            (0.038, 0.378, 0.009),
        ];
        rows.iter()
            .enumerate()
            .map(|(i, &(p, eta, peta))| CaseMetrics {
                case_id: i as u8 + 1,
                levels: DESIGN_LAYOUT[i],
                p,
                eta,
                peta,
            })
            .collect()
    }

    #[test]
    fn design_layout_and_orthogonality() {
        let design = build_design(&FactorLevels::default()).unwrap();
        assert_eq!(design.cases[5].id, 6);
        assert_eq!(design.cases[5].levels, [2, 3, 1]);
        assert_eq!(design.cases[8].levels, [3, 3, 3]);
        verify_orthogonality(&DESIGN_LAYOUT).unwrap();

        // breaking one row must trip the pair-coverage check
        let mut broken = DESIGN_LAYOUT;
        broken[8] = [1, 1, 1];
        assert!(verify_orthogonality(&broken).is_err());
    }

    #[test]
    fn level_composition() {
        let levels = FactorLevels::default();
        let b1 = levels.bath_spec([1, 1, 1]).unwrap();
        assert_eq!(
            (b1.beta_c, b1.beta_h, b1.g_c_res, b1.g_h_res, b1.g_c_det, b1.g_h_det),
            (5.0, 1.0, 0.5, 0.5, 0.0, 0.0)
        );
        let b5 = levels.bath_spec([2, 2, 2]).unwrap();
        assert_eq!(
            (b5.beta_c, b5.beta_h, b5.g_c_res, b5.g_c_det),
            (2.5, 0.5, 1.0, 0.5)
        );
        assert!(levels.bath_spec([0, 1, 1]).is_err());
        assert!(levels.bath_spec([1, 4, 1]).is_err());
    }

    #[test]
    fn range_analysis_reference() {
        let table = range_analysis(&reference_metrics()).unwrap();
        let e = table.entry(Metric::Power, Factor::DeltaBeta);
        assert_abs_diff_eq!(e.k[0], 0.092, epsilon = 1.5e-3);
        assert_abs_diff_eq!(e.kbar[0], 0.031, epsilon = 1.5e-3);
        assert_abs_diff_eq!(e.r, 0.026, epsilon = 1.5e-3);
        let e = table.entry(Metric::Efficiency, Factor::Detuning);
        assert_abs_diff_eq!(e.k[0], 2.400, epsilon = 1.5e-3);
        assert_abs_diff_eq!(e.kbar[0], 0.800, epsilon = 1.5e-3);
        assert_abs_diff_eq!(e.r, 0.343, epsilon = 1.5e-3);
        assert_eq!(e.best_level, 1);

        assert_eq!(
            table.ranking_for(Metric::Power),
            [Factor::Resonant, Factor::Detuning, Factor::DeltaBeta]
        );
        assert_eq!(
            table.ranking_for(Metric::Efficiency),
            [Factor::Detuning, Factor::Resonant, Factor::DeltaBeta]
        );
        assert_eq!(
            table.ranking_for(Metric::Efficacy),
            [Factor::Detuning, Factor::Resonant, Factor::DeltaBeta]
        );
    }

    /// Relative closeness against the larger magnitude; the reference S
    /// values carry their own rounding, so neither side is the true base.
    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs())
    }

    #[test]
    fn anova_reference() {
        let table = anova(&reference_metrics()).unwrap();
        let expected_s = [
            [1.17e-3, 3.13e-3, 1.83e-3],
            [1.53e-2, 2.05e-2, 1.77e-1],
            [6.26e-4, 7.18e-4, 1.48e-3],
        ];
        for metric in Metric::ALL {
            for factor in Factor::ALL {
                let got = table.row(metric, factor).s;
                let want = expected_s[metric.index()][factor.index()];
                assert!(
                    rel_close(got, want, 0.03),
                    "S {:?}/{:?}: {} vs {}",
                    metric,
                    factor,
                    got,
                    want
                );
            }
        }
        // the one coupling that clears the 5% bar
        for metric in Metric::ALL {
            for factor in Factor::ALL {
                let row = table.row(metric, factor);
                let significant = row.p_value < 0.05;
                assert_eq!(
                    significant,
                    metric == Metric::Efficiency && factor == Factor::Detuning,
                    "{:?}/{:?} p = {}",
                    metric,
                    factor,
                    row.p_value
                );
            }
        }
        let hot = table.row(Metric::Efficiency, Factor::Detuning);
        assert_abs_diff_eq!(hot.p_value, 0.0099, epsilon = 2e-4);
        assert!(!table.metric(Metric::Efficiency).saturated);

        // decomposition closes exactly by construction
        for metric in Metric::ALL {
            let m = table.metric(metric);
            let sum: f64 = m.rows.iter().map(|r| r.s).sum::<f64>() + m.s_error;
            assert_abs_diff_eq!(sum, m.s_total, epsilon = 1e-12);
        }
    }

    #[test]
    fn best_combination_reference() {
        let metrics = reference_metrics();
        let range = range_analysis(&metrics).unwrap();
        let table = anova(&metrics).unwrap();
        let best = select_best(&range, &table);

        let levels =
            |m: Metric| best.metric(m).picks.map(|p| p.level.unwrap());
        // picks ordered detuning, resonant, temperature difference
        assert_eq!(levels(Metric::Power), [1, 3, 2]);
        assert_eq!(levels(Metric::Efficiency), [1, 1, 2]);
        assert_eq!(levels(Metric::Efficacy), [1, 3, 2]);
        for m in Metric::ALL {
            assert!(best.metric(m).rankings_agree);
            assert_eq!(
                best.metric(m).picks.map(|p| p.factor),
                PICK_ORDER
            );
        }
    }

    #[test]
    fn degenerate_all_equal_metrics() {
        // 0.25 keeps every sum and mean exact, so the collapse to zero
        // range and zero variance is bitwise, not approximate
        let metrics: Vec<CaseMetrics> = (0..9)
            .map(|i| CaseMetrics {
                case_id: i as u8 + 1,
                levels: DESIGN_LAYOUT[i],
                p: 0.25,
                eta: 0.25,
                peta: 0.25,
            })
            .collect();
        let range = range_analysis(&metrics).unwrap();
        for metric in Metric::ALL {
            for factor in Factor::ALL {
                let e = range.entry(metric, factor);
                assert_eq!(e.r, 0.0);
                assert!(e.no_preference);
            }
        }
        let table = anova(&metrics).unwrap();
        for metric in Metric::ALL {
            assert!(table.metric(metric).saturated);
            for factor in Factor::ALL {
                let row = table.row(metric, factor);
                assert_eq!(row.s, 0.0);
                assert_eq!(row.mark, "");
            }
        }
        let best = select_best(&range, &table);
        for m in Metric::ALL {
            assert!(best.metric(m).picks.iter().all(|p| p.level.is_none()));
        }
    }

    #[test]
    fn scaling_leaves_rankings_alone() {
        let base = reference_metrics();
        let scaled: Vec<CaseMetrics> = base
            .iter()
            .map(|m| CaseMetrics {
                p: 2.5 * m.p,
                eta: 2.5 * m.eta,
                peta: 2.5 * m.peta,
                ..*m
            })
            .collect();
        let (r0, r1) = (range_analysis(&base).unwrap(), range_analysis(&scaled).unwrap());
        let (a0, a1) = (anova(&base).unwrap(), anova(&scaled).unwrap());
        for metric in Metric::ALL {
            assert_eq!(r0.ranking_for(metric), r1.ranking_for(metric));
            for factor in Factor::ALL {
                let (e0, e1) = (r0.entry(metric, factor), r1.entry(metric, factor));
                assert_abs_diff_eq!(e1.r, 2.5 * e0.r, epsilon = 1e-12);
                assert_eq!(e0.best_level, e1.best_level);
                let (w0, w1) = (a0.row(metric, factor), a1.row(metric, factor));
                assert_abs_diff_eq!(w1.s, 2.5 * 2.5 * w0.s, epsilon = 1e-12);
                assert_abs_diff_eq!(w1.f_value, w0.f_value, epsilon = 1e-9);
                assert_abs_diff_eq!(w1.p_value, w0.p_value, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn misalignment_is_rejected() {
        let mut metrics = reference_metrics();
        metrics.pop();
        match range_analysis(&metrics) {
            Err(Error::Misaligned(msg)) => assert!(msg.contains("expected 9 cases")),
            other => panic!("expected misalignment, got {other:?}"),
        }
        let mut wrong = reference_metrics();
        wrong[3].levels = [1, 1, 1];
        assert!(matches!(anova(&wrong), Err(Error::Misaligned(_))));
    }

    #[test]
    fn evaluate_case_small_grid() {
        let design = build_design(&FactorLevels::default()).unwrap();
        let grid = GridSpec::with_counts(21, 21);
        let (res, sweep) = evaluate_case(
            &design.cases[0],
            &FactorLevels::default(),
            &grid,
            EngineKind::Kinetic,
            &WorkChannelClosure::default(),
        )
        .unwrap();
        assert!(!res.never_engine);
        assert!(res.max_p > 0.0);
        assert!(res.max_eta <= 0.8 + 1e-9);
        assert!(res.max_eta > 0.78);
        assert!(res.min_sigma >= -1e-9 && res.min_sigma <= 1e-6);
        assert!(res.max_peta <= res.max_p * res.max_eta + 1e-12);
        assert_eq!(sweep.cells.len(), 441);
        // coordinates come from inside the box
        for at in [res.argmax_p, res.argmax_eta, res.argmax_peta] {
            assert!((1.0..=5.0).contains(&at.0));
            assert!((0.0..=1.0).contains(&at.1));
        }
    }

    #[test]
    fn evaluate_case_never_engine() {
        // equal temperatures at every level: nothing can run as an engine
        let levels = FactorLevels {
            dbeta: [(2.0, 2.0); 3],
            ..FactorLevels::default()
        };
        let design = build_design(&levels).unwrap();
        let grid = GridSpec::with_counts(6, 6);
        let (res, _) = evaluate_case(
            &design.cases[0],
            &levels,
            &grid,
            EngineKind::Kinetic,
            &WorkChannelClosure::default(),
        )
        .unwrap();
        assert!(res.never_engine);
        assert_eq!(res.max_p, 0.0);
        assert_eq!(res.max_eta, 0.0);
        assert_eq!(res.max_peta, 0.0);
        assert!(res.min_sigma >= -1e-15);
    }

    #[test]
    fn grid_must_cover_the_box() {
        let design = build_design(&FactorLevels::default()).unwrap();
        let mut grid = GridSpec::with_counts(5, 5);
        grid.omega20.max = 4.0;
        assert!(evaluate_case(
            &design.cases[0],
            &FactorLevels::default(),
            &grid,
            EngineKind::Kinetic,
            &WorkChannelClosure::default(),
        )
        .is_err());
    }
}
