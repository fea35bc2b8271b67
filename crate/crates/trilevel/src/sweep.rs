//! Grid evaluation over the (omega20, lam) parameter box.
//!
//! Both engines expose the same per-cell observable record, so the
//! factorial study and the command-line sweeps share one evaluation path.
//! Cells are evaluated in parallel and gathered in row-major order with the
//! omega20 axis outermost, which keeps output byte-identical from run to
//! run.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dressed::{dressed_energies, BathSpec, EngineSpec};
use crate::error::{Error, Result};
use crate::gkls;
use crate::kinetic::{self, WorkChannelClosure};

/// Which model evaluates the cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    /// Closed-form dressed-rate network.
    Kinetic,
    /// Full master-equation solve.
    Gkls,
}

impl EngineKind {
    /// Short name used in file metadata.
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Kinetic => "kinetic",
            EngineKind::Gkls => "gkls",
        }
    }
}

/// One uniformly spaced sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    /// Axis label used in file headers.
    pub name: String,
    /// First grid value.
    pub min: f64,
    /// Last grid value.
    pub max: f64,
    /// Number of grid points, at least 2.
    pub count: usize,
}

impl AxisSpec {
    pub fn new(name: &str, min: f64, max: f64, count: usize) -> Self {
        AxisSpec {
            name: name.to_string(),
            min,
            max,
            count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() || self.min >= self.max {
            return Err(Error::InvalidInput {
                what: "sweep axis",
                why: format!("{}: range [{}, {}] is empty", self.name, self.min, self.max),
            });
        }
        if self.count < 2 {
            return Err(Error::InvalidInput {
                what: "sweep axis",
                why: format!("{}: count {} must be at least 2", self.name, self.count),
            });
        }
        Ok(())
    }

    /// Grid value at an index; the endpoints are hit exactly.
    pub fn value(&self, idx: usize) -> f64 {
        self.min + (self.max - self.min) * idx as f64 / (self.count - 1) as f64
    }
}

/// The two sweep axes. The omega20 axis is the outer (slow) one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub omega20: AxisSpec,
    pub lam: AxisSpec,
}

impl GridSpec {
    /// The default box: omega20 in [1, 5] by lam in [0, 1].
    pub fn with_counts(n_omega: usize, n_lam: usize) -> Self {
        GridSpec {
            omega20: AxisSpec::new("omega20", 1.0, 5.0, n_omega),
            lam: AxisSpec::new("lam", 0.0, 1.0, n_lam),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.omega20.validate()?;
        self.lam.validate()
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.omega20.count * self.lam.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::with_counts(101, 101)
    }
}

/// Drive intensity used to evaluate efficiency limits on the lam = 0 line,
/// where both engines produce exactly zero power and the efficiency ratio
/// has to be taken slightly off the axis.
pub const LAMBDA_LIMIT_EPS: f64 = 1e-3;

/// Observables of one grid cell. Absent values mean the quantity is not
/// defined there: excluded cells carry nothing, non-engine cells carry no
/// efficiency, powerless cells carry no coherence split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellObs {
    /// Outer-axis coordinate.
    pub omega20: f64,
    /// Inner-axis coordinate.
    pub lam: f64,
    pub power: Option<f64>,
    /// Efficiency; on the lam = 0 line this is the limit value evaluated at
    /// [`LAMBDA_LIMIT_EPS`] and still recorded at lam = 0.
    pub eta: Option<f64>,
    pub efficacy: Option<f64>,
    pub sigma: Option<f64>,
    pub inv_eta_nd: Option<f64>,
    /// Heat-flow mode code as a float so it fits the common grid format.
    pub mode: Option<f64>,
    pub engine_ok: bool,
    /// True when the dressed ground state is inverted and the cell is left
    /// out of both engines.
    pub excluded: bool,
}

impl CellObs {
    fn excluded_at(omega20: f64, lam: f64) -> Self {
        CellObs {
            omega20,
            lam,
            power: None,
            eta: None,
            efficacy: None,
            sigma: None,
            inv_eta_nd: None,
            mode: None,
            engine_ok: false,
            excluded: true,
        }
    }
}

/// A finished sweep: the grid definition plus one record per cell in
/// row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub grid: GridSpec,
    pub engine: EngineKind,
    pub cells: Vec<CellObs>,
}

impl SweepResult {
    /// Observable names this sweep can emit, in emission order.
    pub fn observable_names(&self) -> &'static [&'static str] {
        match self.engine {
            EngineKind::Kinetic => &["power", "efficiency", "efficacy", "sigma"],
            EngineKind::Gkls => &[
                "power",
                "efficiency",
                "efficacy",
                "sigma",
                "inv_eta_nd",
                "mode",
            ],
        }
    }

    /// Row-major value array of one observable.
    pub fn observable(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let pick: fn(&CellObs) -> Option<f64> = match name {
            "power" => |c| c.power,
            "efficiency" => |c| c.eta,
            "efficacy" => |c| c.efficacy,
            "sigma" => |c| c.sigma,
            "inv_eta_nd" => |c| c.inv_eta_nd,
            "mode" => |c| c.mode,
            _ => {
                return Err(Error::InvalidInput {
                    what: "observable",
                    why: format!("unknown observable {name:?}"),
                })
            }
        };
        Ok(self.cells.iter().map(pick).collect())
    }
}

fn kinetic_cell(
    omega20: f64,
    lam: f64,
    baths: &BathSpec,
    closure: &WorkChannelClosure,
) -> Result<CellObs> {
    let spec = EngineSpec::bare(omega20, lam);
    if dressed_energies(&spec).inverted_ground() {
        return Ok(CellObs::excluded_at(omega20, lam));
    }
    let r = kinetic::evaluate(&spec, baths, closure)?;
    let eta = if lam == 0.0 {
        kinetic_limit_eta(omega20, baths, closure)?
    } else {
        r.efficiency
    };
    Ok(CellObs {
        omega20,
        lam,
        power: Some(r.power),
        eta,
        efficacy: r.efficacy,
        sigma: Some(r.sigma_avg),
        inv_eta_nd: None,
        mode: None,
        engine_ok: r.engine_ok,
        excluded: false,
    })
}

fn kinetic_limit_eta(
    omega20: f64,
    baths: &BathSpec,
    closure: &WorkChannelClosure,
) -> Result<Option<f64>> {
    let spec = EngineSpec::bare(omega20, LAMBDA_LIMIT_EPS);
    if dressed_energies(&spec).inverted_ground() {
        return Ok(None);
    }
    Ok(kinetic::evaluate(&spec, baths, closure)?.efficiency)
}

fn gkls_cell(omega20: f64, lam: f64, baths: &BathSpec) -> Result<CellObs> {
    let spec = EngineSpec::bare(omega20, lam);
    if dressed_energies(&spec).inverted_ground() {
        return Ok(CellObs::excluded_at(omega20, lam));
    }
    let r = gkls::evaluate(&spec, baths)?;
    let eta = if lam == 0.0 {
        gkls_limit_eta(omega20, baths)?
    } else {
        r.efficiency
    };
    Ok(CellObs {
        omega20,
        lam,
        power: Some(r.power),
        eta,
        efficacy: r.efficacy,
        sigma: Some(r.sigma),
        inv_eta_nd: r.inv_eta_nd,
        mode: r.mode.map(f64::from),
        engine_ok: r.engine_ok,
        excluded: false,
    })
}

fn gkls_limit_eta(omega20: f64, baths: &BathSpec) -> Result<Option<f64>> {
    let spec = EngineSpec::bare(omega20, LAMBDA_LIMIT_EPS);
    if dressed_energies(&spec).inverted_ground() {
        return Ok(None);
    }
    Ok(gkls::evaluate(&spec, baths)?.efficiency)
}

/// Evaluates the whole grid with the chosen engine. Cells are computed in
/// parallel; the output order is the deterministic row-major one.
pub fn run_sweep(
    engine: EngineKind,
    baths: &BathSpec,
    closure: &WorkChannelClosure,
    grid: &GridSpec,
) -> Result<SweepResult> {
    grid.validate()?;
    baths.validate()?;
    closure.validate()?;
    let n_lam = grid.lam.count;
    let cells: Vec<Result<CellObs>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let omega20 = grid.omega20.value(idx / n_lam);
            let lam = grid.lam.value(idx % n_lam);
            match engine {
                EngineKind::Kinetic => kinetic_cell(omega20, lam, baths, closure),
                EngineKind::Gkls => gkls_cell(omega20, lam, baths),
            }
        })
        .collect();
    let cells = cells.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        grid: grid.clone(),
        engine,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn demo_baths() -> BathSpec {
        BathSpec::uniform(5.0, 1.0, 2.0)
    }

    #[test]
    fn axis_hits_endpoints_exactly() {
        let ax = AxisSpec::new("omega20", 1.0, 5.0, 101);
        assert_eq!(ax.value(0), 1.0);
        assert_eq!(ax.value(100), 5.0);
        assert_abs_diff_eq!(ax.value(50), 3.0, epsilon = 1e-15);
        let lam = AxisSpec::new("lam", 0.0, 1.0, 101);
        assert_eq!(lam.value(0), 0.0);
        assert_eq!(lam.value(100), 1.0);
    }

    #[test]
    fn axis_validation() {
        assert!(AxisSpec::new("x", 1.0, 1.0, 5).validate().is_err());
        assert!(AxisSpec::new("x", 0.0, 1.0, 1).validate().is_err());
        assert!(AxisSpec::new("x", 0.0, 1.0, 2).validate().is_ok());
    }

    #[test]
    fn row_major_layout() {
        let grid = GridSpec::with_counts(3, 4);
        let sweep = run_sweep(
            EngineKind::Kinetic,
            &demo_baths(),
            &WorkChannelClosure::default(),
            &grid,
        )
        .unwrap();
        assert_eq!(sweep.cells.len(), 12);
        // cell (i, j) sits at i * 4 + j; probe (1, 2)
        let c = &sweep.cells[6];
        assert_abs_diff_eq!(c.omega20, 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.lam, 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn inverted_corner_is_excluded() {
        let grid = GridSpec::with_counts(5, 5);
        let sweep = run_sweep(
            EngineKind::Kinetic,
            &demo_baths(),
            &WorkChannelClosure::default(),
            &grid,
        )
        .unwrap();
        // only the (omega20, lam) = (1, 1) corner has eps10 <= 0
        let excluded: Vec<_> = sweep.cells.iter().filter(|c| c.excluded).collect();
        assert_eq!(excluded.len(), 1);
        assert_eq!(excluded[0].omega20, 1.0);
        assert_eq!(excluded[0].lam, 1.0);
        assert_eq!(excluded[0].power, None);
    }

    #[test]
    fn lam_zero_line_has_limit_efficiency() {
        let grid = GridSpec::with_counts(5, 3);
        let sweep = run_sweep(
            EngineKind::Kinetic,
            &demo_baths(),
            &WorkChannelClosure::default(),
            &grid,
        )
        .unwrap();
        for c in sweep.cells.iter().filter(|c| c.lam == 0.0) {
            assert_eq!(c.power, Some(0.0));
            assert!(!c.engine_ok);
            if c.omega20 > 1.0 && c.omega20 < 5.0 {
                // the off-axis limit still carries a conversion ratio
                let eta = c.eta.expect("limit efficiency");
                assert!(eta > 0.0 && eta < 0.8);
            }
        }
        // omega20 = 5 with these temperatures is the reversible boundary:
        // the limit probe lands on the wrong side and reports no engine
        let corner = sweep
            .cells
            .iter()
            .find(|c| c.lam == 0.0 && c.omega20 == 5.0)
            .unwrap();
        assert!(corner.eta.is_none());
    }

    #[test]
    fn engines_agree_on_the_carnot_ceiling() {
        let grid = GridSpec::with_counts(4, 4);
        for &engine in &[EngineKind::Kinetic, EngineKind::Gkls] {
            let sweep = run_sweep(
                engine,
                &demo_baths(),
                &WorkChannelClosure::default(),
                &grid,
            )
            .unwrap();
            for c in &sweep.cells {
                if let Some(eta) = c.eta {
                    assert!(eta <= 0.8 + 1e-9, "{} eta {eta}", engine.name());
                }
            }
        }
    }

    #[test]
    fn observable_extraction() {
        let grid = GridSpec::with_counts(3, 3);
        let sweep = run_sweep(
            EngineKind::Gkls,
            &demo_baths(),
            &WorkChannelClosure::default(),
            &grid,
        )
        .unwrap();
        assert_eq!(sweep.observable_names().len(), 6);
        let p = sweep.observable("power").unwrap();
        assert_eq!(p.len(), 9);
        assert!(sweep.observable("bogus").is_err());
        // mode codes are always whole numbers
        for m in sweep.observable("mode").unwrap().into_iter().flatten() {
            assert_eq!(m, m.trunc());
            assert!((1.0..=3.0).contains(&m));
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let grid = GridSpec::with_counts(6, 6);
        let a = run_sweep(
            EngineKind::Kinetic,
            &demo_baths(),
            &WorkChannelClosure::default(),
            &grid,
        )
        .unwrap();
        let b = run_sweep(
            EngineKind::Kinetic,
            &demo_baths(),
            &WorkChannelClosure::default(),
            &grid,
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
