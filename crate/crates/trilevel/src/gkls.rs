//! Numeric reference engine: the full master equation in the rotating frame.
//!
//! Where [`crate::kinetic`] works with closed-form populations, this module
//! keeps the whole 3x3 density matrix: it assembles the Lindblad generator
//! with bare-basis jump operators, solves for (or relaxes to) the stationary
//! state, and splits every heat current into its population and coherence
//! parts.

use nalgebra::{DMatrix, Matrix3, SMatrix, SVector, SymmetricEigen, Vector3};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dressed::{detailed_balance_rate, BathSpec, EngineSpec};
use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
/// 3x3 complex state. Valid states are Hermitian to 1e-12, unit trace to
/// 1e-12, and positive semidefinite to -1e-12.
pub type DensityMatrix = Matrix3<C64>;

type V9 = SVector<C64, 9>;
type M9 = SMatrix<C64, 9, 9>;

const ZERO: C64 = Complex::new(0.0, 0.0);
const ONE: C64 = Complex::new(1.0, 0.0);

/// Which reservoir a jump operator belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bath {
    Hot,
    Cold,
}

/// One Lindblad jump operator with its rate and owning bath.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOp {
    /// The operator in the bare basis.
    pub op: Matrix3<C64>,
    /// Nonnegative rate multiplying the dissipator.
    pub rate: f64,
    /// Reservoir the heat of this channel is booked to.
    pub bath: Bath,
}

/// Assembled Lindblad generator plus everything needed to read energies and
/// per-bath currents back out of it. Construction is pure and the value is
/// immutable afterwards, so sharing across threads is safe.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    /// The 9x9 superoperator acting on column-major vectorized states.
    pub matrix: M9,
    /// Jump operators, kept for per-bath current extraction.
    pub jumps: Vec<JumpOp>,
    /// Rotating-frame Hamiltonian.
    pub h_tilde: Matrix3<C64>,
    /// Cycle-averaged lab-frame energy operator used for heat bookkeeping.
    pub h_energy: Matrix3<C64>,
    /// Drive frequency the frame rotates at.
    pub drive_freq: f64,
    /// Drive intensity.
    pub lam: f64,
    /// Bath parameters the rates were built from.
    pub baths: BathSpec,
}

/// Steady-state heat currents split along the decomposition basis into
/// population (diagonal) and coherence (non-diagonal) parts.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatDecomposition {
    /// Diagonal part of the hot current.
    pub q_diag_h: f64,
    /// Diagonal part of the cold current.
    pub q_diag_c: f64,
    /// Coherence part of the hot current.
    pub q_nondiag_h: f64,
    /// Coherence part of the cold current.
    pub q_nondiag_c: f64,
    /// Inverse coherence efficiency Q_h_nondiag / P; `None` when there is
    /// no power to divide by.
    pub inv_eta_nd: Option<f64>,
    /// Heat-flow mode classified from `inv_eta_nd`.
    pub mode: Option<HeatFlowMode>,
    /// Columns are the basis states the split was taken in.
    pub basis: Matrix3<C64>,
}

/// The three ways the two coherence currents can share the output power.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatFlowMode {
    /// Coherence pushes heat back into the hot bath.
    HotReversed,
    /// Both coherence currents feed the output; no quantum friction.
    Ideal,
    /// Coherence pushes heat back out through the cold bath.
    ColdReversed,
}

impl HeatFlowMode {
    /// Numeric label used in grid files and reports.
    pub fn code(self) -> u8 {
        match self {
            HeatFlowMode::HotReversed => 1,
            HeatFlowMode::Ideal => 2,
            HeatFlowMode::ColdReversed => 3,
        }
    }
}

/// Flat steady-state summary of one master-equation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GklsReport {
    /// Output power.
    pub power: f64,
    /// Heat current from the hot bath.
    pub heat_in: f64,
    /// Heat current from the cold bath.
    pub heat_out: f64,
    /// P / heat_in on engine-valid points.
    pub efficiency: Option<f64>,
    /// P * efficiency on engine-valid points.
    pub efficacy: Option<f64>,
    /// Entropy production rate at the steady state.
    pub sigma: f64,
    /// Bare-basis populations.
    pub populations: [f64; 3],
    /// Imaginary part of the 1-2 coherence carrying the power.
    pub coherence_im: f64,
    /// Diagonal hot current.
    pub q_diag_h: f64,
    /// Diagonal cold current.
    pub q_diag_c: f64,
    /// Coherence hot current.
    pub q_nondiag_h: f64,
    /// Coherence cold current.
    pub q_nondiag_c: f64,
    /// Inverse coherence efficiency; `None` below the no-power threshold.
    pub inv_eta_nd: Option<f64>,
    /// Heat-flow mode code 1..3; `None` below the no-power threshold.
    pub mode: Option<u8>,
    /// True when the point runs as an engine (P > 0 with hot intake).
    pub engine_ok: bool,
    /// True when the entropy logarithm needed its eigenvalue floor.
    pub log_floored: bool,
}

fn vec_of(rho: &DensityMatrix) -> V9 {
    V9::from_iterator(rho.iter().cloned())
}

fn mat_of(v: &V9) -> DensityMatrix {
    DensityMatrix::from_iterator(v.iter().cloned())
}

fn hermitize(m: &DensityMatrix) -> DensityMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn hermitian_deviation(m: &DensityMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn lowering(level: usize) -> Matrix3<C64> {
    let mut m = Matrix3::zeros();
    m[(0, level)] = ONE;
    m
}

/// Checks the state invariants without modifying the input.
pub fn assert_density_matrix(rho: &DensityMatrix) -> Result<()> {
    let fail = |why: String| Error::InvalidInput {
        what: "density matrix",
        why,
    };
    let herm = hermitian_deviation(rho);
    if herm > 1e-12 {
        return Err(fail(format!("hermitian deviation {herm:.3e}")));
    }
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > 1e-12 {
        return Err(fail(format!("trace {tr} is not 1")));
    }
    let eig = SymmetricEigen::new(hermitize(rho));
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-12 {
        return Err(fail(format!("negative eigenvalue {min_eig:.3e}")));
    }
    Ok(())
}

/// Builds the rotating-frame generator.
///
/// The frame rotates at the drive frequency, which defaults to the bare
/// resonance omega20 - omega10. In that frame the Hamiltonian is
/// omega10 |1><1| + (omega20 - wd) |2><2| + lam (|1><2| + |2><1|); heat is
/// booked against the cycle-averaged lab energy operator, which restores
/// the full omega20 on level |2>.
///
/// Jump operators live in the bare basis: each bath de-excites |1> or |2>
/// to the ground state at its coefficient for that gap, with the reversed
/// operator at the detailed-balance rate for the bare gap.
pub fn build_generator(spec: &EngineSpec, baths: &BathSpec) -> Result<Generator> {
    spec.validate()?;
    baths.validate()?;
    let wd = spec.drive_freq.unwrap_or(spec.omega20 - spec.omega10);

    let mut h_tilde: Matrix3<C64> = Matrix3::zeros();
    h_tilde[(1, 1)] = Complex::new(spec.omega10, 0.0);
    h_tilde[(2, 2)] = Complex::new(spec.omega20 - wd, 0.0);
    h_tilde[(1, 2)] = Complex::new(spec.lam, 0.0);
    h_tilde[(2, 1)] = Complex::new(spec.lam, 0.0);
    let mut h_energy = h_tilde;
    h_energy[(2, 2)] += Complex::new(wd, 0.0);

    let channels = [
        (baths.g_c_res, baths.beta_c, 1, spec.omega10, Bath::Cold),
        (baths.g_c_det, baths.beta_c, 2, spec.omega20, Bath::Cold),
        (baths.g_h_res, baths.beta_h, 2, spec.omega20, Bath::Hot),
        (baths.g_h_det, baths.beta_h, 1, spec.omega10, Bath::Hot),
    ];
    let mut jumps = Vec::new();
    for (gamma, beta, level, gap, bath) in channels {
        if gamma <= 0.0 {
            continue;
        }
        let down = lowering(level);
        jumps.push(JumpOp {
            op: down,
            rate: gamma,
            bath,
        });
        jumps.push(JumpOp {
            op: down.adjoint(),
            rate: detailed_balance_rate(gamma, beta, gap)?,
            bath,
        });
    }

    let id: Matrix3<C64> = Matrix3::identity();
    let mut matrix: M9 =
        (id.kronecker(&h_tilde) - h_tilde.transpose().kronecker(&id)) * Complex::new(0.0, -1.0);
    for j in &jumps {
        let ll = j.op.adjoint() * j.op;
        let diss = j.op.conjugate().kronecker(&j.op)
            - (id.kronecker(&ll) + ll.transpose().kronecker(&id)).scale(0.5);
        matrix += diss.scale(j.rate);
    }

    Ok(Generator {
        matrix,
        jumps,
        h_tilde,
        h_energy,
        drive_freq: wd,
        lam: spec.lam,
        baths: *baths,
    })
}

impl Generator {
    /// Right-hand side of the master equation at a state.
    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        mat_of(&(self.matrix * vec_of(rho)))
    }

    /// One bath's dissipator applied to a state.
    pub fn dissipator(&self, bath: Bath, rho: &DensityMatrix) -> DensityMatrix {
        let mut out: DensityMatrix = Matrix3::zeros();
        for j in self.jumps.iter().filter(|j| j.bath == bath) {
            let ll = j.op.adjoint() * j.op;
            let sandwich = j.op * rho * j.op.adjoint();
            out += (sandwich - (ll * rho + rho * ll).scale(0.5)).scale(j.rate);
        }
        out
    }
}

fn polish_state(raw: &DensityMatrix, herm_tol: f64, trace_tol: f64) -> Result<DensityMatrix> {
    let herm = hermitian_deviation(raw);
    if herm > herm_tol {
        return Err(Error::Inconsistent(format!(
            "state strays from Hermitian by {herm:.3e}"
        )));
    }
    let mut rho = hermitize(raw);
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > trace_tol {
        return Err(Error::Inconsistent(format!(
            "state trace {tr} strays from 1 beyond {trace_tol:.0e}"
        )));
    }
    rho = rho.unscale(tr);
    let eig = SymmetricEigen::new(rho);
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -1e-9 {
        return Err(Error::UnphysicalSteadyState { min_eig });
    }
    if min_eig < -1e-12 {
        // clamp the tiny negative tail and rebuild
        let clamped = eig.eigenvalues.map(|v| v.max(0.0));
        let total: f64 = clamped.iter().sum();
        let mut diag: Matrix3<C64> = Matrix3::zeros();
        for i in 0..3 {
            diag[(i, i)] = Complex::new(clamped[i] / total, 0.0);
        }
        rho = eig.eigenvectors * diag * eig.eigenvectors.adjoint();
    }
    Ok(rho)
}

/// Direct stationary solve: one row of the singular system is traded for
/// the trace constraint. The kernel dimension is checked first so a
/// degenerate generator reports non-uniqueness instead of returning an
/// arbitrary member of the stationary family.
pub fn steady_state(gen: &Generator) -> Result<DensityMatrix> {
    let sv = gen.matrix.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let null_dim = sv.iter().filter(|&&s| s <= 1e-10 * smax).count();
    if null_dim >= 2 {
        return Err(Error::NonUniqueSteadyState { null_dim });
    }

    let mut a = gen.matrix;
    for k in 0..9 {
        a[(0, k)] = ZERO;
    }
    a[(0, 0)] = ONE;
    a[(0, 4)] = ONE;
    a[(0, 8)] = ONE;
    let mut b = V9::zeros();
    b[0] = ONE;
    let x = a
        .lu()
        .solve(&b)
        .ok_or(Error::NonUniqueSteadyState { null_dim: 1 })?;

    let rho = polish_state(&mat_of(&x), 1e-12, 1e-12)?;
    let residual = (gen.matrix * vec_of(&rho)).norm();
    if residual > 1e-10 {
        return Err(Error::Inconsistent(format!(
            "stationary residual {residual:.3e} exceeds 1e-10"
        )));
    }
    Ok(rho)
}

/// Dormand-Prince 5(4) tableau.
const DP_A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates the master equation until the derivative norm falls under
/// `tol`, calling `observe` with every accepted (time, state) pair. Step
/// errors are controlled to about 1e-12 per unit step.
pub fn relax_observed<F>(
    gen: &Generator,
    rho0: &DensityMatrix,
    horizon: f64,
    tol: f64,
    mut observe: F,
) -> Result<DensityMatrix>
where
    F: FnMut(f64, &DensityMatrix),
{
    assert_density_matrix(rho0)?;
    if !(horizon > 0.0) || !(tol > 0.0) {
        return Err(Error::InvalidInput {
            what: "relaxation",
            why: format!("horizon = {horizon} and tol = {tol} must be positive"),
        });
    }

    const ATOL: f64 = 1e-12;
    const RTOL: f64 = 1e-12;
    let f = |v: &V9| gen.matrix * v;

    let mut y = vec_of(rho0);
    let mut t = 0.0;
    let mut h = 1e-3_f64.min(horizon);
    observe(0.0, rho0);

    let mut residual = f(&y).norm();
    if residual <= tol {
        return polish_state(rho0, 1e-10, 1e-9);
    }

    while t < horizon {
        h = h.min(horizon - t);
        let mut k = [V9::zeros(); 7];
        k[0] = f(&y);
        for s in 1..7 {
            let mut arg = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = DP_A[s - 1][j];
                if a != 0.0 {
                    arg += kj.scale(h * a);
                }
            }
            k[s] = f(&arg);
        }
        // the 5th-order solution is the argument of the last stage
        let mut y5 = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let a = DP_A[5][j];
            if a != 0.0 {
                y5 += kj.scale(h * a);
            }
        }
        let mut y4 = y;
        for (j, kj) in k.iter().enumerate() {
            let b = DP_B4[j];
            if b != 0.0 {
                y4 += kj.scale(h * b);
            }
        }

        let mut sq = 0.0;
        for i in 0..9 {
            let scale = ATOL + RTOL * y[i].norm().max(y5[i].norm());
            let r = (y5[i] - y4[i]).norm() / scale;
            sq += r * r;
        }
        let err = (sq / 9.0).sqrt();

        if err <= 1.0 {
            t += h;
            y = vec_of(&hermitize(&mat_of(&y5)));
            let rho = mat_of(&y);
            observe(t, &rho);
            residual = f(&y).norm();
            if residual <= tol {
                return polish_state(&rho, 1e-10, 1e-9);
            }
        }
        let factor = if err.is_finite() && err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else if err == 0.0 {
            5.0
        } else {
            0.2
        };
        h *= factor;
        if h < 1e-13 {
            return Err(Error::Inconsistent(format!(
                "integrator step collapsed at t = {t:.3e}"
            )));
        }
    }
    Err(Error::RelaxTimeout { horizon, residual })
}

/// [`relax_observed`] without the observer: the long-time oracle for
/// [`steady_state`].
pub fn relax_to_steady(
    gen: &Generator,
    rho0: &DensityMatrix,
    horizon: f64,
    tol: f64,
) -> Result<DensityMatrix> {
    relax_observed(gen, rho0, horizon, tol, |_, _| ())
}

fn bath_current(gen: &Generator, bath: Bath, rho: &DensityMatrix) -> f64 {
    (gen.dissipator(bath, rho) * gen.h_energy).trace().re
}

/// Heat currents (hot, cold) and power at a stationary state.
///
/// Each current is the bath dissipator traced against the energy operator;
/// power is their sum. The same power also flows through the 1-2 coherence,
/// and that identity is enforced to 1e-10.
pub fn heat_currents(gen: &Generator, rho_ss: &DensityMatrix) -> Result<(f64, f64, f64)> {
    let phi_h = bath_current(gen, Bath::Hot, rho_ss);
    let phi_c = bath_current(gen, Bath::Cold, rho_ss);
    let power = phi_h + phi_c;
    let flux = -2.0 * gen.drive_freq * gen.lam * rho_ss[(1, 2)].im;
    let tol = 1e-10 * phi_h.abs().max(phi_c.abs()).max(1.0);
    if (power - flux).abs() > tol {
        return Err(Error::Inconsistent(format!(
            "power {power:.9e} disagrees with the coherence flux {flux:.9e}"
        )));
    }
    Ok((phi_h, phi_c, power))
}

/// Entropy production rate -tr(rho_dot ln rho) - sum_a beta_a Q_a at any
/// physical state. Returns the rate and whether the logarithm needed its
/// 1e-15 eigenvalue floor.
pub fn entropy_production_rate(
    gen: &Generator,
    rho: &DensityMatrix,
    baths: &BathSpec,
) -> Result<(f64, bool)> {
    assert_density_matrix(rho)?;
    let rho_dot = gen.apply(rho);
    let eig = SymmetricEigen::new(hermitize(rho));
    let mut floored = false;
    let mut log_diag: Matrix3<C64> = Matrix3::zeros();
    for i in 0..3 {
        let p = eig.eigenvalues[i];
        if p < 1e-15 {
            floored = true;
        }
        log_diag[(i, i)] = Complex::new(p.max(1e-15).ln(), 0.0);
    }
    let ln_rho = eig.eigenvectors * log_diag * eig.eigenvectors.adjoint();
    let ds = -(rho_dot * ln_rho).trace().re;
    let qh = bath_current(gen, Bath::Hot, rho);
    let qc = bath_current(gen, Bath::Cold, rho);
    Ok((ds - baths.beta_h * qh - baths.beta_c * qc, floored))
}

/// Eigenbasis of the rotating-frame Hamiltonian, with any degenerate
/// subspace rotated so the state is diagonal inside it. That extra rotation
/// pins the basis down uniquely and keeps the diagonal currents free of
/// in-subspace coherence bleed.
fn decomposition_basis(gen: &Generator, rho: &DensityMatrix) -> Matrix3<C64> {
    let eig = SymmetricEigen::new(gen.h_tilde);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = Vector3::new(
        eig.eigenvalues[order[0]],
        eig.eigenvalues[order[1]],
        eig.eigenvalues[order[2]],
    );
    let mut u: Matrix3<C64> = Matrix3::zeros();
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &eig.eigenvectors.column(src));
    }
    let scale = vals.iter().map(|v| v.abs()).fold(1.0, f64::max);

    let mut start = 0;
    while start < 3 {
        let mut end = start + 1;
        while end < 3 && (vals[end] - vals[start]).abs() <= 1e-10 * scale {
            end += 1;
        }
        let g = end - start;
        if g > 1 {
            let block = u.columns(start, g);
            let sub: DMatrix<C64> = block.adjoint() * rho * block;
            let sub_eig = SymmetricEigen::new(sub);
            let rotated = block * sub_eig.eigenvectors;
            for j in 0..g {
                u.set_column(start + j, &rotated.column(j));
            }
        }
        start = end;
    }
    u
}

/// Power threshold below which the coherence efficiency is left undefined.
pub const NO_POWER_EPS: f64 = 1e-9;

/// Inverse coherence efficiency Q_h_nondiag / P, or `None` when the power
/// sits under the no-power threshold. The complementary cold identity
/// Q_c_nondiag = (1 - result) P is enforced to 1e-10.
pub fn nondiag_efficiency(dec: &HeatDecomposition, power: f64) -> Result<Option<f64>> {
    if power.abs() <= NO_POWER_EPS {
        return Ok(None);
    }
    let inv = dec.q_nondiag_h / power;
    let resid = (dec.q_nondiag_c - (1.0 - inv) * power).abs();
    if resid > 1e-10 * power.abs().max(1.0) {
        return Err(Error::Inconsistent(format!(
            "coherence currents fail the power split by {resid:.3e}"
        )));
    }
    Ok(Some(inv))
}

/// Mode from the inverse coherence efficiency: negative means the hot
/// coherence current runs backwards, above one means the cold one does, and
/// the closed interval between them is the friction-free window.
pub fn classify_mode(inv_eta_nd: f64) -> HeatFlowMode {
    if inv_eta_nd < 0.0 {
        HeatFlowMode::HotReversed
    } else if inv_eta_nd <= 1.0 {
        HeatFlowMode::Ideal
    } else {
        HeatFlowMode::ColdReversed
    }
}

/// Splits both bath currents into diagonal and coherence parts in the
/// decomposition basis. At the steady state the diagonal parts cancel
/// bath against bath; that cancellation is enforced to 1e-10, which is what
/// makes the coherence parts carry exactly the output power.
pub fn heat_decomposition(gen: &Generator, rho_ss: &DensityMatrix) -> Result<HeatDecomposition> {
    let basis = decomposition_basis(gen, rho_ss);
    let (phi_h, phi_c, power) = heat_currents(gen, rho_ss)?;

    let mut energies = [0.0; 3];
    for n in 0..3 {
        let col = basis.column(n);
        energies[n] = (col.adjoint() * gen.h_energy * col)[(0, 0)].re;
    }
    let diag_part = |bath: Bath| -> f64 {
        let d = gen.dissipator(bath, rho_ss);
        (0..3)
            .map(|n| {
                let col = basis.column(n);
                (col.adjoint() * d * col)[(0, 0)].re * energies[n]
            })
            .sum()
    };
    let q_diag_h = diag_part(Bath::Hot);
    let q_diag_c = diag_part(Bath::Cold);
    let cancel = (q_diag_h + q_diag_c).abs();
    if cancel > 1e-10 * phi_h.abs().max(phi_c.abs()).max(1.0) {
        return Err(Error::Inconsistent(format!(
            "diagonal heat currents fail to cancel by {cancel:.3e}"
        )));
    }

    let mut dec = HeatDecomposition {
        q_diag_h,
        q_diag_c,
        q_nondiag_h: phi_h - q_diag_h,
        q_nondiag_c: phi_c - q_diag_c,
        inv_eta_nd: None,
        mode: None,
        basis,
    };
    dec.inv_eta_nd = nondiag_efficiency(&dec, power)?;
    dec.mode = dec.inv_eta_nd.map(classify_mode);
    Ok(dec)
}

/// Full pipeline for one configuration: generator, direct stationary solve,
/// currents, entropy production, and the coherence split.
pub fn evaluate(spec: &EngineSpec, baths: &BathSpec) -> Result<GklsReport> {
    let gen = build_generator(spec, baths)?;
    let rho = steady_state(&gen)?;
    let (heat_in, heat_out, power) = heat_currents(&gen, &rho)?;
    let (sigma, log_floored) = entropy_production_rate(&gen, &rho, baths)?;
    let dec = heat_decomposition(&gen, &rho)?;

    let engine_ok = power > 0.0 && heat_in > 0.0;
    let (efficiency, efficacy) = if engine_ok {
        let eta = power / heat_in;
        (Some(eta), Some(power * eta))
    } else {
        (None, None)
    };

    Ok(GklsReport {
        power,
        heat_in,
        heat_out,
        efficiency,
        efficacy,
        sigma,
        populations: [rho[(0, 0)].re, rho[(1, 1)].re, rho[(2, 2)].re],
        coherence_im: rho[(1, 2)].im,
        q_diag_h: dec.q_diag_h,
        q_diag_c: dec.q_diag_c,
        q_nondiag_h: dec.q_nondiag_h,
        q_nondiag_c: dec.q_nondiag_c,
        inv_eta_nd: dec.inv_eta_nd,
        mode: dec.mode.map(HeatFlowMode::code),
        engine_ok,
        log_floored,
    })
}

/// Trace distance (1/2) ||a - b||_1 between two states.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let eig = SymmetricEigen::new(hermitize(&(a - b)));
    0.5 * eig.eigenvalues.iter().map(|v| v.abs()).sum::<f64>()
}
