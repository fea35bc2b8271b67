//! Analytic steady-state engine on the three-node kinetic network.
//!
//! Ground state plus the two dressed levels form a cycle: two bath channels
//! with the effective rates of [`crate::dressed`] and one symmetric work
//! channel. The stationary distribution, currents, efficiency, leakage, and
//! entropy production all come out in closed form.

use serde::{Deserialize, Serialize};

use crate::dressed::{
    carnot_efficiency, detailed_balance_rate, effective_rates, BathSpec, DressedFrame,
    EffectiveRates, EngineSpec,
};
use crate::error::{Error, Result};

/// How the work-channel rate Gamma_w is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClosureMode {
    /// Gamma_w = drive^2 sin^2(theta) / (2G), the structural transfer-rate
    /// reading of the driven channel; drive defaults to eps21 and G defaults
    /// to the total linewidth g1 + g2 + g1m + g2m.
    #[default]
    Structural,
    /// Gamma_w supplied directly as a constant.
    FixedRate,
}

/// Work-channel closure parameters. The structural mode is a documented
/// reconstruction: the transfer-rate prefactor is not pinned down by the
/// dressed-rate model alone, so both its drive frequency and width are
/// overridable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct WorkChannelClosure {
    /// Closure mode selector.
    pub mode: ClosureMode,
    /// Rate used by [`ClosureMode::FixedRate`].
    pub gw_fixed: Option<f64>,
    /// Width override for [`ClosureMode::Structural`].
    pub width_g: Option<f64>,
}

impl WorkChannelClosure {
    pub fn validate(&self) -> Result<()> {
        let fail = |why: String| Error::InvalidInput {
            what: "work-channel closure",
            why,
        };
        if let Some(g) = self.gw_fixed {
            if !g.is_finite() || g < 0.0 {
                return Err(fail(format!("gw_fixed = {g} must be >= 0")));
            }
        }
        if let Some(g) = self.width_g {
            if !g.is_finite() || g < 0.0 {
                return Err(fail(format!("width_g = {g} must be >= 0")));
            }
        }
        if self.mode == ClosureMode::FixedRate && self.gw_fixed.is_none() {
            return Err(fail("fixed_rate mode needs gw_fixed".into()));
        }
        Ok(())
    }
}

/// Coupling efficiency of the working transition and the wrong-bath
/// fractions it is built from. Temperature-independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingEfficiency {
    /// eta_CP = (1 - eps10/eps20) / (1 - q2 - (eps10/eps20) q1).
    pub eta_cp: f64,
    /// Hot-bath fraction of the eps10 channel.
    pub q1: f64,
    /// Cold-bath fraction of the eps20 channel.
    pub q2: f64,
    /// Set when a channel has zero total coupling and its q was zeroed.
    pub dead_channel: bool,
}

/// Every steady-state observable of one kinetic configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoReport {
    /// Output power eps21 * Gamma_w * (p2 - p1).
    pub power: f64,
    /// Heat current from the hot bath into the system.
    pub heat_in: f64,
    /// Heat current from the cold bath into the system (negative when dumping).
    pub heat_out: f64,
    /// P / Phi_h; present only on engine-valid points.
    pub efficiency: Option<f64>,
    /// Efficacy P * eta; present only on engine-valid points.
    pub efficacy: Option<f64>,
    /// Coupling efficiency of the working transition.
    pub coupling_eff: f64,
    /// Wrong-bath fraction q1 of the eps10 channel.
    pub q1: f64,
    /// Wrong-bath fraction q2 of the eps20 channel.
    pub q2: f64,
    /// Heat leakage Phi_h - P/eta_CP.
    pub leak: f64,
    /// leak / P; present when |P| is meaningfully nonzero.
    pub leak_ratio: Option<f64>,
    /// Average entropy production -beta_h Phi_h - beta_c Phi_c.
    pub sigma_avg: f64,
    /// Stationary populations (p0, p1, p2).
    pub populations: [f64; 3],
    /// Population-inversion margin g2m/g2 - g1m/g1; `None` when a channel
    /// has no downward rate at all.
    pub margin: Option<f64>,
    /// True when this point operates as an engine (P > 0 with Phi_h > 0 and
    /// a proper dressed ground state).
    pub engine_ok: bool,
    /// Carried over from the coupling-efficiency computation.
    pub dead_channel: bool,
}

/// Work-channel rate under the chosen closure. Exactly zero whenever
/// lam = 0, in every mode.
pub fn work_channel_rate(
    spec: &EngineSpec,
    frame: &DressedFrame,
    rates: &EffectiveRates,
    closure: &WorkChannelClosure,
) -> Result<f64> {
    closure.validate()?;
    if spec.lam == 0.0 {
        return Ok(0.0);
    }
    match closure.mode {
        ClosureMode::FixedRate => Ok(closure.gw_fixed.expect("validated above")),
        ClosureMode::Structural => {
            let drive = spec.drive_freq.unwrap_or(frame.eps21);
            let sin_theta = frame.theta.sin();
            let width = closure
                .width_g
                .unwrap_or(rates.g1 + rates.g2 + rates.g1m + rates.g2m);
            if width <= 0.0 {
                return Err(Error::DegenerateWidth { sin_theta });
            }
            Ok(drive * drive * sin_theta * sin_theta / (2.0 * width))
        }
    }
}

/// Stationary populations of the three-node network, by the spanning-tree
/// closed form. Exact up to floating point; the balance residual is checked
/// against 1e-12.
pub fn network_steady_state(rates: &EffectiveRates, gw: f64) -> Result<[f64; 3]> {
    let EffectiveRates { g1, g2, g1m, g2m } = *rates;
    let w0 = g1 * g2 + gw * (g1 + g2);
    let w1 = g1m * g2 + gw * (g1m + g2m);
    let w2 = g1 * g2m + gw * (g1m + g2m);
    let total = w0 + w1 + w2;
    if total <= 0.0 {
        return Err(Error::DisconnectedNetwork);
    }
    let p = [w0 / total, w1 / total, w2 / total];

    // balance residual of the full rate matrix, scaled to the largest rate
    let scale = g1.max(g2).max(g1m).max(g2m).max(gw).max(1.0);
    let r0 = -(g1m + g2m) * p[0] + g1 * p[1] + g2 * p[2];
    let r1 = g1m * p[0] - (g1 + gw) * p[1] + gw * p[2];
    let r2 = g2m * p[0] + gw * p[1] - (g2 + gw) * p[2];
    let resid = r0.abs().max(r1.abs()).max(r2.abs());
    if resid > 1e-12 * scale {
        return Err(Error::Inconsistent(format!(
            "steady-state balance residual {resid:.3e} exceeds 1e-12"
        )));
    }
    Ok(p)
}

/// Inversion margin g2m/g2 - g1m/g1 and the engine predicate margin > 0.
/// For any Gamma_w > 0 the sign of the output power equals the sign of the
/// margin.
pub fn engine_condition(rates: &EffectiveRates) -> Option<(f64, bool)> {
    if rates.g1 <= 0.0 || rates.g2 <= 0.0 {
        return None;
    }
    let margin = rates.g2m / rates.g2 - rates.g1m / rates.g1;
    Some((margin, margin > 0.0))
}

/// Coupling efficiency eta_CP with the wrong-bath fractions
/// q1 = gamma_h(eps10) w- / g1 and q2 = gamma_c(eps20) w- / g2.
/// No temperature enters; only angles, gaps, and coefficients.
pub fn coupling_efficiency(frame: &DressedFrame, baths: &BathSpec) -> Result<CouplingEfficiency> {
    if frame.eps20 <= 0.0 {
        return Err(Error::InvalidInput {
            what: "coupling efficiency",
            why: format!("eps20 = {} must be positive", frame.eps20),
        });
    }
    let c = frame.theta.cos();
    let wp = 0.5 * (1.0 + c);
    let wm = 0.5 * (1.0 - c);
    let den1 = baths.g_c_res * wp + baths.g_h_det * wm;
    let den2 = baths.g_h_res * wp + baths.g_c_det * wm;
    let mut dead_channel = false;
    let q1 = if den1 > 0.0 {
        baths.g_h_det * wm / den1
    } else {
        dead_channel = true;
        0.0
    };
    let q2 = if den2 > 0.0 {
        baths.g_c_det * wm / den2
    } else {
        dead_channel = true;
        0.0
    };
    let ratio = frame.eps10 / frame.eps20;
    // 1 - ratio written through the gap identity eps20 - eps10 = eps21,
    // which stays fully conditioned as the gaps close
    let eta_cp = (frame.eps21 / frame.eps20) / (1.0 - q2 - ratio * q1);
    Ok(CouplingEfficiency {
        eta_cp,
        q1,
        q2,
        dead_channel,
    })
}

/// Leakage Phi_h - P/eta_CP and the ratio leak/P. The ratio is omitted when
/// the power is too small to divide by.
pub fn heat_leakage(heat_in: f64, power: f64, eta_cp: f64) -> Result<(f64, Option<f64>)> {
    // exactly stalled engine: nothing flows through the coupled channel,
    // so all intake is leakage and eta_cp (possibly 0 at a degenerate
    // frame) never enters
    if power == 0.0 {
        return Ok((heat_in, None));
    }
    if eta_cp == 0.0 {
        return Err(Error::InvalidInput {
            what: "heat leakage",
            why: format!("power {power} with a fully degenerate coupling"),
        });
    }
    let leak = heat_in - power / eta_cp;
    let ratio = if power.abs() > 1e-300 {
        Some(leak / power)
    } else {
        None
    };
    Ok((leak, ratio))
}

/// Average entropy production of a finished report, recomputed two ways:
/// directly as -beta_h Phi_h - beta_c Phi_c, and through the
/// leakage-resolved form (beta_c - beta_h)[(1/eta_CP - 1/eta_C) P + leak].
/// The forms must agree to 1e-10; the direct value is returned.
pub fn avg_entropy_production(report: &ThermoReport, baths: &BathSpec) -> Result<f64> {
    entropy_from_currents(
        report.heat_in,
        report.heat_out,
        report.power,
        report.leak,
        report.coupling_eff,
        baths,
    )
}

fn entropy_from_currents(
    heat_in: f64,
    heat_out: f64,
    power: f64,
    leak: f64,
    eta_cp: f64,
    baths: &BathSpec,
) -> Result<f64> {
    let direct = -baths.beta_h * heat_in - baths.beta_c * heat_out;
    if baths.beta_c > baths.beta_h && eta_cp > 0.0 {
        let eta_c = carnot_efficiency(baths)?;
        let resolved = (baths.beta_c - baths.beta_h) * ((1.0 / eta_cp - 1.0 / eta_c) * power + leak);
        let scale = direct.abs().max(1.0);
        if (direct - resolved).abs() > 1e-10 * scale {
            return Err(Error::Inconsistent(format!(
                "entropy production forms disagree: direct {direct:.12e} vs resolved {resolved:.12e}"
            )));
        }
    }
    Ok(direct)
}

/// Assembles the full steady-state report from stationary populations.
///
/// Per-channel bath currents use the same cos(theta) weights as the
/// effective rates; the first law P = Phi_h + Phi_c holds algebraically on
/// this network and is enforced to 1e-12.
pub fn cycle_observables(
    frame: &DressedFrame,
    rates: &EffectiveRates,
    baths: &BathSpec,
    populations: [f64; 3],
    gw: f64,
) -> Result<ThermoReport> {
    let [p0, p1, p2] = populations;
    let c = frame.theta.cos();
    let wp = 0.5 * (1.0 + c);
    let wm = 0.5 * (1.0 - c);

    // excitation current of bath alpha on channel j: up minus down
    let current = |gamma: f64, beta: f64, eps: f64, pj: f64| -> Result<f64> {
        Ok(detailed_balance_rate(gamma, beta, eps)? * p0 - gamma * pj)
    };
    let j_c1 = wp * current(baths.g_c_res, baths.beta_c, frame.eps10, p1)?;
    let j_h1 = wm * current(baths.g_h_det, baths.beta_h, frame.eps10, p1)?;
    let j_h2 = wp * current(baths.g_h_res, baths.beta_h, frame.eps20, p2)?;
    let j_c2 = wm * current(baths.g_c_det, baths.beta_c, frame.eps20, p2)?;

    let heat_in = frame.eps10 * j_h1 + frame.eps20 * j_h2;
    let heat_out = frame.eps10 * j_c1 + frame.eps20 * j_c2;
    let power = frame.eps21 * gw * (p2 - p1);

    let scale = heat_in.abs().max(1.0);
    if (power - heat_in - heat_out).abs() > 1e-12 * scale {
        return Err(Error::Inconsistent(format!(
            "first law violated: P - Phi_h - Phi_c = {:.3e}",
            power - heat_in - heat_out
        )));
    }
    // with the labeled gradient, positive power must draw on the hot bath;
    // a swapped gradient (beta_c < beta_h) runs the mirror machine instead
    if baths.beta_c >= baths.beta_h && power > 1e-15 * scale && heat_in <= 0.0 {
        return Err(Error::Inconsistent(format!(
            "positive power {power:.3e} with nonpositive hot intake {heat_in:.3e}"
        )));
    }

    let coupling = coupling_efficiency(frame, baths)?;
    let (leak, leak_ratio) = heat_leakage(heat_in, power, coupling.eta_cp)?;
    let sigma_avg =
        entropy_from_currents(heat_in, heat_out, power, leak, coupling.eta_cp, baths)?;

    let margin = engine_condition(rates).map(|(m, _)| m);
    let engine_ok = power > 0.0 && heat_in > 0.0 && !frame.inverted_ground();
    let (efficiency, efficacy) = if engine_ok {
        let eta = power / heat_in;
        (Some(eta), Some(power * eta))
    } else {
        (None, None)
    };

    Ok(ThermoReport {
        power,
        heat_in,
        heat_out,
        efficiency,
        efficacy,
        coupling_eff: coupling.eta_cp,
        q1: coupling.q1,
        q2: coupling.q2,
        leak,
        leak_ratio,
        sigma_avg,
        populations,
        margin,
        engine_ok,
        dead_channel: coupling.dead_channel,
    })
}

/// One-call pipeline: frame, rates, closure, steady state, observables.
pub fn evaluate(
    spec: &EngineSpec,
    baths: &BathSpec,
    closure: &WorkChannelClosure,
) -> Result<ThermoReport> {
    baths.validate()?;
    let frame = dressed_energies_checked(spec)?;
    let rates = effective_rates(&frame, baths)?;
    let gw = work_channel_rate(spec, &frame, &rates, closure)?;
    let populations = network_steady_state(&rates, gw)?;
    cycle_observables(&frame, &rates, baths, populations, gw)
}

fn dressed_energies_checked(spec: &EngineSpec) -> Result<DressedFrame> {
    spec.validate()?;
    Ok(crate::dressed::dressed_energies(spec))
}
