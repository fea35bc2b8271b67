//! Physical configuration types and closed-form dressed-frame quantities.
//!
//! Natural units with hbar = k_B = 1; every energy, rate, and inverse
//! temperature is expressed in multiples of the lower gap omega10.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Level structure and drive of the three-level system.
///
/// Levels are |0>, |1>, |2> with bare gaps `omega10` and `omega20`; the
/// external field couples |1> and |2> with intensity `lam`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineSpec {
    /// Gap between |1> and |0>; the unit of every other quantity, so normally 1.
    pub omega10: f64,
    /// Gap between |2> and |0>, in multiples of omega10.
    pub omega20: f64,
    /// Drive intensity, in multiples of omega10.
    pub lam: f64,
    /// Drive frequency. `None` selects the engine-specific default: the
    /// dressed gap eps21 in the kinetic power closure, the bare resonance
    /// omega20 - omega10 in the numeric engine.
    pub drive_freq: Option<f64>,
}

impl EngineSpec {
    /// Spec with omega10 = 1 and the default drive frequency.
    pub fn bare(omega20: f64, lam: f64) -> Self {
        EngineSpec {
            omega10: 1.0,
            omega20,
            lam,
            drive_freq: None,
        }
    }

    /// Checks the type invariants: positive unit gap, omega20 >= omega10,
    /// nonnegative intensity and drive frequency.
    pub fn validate(&self) -> Result<()> {
        let fail = |why: String| Error::InvalidInput {
            what: "engine spec",
            why,
        };
        if !(self.omega10 > 0.0) || !self.omega10.is_finite() {
            return Err(fail(format!("omega10 = {} must be positive", self.omega10)));
        }
        if !self.omega20.is_finite() || self.omega20 < self.omega10 {
            return Err(fail(format!(
                "omega20 = {} must be >= omega10 = {}",
                self.omega20, self.omega10
            )));
        }
        if !self.lam.is_finite() || self.lam < 0.0 {
            return Err(fail(format!("lam = {} must be >= 0", self.lam)));
        }
        if let Some(w) = self.drive_freq {
            if !w.is_finite() || w < 0.0 {
                return Err(fail(format!("drive_freq = {} must be >= 0", w)));
            }
        }
        Ok(())
    }
}

/// Reservoir temperatures and the four dissipation coefficients.
///
/// The resonant coefficients couple each bath to its intended transition
/// (cold to the |0>-|1> gap, hot to the |0>-|2> gap); the detuning
/// coefficients are the wrong-bath couplings responsible for leakage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    /// Cold inverse temperature, units 1/omega10.
    pub beta_c: f64,
    /// Hot inverse temperature, units 1/omega10.
    pub beta_h: f64,
    /// gamma_c at the eps10 channel (resonant cold).
    pub g_c_res: f64,
    /// gamma_h at the eps20 channel (resonant hot).
    pub g_h_res: f64,
    /// gamma_c at the eps20 channel (detuning cold).
    pub g_c_det: f64,
    /// gamma_h at the eps10 channel (detuning hot).
    pub g_h_det: f64,
}

impl BathSpec {
    /// Both baths coupled to both channels with one common coefficient.
    pub fn uniform(beta_c: f64, beta_h: f64, gamma: f64) -> Self {
        BathSpec {
            beta_c,
            beta_h,
            g_c_res: gamma,
            g_h_res: gamma,
            g_c_det: gamma,
            g_h_det: gamma,
        }
    }

    /// Resonant couplings only; the detuning coefficients are zero.
    pub fn resonant(beta_c: f64, beta_h: f64, g_c: f64, g_h: f64) -> Self {
        BathSpec {
            beta_c,
            beta_h,
            g_c_res: g_c,
            g_h_res: g_h,
            g_c_det: 0.0,
            g_h_det: 0.0,
        }
    }

    /// Checks positivity of the temperatures and coefficients. Does not
    /// require beta_c > beta_h; that ordering is an engine-level condition
    /// checked by [`carnot_efficiency`] and the front ends.
    pub fn validate(&self) -> Result<()> {
        let fail = |why: String| Error::InvalidInput {
            what: "bath spec",
            why,
        };
        for (name, v) in [("beta_c", self.beta_c), ("beta_h", self.beta_h)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(fail(format!("{name} = {v} must be positive")));
            }
        }
        for (name, v) in [
            ("g_c_res", self.g_c_res),
            ("g_h_res", self.g_h_res),
            ("g_c_det", self.g_c_det),
            ("g_h_det", self.g_h_det),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(fail(format!("{name} = {v} must be >= 0")));
            }
        }
        if self.g_c_res == 0.0 && self.g_h_res == 0.0 {
            return Err(fail(
                "at least one resonant coefficient must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Mixing angle and dressed energy gaps of the driven upper block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedFrame {
    /// Mixing angle in radians, clamped to [0, pi/2].
    pub theta: f64,
    /// Dressed gap between the lower dressed level and |0>. May be <= 0 at
    /// very strong drive; see [`DressedFrame::inverted_ground`].
    pub eps10: f64,
    /// Dressed gap between the upper dressed level and |0>.
    pub eps20: f64,
    /// Dressed splitting eps20 - eps10, equal to the Rabi gap.
    pub eps21: f64,
}

impl DressedFrame {
    /// True when the drive pushes the lower dressed level at or below |0>.
    /// Such configurations are excluded from engine sweeps because the
    /// thermodynamic sign conventions change.
    pub fn inverted_ground(&self) -> bool {
        self.eps10 <= 0.0
    }
}

/// Effective downward (g1, g2) and upward (g1m, g2m) rates on the two
/// dressed channels, each a cos(theta)-weighted mix of both baths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRates {
    /// Downward rate on the eps10 channel.
    pub g1: f64,
    /// Downward rate on the eps20 channel.
    pub g2: f64,
    /// Upward rate on the eps10 channel (Boltzmann-suppressed mix).
    pub g1m: f64,
    /// Upward rate on the eps20 channel (Boltzmann-suppressed mix).
    pub g2m: f64,
}

/// Mixing angle theta = atan2(2*lam, omega20 - omega10), clamped to [0, pi/2].
///
/// Equals 0 at zero drive and pi/2 at degenerate bare gaps with any finite
/// drive.
pub fn mixing_angle(spec: &EngineSpec) -> f64 {
    if spec.lam == 0.0 {
        return 0.0;
    }
    (2.0 * spec.lam)
        .atan2(spec.omega20 - spec.omega10)
        .clamp(0.0, std::f64::consts::FRAC_PI_2)
}

/// Dressed gaps as the eigenvalues of the static 2x2 dressing block:
/// eps{10,20} = (omega10 + omega20)/2 -/+ sqrt((omega20 - omega10)^2 + 4 lam^2)/2.
pub fn dressed_energies(spec: &EngineSpec) -> DressedFrame {
    let mean = 0.5 * (spec.omega10 + spec.omega20);
    let det = spec.omega20 - spec.omega10;
    let rabi = (det * det + 4.0 * spec.lam * spec.lam).sqrt();
    DressedFrame {
        theta: mixing_angle(spec),
        eps10: mean - 0.5 * rabi,
        eps20: mean + 0.5 * rabi,
        eps21: rabi,
    }
}

/// Upward-rate construction gamma(-eps) = gamma * exp(-beta * eps).
///
/// Total for finite outputs; a non-finite exponential is reported as a range
/// error rather than silently saturating.
pub fn detailed_balance_rate(gamma: f64, beta: f64, eps: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidInput {
            what: "detailed balance",
            why: format!("beta = {beta} must be positive"),
        });
    }
    let arg = -beta * eps;
    let rate = gamma * arg.exp();
    if !rate.is_finite() {
        return Err(Error::RangeOverflow { arg });
    }
    Ok(rate)
}

/// Effective channel rates with weights w+ = (1 + cos theta)/2 and
/// w- = (1 - cos theta)/2:
///
/// g1 = gamma_c(eps10) w+ + gamma_h(eps10) w-,
/// g2 = gamma_h(eps20) w+ + gamma_c(eps20) w-,
///
/// and g1m, g2m as the same mixes with every coefficient replaced by its
/// detailed-balance value at the owning bath's temperature.
pub fn effective_rates(frame: &DressedFrame, baths: &BathSpec) -> Result<EffectiveRates> {
    let c = frame.theta.cos();
    let wp = 0.5 * (1.0 + c);
    let wm = 0.5 * (1.0 - c);
    let g1 = baths.g_c_res * wp + baths.g_h_det * wm;
    let g2 = baths.g_h_res * wp + baths.g_c_det * wm;
    let g1m = detailed_balance_rate(baths.g_c_res, baths.beta_c, frame.eps10)? * wp
        + detailed_balance_rate(baths.g_h_det, baths.beta_h, frame.eps10)? * wm;
    let g2m = detailed_balance_rate(baths.g_h_res, baths.beta_h, frame.eps20)? * wp
        + detailed_balance_rate(baths.g_c_det, baths.beta_c, frame.eps20)? * wm;
    Ok(EffectiveRates { g1, g2, g1m, g2m })
}

/// Carnot bound 1 - beta_h/beta_c. Errors when the baths are ordered the
/// wrong way around for an engine.
pub fn carnot_efficiency(baths: &BathSpec) -> Result<f64> {
    if baths.beta_c < baths.beta_h {
        return Err(Error::NotAnEngine {
            beta_c: baths.beta_c,
            beta_h: baths.beta_h,
        });
    }
    Ok(1.0 - baths.beta_h / baths.beta_c)
}

/// Temperature-difference coordinate 1/(beta_h omega10) - 1/(beta_c omega10).
pub fn delta_beta(baths: &BathSpec) -> f64 {
    1.0 / baths.beta_h - 1.0 / baths.beta_c
}
