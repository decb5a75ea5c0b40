//! Closed-form periodic test signals evaluated at raw (non-normalized) `x`.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("period must be positive and finite, got {0}")]
    Period(f64),
    #[error("noise standard deviation must be finite and nonnegative, got {0}")]
    NoiseSigma(f64),
    #[error("custom signal needs at least one component")]
    EmptySum,
}

fn check_period(p: f64) -> Result<(), SignalError> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(SignalError::Period(p))
    }
}

pub fn eval_sine(x: f64) -> f64 {
    libm::sin(x)
}

/// `sin(x) + 2.5 sin(3.7 + 1.4x)`
pub fn eval_composite_sine(x: f64) -> f64 {
    libm::sin(x) + 2.5 * libm::sin(3.7 + 1.4 * x)
}

fn centered(u: f64) -> f64 {
    u - libm::floor(u + 0.5)
}

/// Centered sawtooth `2(x/p - floor(x/p + 1/2))`, range `[-1, 1)`.
pub fn eval_sawtooth(x: f64, p: f64) -> Result<f64, SignalError> {
    check_period(p)?;
    Ok(2.0 * centered(x / p))
}

/// `2|sawtooth(x, p)| - 1`, range `[-1, 1]`.
pub fn eval_triangle(x: f64, p: f64) -> Result<f64, SignalError> {
    check_period(p)?;
    Ok(4.0 * libm::fabs(centered(x / p)) - 1.0)
}

/// `(A/2)(sin(2πx/p1) + sin(2πx/p2))`
pub fn eval_beat(x: f64, p1: f64, p2: f64, amplitude: f64) -> Result<f64, SignalError> {
    check_period(p1)?;
    check_period(p2)?;
    Ok(0.5 * amplitude * (libm::sin(TAU * x / p1) + libm::sin(TAU * x / p2)))
}

/// `A exp(-λ frac(x/p))`, resetting to `A` at every multiple of `p`.
pub fn eval_expdecay(x: f64, p: f64, rate: f64, amplitude: f64) -> Result<f64, SignalError> {
    check_period(p)?;
    let u = x / p;
    Ok(amplitude * libm::exp(-rate * (u - libm::floor(u))))
}

/// `A sgn(sin(2πx/p))` with `sgn(0) = 0`.
pub fn eval_square(x: f64, p: f64, amplitude: f64) -> Result<f64, SignalError> {
    check_period(p)?;
    let s = libm::sin(TAU * x / p);
    Ok(if s > 0.0 {
        amplitude
    } else if s < 0.0 {
        -amplitude
    } else {
        0.0
    })
}

/// One additive term of a [`SignalKind::CustomSum`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "shape", rename_all = "snake_case"))]
pub enum Component {
    /// `A sin(2πx/p + phase)`
    Sine { period: f64, amplitude: f64, phase: f64 },
    Sawtooth { period: f64, amplitude: f64 },
    Triangle { period: f64, amplitude: f64 },
    Beat { p1: f64, p2: f64, amplitude: f64 },
    ExpDecay { period: f64, rate: f64, amplitude: f64 },
    Square { period: f64, amplitude: f64 },
}

impl Component {
    pub fn eval(&self, x: f64) -> Result<f64, SignalError> {
        match *self {
            Component::Sine { period, amplitude, phase } => {
                check_period(period)?;
                Ok(amplitude * libm::sin(TAU * x / period + phase))
            }
            Component::Sawtooth { period, amplitude } => Ok(amplitude * eval_sawtooth(x, period)?),
            Component::Triangle { period, amplitude } => Ok(amplitude * eval_triangle(x, period)?),
            Component::Beat { p1, p2, amplitude } => eval_beat(x, p1, p2, amplitude),
            Component::ExpDecay { period, rate, amplitude } => eval_expdecay(x, period, rate, amplitude),
            Component::Square { period, amplitude } => eval_square(x, period, amplitude),
        }
    }

    /// Periods of the individual oscillations in this term.
    pub fn periods(&self) -> Vec<f64> {
        match *self {
            Component::Beat { p1, p2, .. } => alloc::vec![p1, p2],
            Component::Sine { period, .. }
            | Component::Sawtooth { period, .. }
            | Component::Triangle { period, .. }
            | Component::ExpDecay { period, .. }
            | Component::Square { period, .. } => alloc::vec![period],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum SignalKind {
    /// `sin(x)`
    Sine,
    /// `sin(x) + 2.5 sin(3.7 + 1.4x)`
    CompositeSine,
    /// `sawtooth(x, 3.1) + triangle(x, 5)`
    SawTriangle,
    /// `beat(x, 2.1, 2.3, 4) + expdecay(x, 7.2, 9.7, 2) + square(x, 12.2, 0.7)`
    CompositeMixed,
    CustomSum { components: Vec<Component> },
}

/// A signal plus the standard deviation of additive Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignalSpec {
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub kind: SignalKind,
    #[cfg_attr(feature = "serde", serde(default))]
    pub noise_sigma: f64,
}

impl SignalSpec {
    pub fn new(kind: SignalKind) -> Self {
        Self { kind, noise_sigma: 0.0 }
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(SignalError::NoiseSigma(self.noise_sigma));
        }
        if let SignalKind::CustomSum { components } = &self.kind {
            if components.is_empty() {
                return Err(SignalError::EmptySum);
            }
            for p in components.iter().flat_map(|c| c.periods()) {
                check_period(p)?;
            }
        }
        Ok(())
    }

    /// Noiseless value at raw `x`.
    pub fn eval_clean(&self, x: f64) -> Result<f64, SignalError> {
        match &self.kind {
            SignalKind::Sine => Ok(eval_sine(x)),
            SignalKind::CompositeSine => Ok(eval_composite_sine(x)),
            SignalKind::SawTriangle => Ok(eval_sawtooth(x, 3.1)? + eval_triangle(x, 5.0)?),
            SignalKind::CompositeMixed => Ok(eval_beat(x, 2.1, 2.3, 4.0)?
                + eval_expdecay(x, 7.2, 9.7, 2.0)?
                + eval_square(x, 12.2, 0.7)?),
            SignalKind::CustomSum { components } => {
                if components.is_empty() {
                    return Err(SignalError::EmptySum);
                }
                components.iter().map(|c| c.eval(x)).sum()
            }
        }
    }

    /// Periods of every oscillating term, used for phase coloring.
    pub fn periods(&self) -> Vec<f64> {
        match &self.kind {
            SignalKind::Sine => alloc::vec![TAU],
            SignalKind::CompositeSine => alloc::vec![TAU, TAU / 1.4],
            SignalKind::SawTriangle => alloc::vec![3.1, 5.0],
            SignalKind::CompositeMixed => alloc::vec![2.1, 2.3, 7.2, 12.2],
            SignalKind::CustomSum { components } => components.iter().flat_map(|c| c.periods()).collect(),
        }
    }

    /// Longest component period; one "cycle" in the cycle-count sweep.
    pub fn fundamental_period(&self) -> f64 {
        self.periods().into_iter().fold(0.0, f64::max)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            SignalKind::Sine => "sine",
            SignalKind::CompositeSine => "composite_sine",
            SignalKind::SawTriangle => "saw_triangle",
            SignalKind::CompositeMixed => "composite_mixed",
            SignalKind::CustomSum { .. } => "custom_sum",
        }
    }
}

/// Clean value plus one `N(0, σ²)` draw from `rng` (no draw when `σ = 0`).
pub fn eval_signal<R: Rng + ?Sized>(spec: &SignalSpec, x: f64, rng: &mut R) -> Result<f64, SignalError> {
    spec.validate()?;
    let clean = spec.eval_clean(x)?;
    if spec.noise_sigma == 0.0 {
        return Ok(clean);
    }
    let z: f64 = rng.sample(StandardNormal);
    Ok(clean + spec.noise_sigma * z)
}
