//! Continuous-time forward process and the conditional denoiser contract.
//!
//! Time runs over `[0, 1]`. The forward marginal is
//! `q(x_t | x_0) = Normal(alpha(t) * x_0, sigma(t)^2 * I)`, sampled directly
//! rather than by stepping a discrete chain.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, contract, Error, Result};

/// A data point `x_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub data: Vec<f64>,
}

impl Observation {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(contract("observation must have dimension >= 1"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(contract("observation entries must be finite"));
        }
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }
}

/// A noised observation together with the draw that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisedObservation {
    pub data: Vec<f64>,
    pub time: f64,
    pub noise_draw: Vec<f64>,
}

/// Conditioning signal handed to the denoiser: a class id and its prompt.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub class_id: usize,
    pub prompt: String,
}

impl Condition {
    pub fn new(class_id: usize, prompt: impl Into<String>) -> Result<Self> {
        let prompt = prompt.into();
        if prompt.is_empty() {
            return Err(contract("condition prompt must be nonempty"));
        }
        Ok(Self { class_id, prompt })
    }
}

/// Builds the label set `{ φ(y_k) }` for `names`, with class ids `0..K`.
pub fn label_set<S: AsRef<str>>(names: &[S]) -> Result<Vec<Condition>> {
    names
        .iter()
        .enumerate()
        .map(|(k, name)| Condition::new(k, prompt_for(name.as_ref())))
        .collect()
}

/// The default label-to-prompt mapping.
pub fn prompt_for(label: &str) -> String {
    format!("A photo of a {label}.")
}

/// Default label names `class 0 .. class K-1`.
pub fn default_label_names(num_classes: usize) -> Vec<String> {
    (0..num_classes).map(|k| format!("class {k}")).collect()
}

/// A conditional denoiser: predicts `x_0` from `(x_t, t, condition)`.
///
/// Implementations must be deterministic and must write exactly `x_t.len()`
/// values.
pub trait ScoreModel {
    /// Dimension of the observations this model accepts.
    fn dim(&self) -> usize;

    fn denoise_into(&self, x_t: &[f64], t: f64, condition: &Condition, out: &mut [f64]);

    fn denoise(&self, x_t: &[f64], t: f64, condition: &Condition) -> Vec<f64> {
        let mut out = vec![0.0; x_t.len()];
        self.denoise_into(x_t, t, condition, &mut out);
        out
    }
}

impl<M: ScoreModel + ?Sized> ScoreModel for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn denoise_into(&self, x_t: &[f64], t: f64, condition: &Condition, out: &mut [f64]) {
        (**self).denoise_into(x_t, t, condition, out)
    }
}

/// Values of the schedule at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleValues {
    pub alpha: f64,
    pub sigma: f64,
    /// `alpha^2 / sigma^2`; `+inf` at `t = 0`.
    pub snr: f64,
}

/// Variance-preserving noise schedule families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSchedule {
    /// `alpha = cos(πt/2)`, `sigma = sin(πt/2)`.
    #[default]
    Cosine,
    /// `alpha = sqrt(1 - t)`, `sigma = sqrt(t)`.
    Linear,
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain(format!("time {t} outside [0, 1]")))
    }
}

impl NoiseSchedule {
    /// `(alpha, sigma)` without range checks; exact at the boundaries.
    pub(crate) fn alpha_sigma(self, t: f64) -> (f64, f64) {
        if t <= 0.0 {
            return (1.0, 0.0);
        }
        if t >= 1.0 {
            return (0.0, 1.0);
        }
        match self {
            NoiseSchedule::Cosine => {
                let (s, c) = (FRAC_PI_2 * t).sin_cos();
                (c, s)
            }
            NoiseSchedule::Linear => ((1.0 - t).sqrt(), t.sqrt()),
        }
    }

    pub(crate) fn snr_unchecked(self, t: f64) -> f64 {
        let (a, s) = self.alpha_sigma(t);
        if s == 0.0 {
            f64::INFINITY
        } else {
            (a * a) / (s * s)
        }
    }

    /// Evaluates `(alpha(t), sigma(t), snr(t))`.
    pub fn eval(self, t: f64) -> Result<ScheduleValues> {
        check_time(t)?;
        let (alpha, sigma) = self.alpha_sigma(t);
        Ok(ScheduleValues {
            alpha,
            sigma,
            snr: self.snr_unchecked(t),
        })
    }

    /// `|d snr / dt|`, closed form for the cosine family and a central
    /// difference (step 1e-6) otherwise.
    pub(crate) fn snr_derivative_abs(self, t: f64) -> f64 {
        match self {
            NoiseSchedule::Cosine => {
                // snr = cot^2(u), u = πt/2  =>  |snr'| = π cot(u) csc^2(u)
                let (s, c) = (FRAC_PI_2 * t).sin_cos();
                std::f64::consts::PI * c / (s * s * s)
            }
            _ => {
                const H: f64 = 1e-6;
                let (lo, hi) = if t + H > 1.0 {
                    (t - 2.0 * H, t)
                } else if t - H < 0.0 {
                    (t, t + 2.0 * H)
                } else {
                    (t - H, t + H)
                };
                ((self.snr_unchecked(hi) - self.snr_unchecked(lo)) / (hi - lo)).abs()
            }
        }
    }

    /// Draws `x_t = alpha(t) x_0 + sigma(t) ε` with `ε ~ Normal(0, I)`.
    pub fn sample_forward<R: Rng + ?Sized>(
        self,
        x0: &[f64],
        t: f64,
        rng: &mut R,
    ) -> Result<NoisedObservation> {
        check_time(t)?;
        let noise_draw: Vec<f64> = (0..x0.len()).map(|_| rng.sample(StandardNormal)).collect();
        Ok(self.noise_with(x0, t, noise_draw))
    }

    /// Rebuilds `x_t` from a recorded noise draw.
    pub fn noise_with(self, x0: &[f64], t: f64, noise_draw: Vec<f64>) -> NoisedObservation {
        let (alpha, sigma) = self.alpha_sigma(t);
        let data = x0
            .iter()
            .zip(&noise_draw)
            .map(|(x, e)| alpha * x + sigma * e)
            .collect();
        NoisedObservation {
            data,
            time: t,
            noise_draw,
        }
    }
}

/// `‖x_0 − x̂‖²`, summed over coordinates.
pub fn squared_error_score(x0: &[f64], x_hat: &[f64]) -> Result<f64> {
    check_dim(x0.len(), x_hat.len())?;
    Ok(sq_dist(x0, x_hat))
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
