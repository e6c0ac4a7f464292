//! One entry point over every way of computing the law.

use std::fmt;
use std::str::FromStr;

use crate::closed_form::{bullet_pdf_closed, goldstein_density};
use crate::collision::{bullet_density_series, isotropic_density};
use crate::domain::{InitialCondition, MixedDensity, ModelParams, TruncationPolicy};
use crate::error::{Error, Result};
use crate::fourier::{
    fourier_continuous_density, fourier_full_density, identity_residual, AdaptiveHarmonics, FourierCoefficients,
    Harmonics,
};
use crate::Extended;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Bessel closed forms.
    Goldstein,
    /// Resummed reversal-count expansion.
    Collision,
    /// Cosine series with the front folded in; no atoms.
    FourierFull,
    /// Front-subtracted series plus front atoms.
    FourierCont,
    /// Front-subtracted series with coefficients rebuilt from moments.
    Moments,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Goldstein,
        Method::Collision,
        Method::FourierFull,
        Method::FourierCont,
        Method::Moments,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Goldstein => "goldstein",
            Method::Collision => "collision",
            Method::FourierFull => "fourier-full",
            Method::FourierCont => "fourier-cont",
            Method::Moments => "moments",
        }
    }

    /// Builds the law for `ic` at time `t`.
    pub fn density(
        self,
        ic: InitialCondition,
        t: f64,
        params: &ModelParams<f64>,
        settings: &MethodSettings,
    ) -> Result<MixedDensity<f64>> {
        let harmonics = match settings.harmonics {
            Some(h) => Harmonics::Fixed(h),
            None => Harmonics::Adaptive(AdaptiveHarmonics::default()),
        };
        match (self, ic.bullet()) {
            (Method::Goldstein, None) => goldstein_density(t, params),
            (Method::Goldstein, Some(dir)) => bullet_pdf_closed(t, params, dir),
            (Method::Collision, None) => isotropic_density(t, params, settings.truncation),
            (Method::Collision, Some(dir)) => bullet_density_series(t, params, settings.truncation, dir),
            (Method::FourierFull, _) => fourier_full_density(ic, t, params, harmonics),
            (Method::FourierCont, _) => fourier_continuous_density(ic, t, params, harmonics),
            (Method::Moments, _) => {
                let h = settings.harmonics.unwrap_or(MOMENTS_DEFAULT_HARMONICS);
                // The top harmonic needs the most moments; refuse counts the
                // truncated sums cannot resolve.
                let wide: ModelParams<Extended> = params.cast();
                let residual = identity_residual(h, Extended::from(t), &wide, settings.moments)?.hi();
                if !(residual <= MOMENTS_TOLERANCE) {
                    return Err(Error::NotAchievable {
                        h,
                        eps: MOMENTS_TOLERANCE,
                        cap: settings.moments,
                        best: residual,
                    });
                }
                let (coefficients, worst) = FourierCoefficients::<Extended>::from_moments(
                    ic,
                    Extended::from(t),
                    &params.cast(),
                    h,
                    settings.moments,
                    true,
                )?;
                log::debug!(
                    "moment sums: worst relative rounding {:.1e}",
                    worst.relative_rounding().hi()
                );
                coefficients.cast::<f64>().into_density(Harmonics::Fixed(h))
            }
        }
    }
}

/// Harmonics used by [`Method::Moments`] when none are requested.
pub const MOMENTS_DEFAULT_HARMONICS: u32 = 10;

/// Largest moment-identity residual accepted for the top harmonic.
pub const MOMENTS_TOLERANCE: f64 = 1e-6;

/// Moment count used when none is requested; enough for harmonics up to 15.
pub const DEFAULT_MOMENTS: usize = 69;

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown method `{s}`")))
    }
}

/// Truncation knobs shared by the methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSettings {
    /// Fixed harmonic count; `None` selects adaptive harmonics.
    pub harmonics: Option<u32>,
    pub moments: usize,
    pub truncation: TruncationPolicy,
}

impl Default for MethodSettings {
    fn default() -> Self {
        Self {
            harmonics: None,
            moments: DEFAULT_MOMENTS,
            truncation: TruncationPolicy::default(),
        }
    }
}
