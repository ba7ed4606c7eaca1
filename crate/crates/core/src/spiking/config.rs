use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How a patch's potential responds to an accepted event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Each event raises the potential by one.
    #[default]
    Plain,
    /// Like `Plain`, minus a leak proportional to the time since the
    /// previous accepted event in the patch.
    Decay,
    /// The potential is the number of pending events, after dropping those
    /// older than `max_token_span_us` relative to the newest.
    Discrete,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid tokenizer config: {field}: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

impl ConfigError {
    fn new(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError {
            field,
            reason: reason.into(),
        }
    }
}

/// Parameters of the spiking-patch tokenizer. All durations are microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    /// Side length of a square patch in pixels.
    pub patch_size: u16,
    /// Spike threshold on the patch potential.
    pub threshold: f64,
    /// Absolute refractory period: events in `[spike, spike + T)` are dropped.
    pub refractory_us: u64,
    /// Relative refractory period following the absolute one.
    pub relative_refractory_us: u64,
    /// Input gain inside the relative refractory period, in `[0, 1]`.
    pub relative_scale: f64,
    /// Potential leak per microsecond (decay variant only).
    pub decay_per_us: f64,
    /// Longest allowed time between the oldest and newest pending event
    /// (discrete variant only). `None` is unbounded.
    pub max_token_span_us: Option<u64>,
    pub variant: Variant,
}

impl Default for TokenizerConfig {
    /// `P = 16`, `sigma = P^2`, no refractory periods, plain variant.
    fn default() -> Self {
        TokenizerConfig {
            patch_size: 16,
            threshold: 256.0,
            refractory_us: 0,
            relative_refractory_us: 0,
            relative_scale: 0.5,
            decay_per_us: 0.0,
            max_token_span_us: None,
            variant: Variant::Plain,
        }
    }
}

impl TokenizerConfig {
    /// Plain tokenizer with the given patch size and threshold.
    pub fn plain(patch_size: u16, threshold: f64) -> Self {
        TokenizerConfig {
            patch_size,
            threshold,
            ..Default::default()
        }
    }

    pub fn with_refractory_us(mut self, refractory_us: u64) -> Self {
        self.refractory_us = refractory_us;
        self
    }

    pub fn with_relative_refractory(mut self, duration_us: u64, scale: f64) -> Self {
        self.relative_refractory_us = duration_us;
        self.relative_scale = scale;
        self
    }

    pub fn with_decay(mut self, decay_per_us: f64) -> Self {
        self.variant = Variant::Decay;
        self.decay_per_us = decay_per_us;
        self
    }

    pub fn discrete(mut self, max_token_span_us: Option<u64>) -> Self {
        self.variant = Variant::Discrete;
        self.max_token_span_us = max_token_span_us;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.patch_size == 0 {
            return Err(ConfigError::new("patch_size", "must be at least 1"));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(ConfigError::new("threshold", "must be a positive finite number"));
        }
        if !(0.0..=1.0).contains(&self.relative_scale) {
            return Err(ConfigError::new("relative_scale", "must lie in [0, 1]"));
        }
        if !(self.decay_per_us.is_finite() && self.decay_per_us >= 0.0) {
            return Err(ConfigError::new("decay_per_us", "must be a non-negative finite number"));
        }
        match self.variant {
            Variant::Plain if self.decay_per_us != 0.0 => Err(ConfigError::new(
                "decay_per_us",
                "decay requires the decay variant",
            )),
            Variant::Discrete if self.decay_per_us != 0.0 => Err(ConfigError::new(
                "variant",
                "the discrete variant does not support decay",
            )),
            Variant::Discrete if self.relative_refractory_us != 0 => Err(ConfigError::new(
                "variant",
                "the discrete variant does not support a relative refractory period",
            )),
            Variant::Plain | Variant::Decay if self.max_token_span_us.is_some() => Err(
                ConfigError::new("max_token_span_us", "only the discrete variant bounds token spans"),
            ),
            _ => Ok(()),
        }
    }
}
