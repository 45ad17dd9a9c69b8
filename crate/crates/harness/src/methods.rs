//! Method identifiers used in configs and CSV files.

use serde::{Deserialize, Serialize};
use viopt_core::solvers::{AdamHyper, AdamMode, ExtrapolationOption, Method, PastGradientInit, Report, Rule};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodId {
    /// Projected stochastic gradient, last iterate.
    SimSgd,
    /// Projected stochastic gradient, averaged iterate.
    AvgSgd,
    /// Alternated gradient steps, last iterate.
    AltSgd,
    /// Alternated gradient steps, averaged iterate.
    AvgAltSgd,
    Extragradient,
    AvgExtraSgd,
    PastExtragradient,
    AvgPastExtraSgd,
    /// Extragradient reusing one minibatch for both evaluations, averaged iterate.
    ReExtraSgd,
    Implicit,
    Nesterov,
    ExtraAdam,
    PastExtraAdam,
    SimAdam,
    AltAdam,
}

/// Per-method knobs. Each method accepts only the fields it uses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperConfig {
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub eps: Option<f64>,
    /// Nesterov momentum.
    pub momentum: Option<f64>,
    /// Generator steps per discriminator step of `alt_adam`.
    pub k: Option<usize>,
    pub past_init: Option<PastGradientInit>,
}

impl MethodId {
    pub const ALL: [MethodId; 15] = [
        MethodId::SimSgd,
        MethodId::AvgSgd,
        MethodId::AltSgd,
        MethodId::AvgAltSgd,
        MethodId::Extragradient,
        MethodId::AvgExtraSgd,
        MethodId::PastExtragradient,
        MethodId::AvgPastExtraSgd,
        MethodId::ReExtraSgd,
        MethodId::Implicit,
        MethodId::Nesterov,
        MethodId::ExtraAdam,
        MethodId::PastExtraAdam,
        MethodId::SimAdam,
        MethodId::AltAdam,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::SimSgd => "sim_sgd",
            MethodId::AvgSgd => "avg_sgd",
            MethodId::AltSgd => "alt_sgd",
            MethodId::AvgAltSgd => "avg_alt_sgd",
            MethodId::Extragradient => "extragradient",
            MethodId::AvgExtraSgd => "avg_extra_sgd",
            MethodId::PastExtragradient => "past_extragradient",
            MethodId::AvgPastExtraSgd => "avg_past_extra_sgd",
            MethodId::ReExtraSgd => "re_extra_sgd",
            MethodId::Implicit => "implicit",
            MethodId::Nesterov => "nesterov",
            MethodId::ExtraAdam => "extra_adam",
            MethodId::PastExtraAdam => "past_extra_adam",
            MethodId::SimAdam => "sim_adam",
            MethodId::AltAdam => "alt_adam",
        }
    }

    pub fn parse(s: &str) -> Option<MethodId> {
        MethodId::ALL.into_iter().find(|m| m.as_str() == s)
    }

    pub fn report(self) -> Report {
        match self {
            MethodId::AvgSgd
            | MethodId::AvgAltSgd
            | MethodId::AvgExtraSgd
            | MethodId::AvgPastExtraSgd
            | MethodId::ReExtraSgd => Report::Average,
            _ => Report::Last,
        }
    }

    fn is_adam(self) -> bool {
        matches!(self, MethodId::ExtraAdam | MethodId::PastExtraAdam | MethodId::SimAdam | MethodId::AltAdam)
    }

    fn uses_past(self) -> bool {
        matches!(self, MethodId::PastExtragradient | MethodId::AvgPastExtraSgd)
    }

    /// Rejects hyperparameters the method would silently ignore. `key` is
    /// the config path used in error messages.
    pub fn check_hyper(self, hyper: &HyperConfig, key: &str) -> Result<()> {
        let unused = |field: &str| HarnessError::config(format!("{key}.{field}"), format!("not used by {}", self.as_str()));
        if !self.is_adam() {
            for (name, set) in [("beta1", hyper.beta1.is_some()), ("beta2", hyper.beta2.is_some()), ("eps", hyper.eps.is_some())] {
                if set {
                    return Err(unused(name));
                }
            }
        }
        if hyper.momentum.is_some() && self != MethodId::Nesterov {
            return Err(unused("momentum"));
        }
        if hyper.k.is_some() && self != MethodId::AltAdam {
            return Err(unused("k"));
        }
        if hyper.past_init.is_some() && !self.uses_past() {
            return Err(unused("past_init"));
        }
        if hyper.k == Some(0) {
            return Err(HarnessError::config(format!("{key}.k"), "must be ≥ 1"));
        }
        Ok(())
    }

    pub fn method(self, hyper: &HyperConfig) -> Method {
        let d = AdamHyper::default();
        let adam = AdamHyper {
            beta1: hyper.beta1.unwrap_or(d.beta1),
            beta2: hyper.beta2.unwrap_or(d.beta2),
            eps: hyper.eps.unwrap_or(d.eps),
        };
        match self {
            MethodId::SimSgd | MethodId::AvgSgd => Method::Rule(Rule::Simultaneous),
            MethodId::AltSgd | MethodId::AvgAltSgd => Method::Rule(Rule::Alternated),
            MethodId::Extragradient | MethodId::AvgExtraSgd => Method::Rule(Rule::Extragradient { reuse_sample: false }),
            MethodId::ReExtraSgd => Method::Rule(Rule::Extragradient { reuse_sample: true }),
            MethodId::PastExtragradient | MethodId::AvgPastExtraSgd => Method::Rule(Rule::PastExtragradient),
            MethodId::Implicit => Method::Rule(Rule::Implicit),
            MethodId::Nesterov => Method::Rule(Rule::Nesterov { beta: hyper.momentum.unwrap_or(0.9) }),
            MethodId::ExtraAdam => Method::ExtraAdam { hyper: adam, option: ExtrapolationOption::Standard },
            MethodId::PastExtraAdam => Method::ExtraAdam { hyper: adam, option: ExtrapolationOption::FromPast },
            MethodId::SimAdam => Method::Adam { hyper: adam, mode: AdamMode::Simultaneous },
            MethodId::AltAdam => Method::Adam { hyper: adam, mode: AdamMode::Alternated { k: hyper.k.unwrap_or(1) } },
        }
    }
}
