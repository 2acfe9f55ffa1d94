//! Calibrated attribute distributions, classifier-chain composition and the
//! quantity ruleset.

pub mod calibration;
pub mod chain;
pub mod input;
pub mod rules;

pub use calibration::{
    fit_temperature, negative_log_likelihood, softmax, CalibratedDistribution, ScoreVector, TemperatureDiagnostic,
    TemperatureFit,
};
pub use chain::{
    class_key, compose_chain, ChainConstraintSet, ChainDiagnostics, ChainRule, ChainStage, ClassLabel, ExposureClass,
    ExposureClassDistribution,
};
pub use input::{asset_class_distribution, truth_label, ScoreFile};
pub use rules::{derive_quantities, ComponentQuantities, ComponentRule, QuantityRules};
