pub mod compare;
pub mod eval;
pub mod forge;
pub mod heatmap;
pub mod ingest;
pub mod report;
pub mod score;

use clap::ValueEnum;

use ambiq_core::metrics::ReinforceDenominator;

/// Which predictions enter the reinforcement ratio's denominator.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DenominatorArg {
    /// Incorrect predictions only (the default definition).
    ErrorsOnly,
    /// Also count correct multiple-choice predictions as non-reinforcing.
    AllPredictions,
}

impl From<DenominatorArg> for ReinforceDenominator {
    fn from(value: DenominatorArg) -> Self {
        match value {
            DenominatorArg::ErrorsOnly => ReinforceDenominator::ErrorsOnly,
            DenominatorArg::AllPredictions => ReinforceDenominator::AllPredictions,
        }
    }
}
