//! Recovery-rate pricing and the jump-extended volatility-stabilized market model.

mod curve;
mod recovery;
mod spt;

use thiserror::Error;

use crate::generator::GenError;
use crate::moments::MomentError;
use crate::specmodel::ModelError;

pub use curve::DiscountCurve;
pub use recovery::{
    defaultable_bond_price, forward_from_state, price_table, recovery_forward, square_forward_as_printed,
    write_price_csv, Payoff, PriceRow, RecoveryModel,
};
pub use spt::{spt_build, spt_check_interior, InteriorReport, SptJump, SptModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AppError {
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("discount curve has no tenor covering T = {0}")]
    CurveMissingTenor(f64),
    #[error("invalid discount curve: {0}")]
    BadCurve(String),
    #[error("recovery model needs an interval Type 2 spec with no-jump point 0")]
    NotType2,
    #[error("payoff is not increasing on [0,1]; supply the state directly")]
    NonInjective,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Gen(#[from] GenError),
}
