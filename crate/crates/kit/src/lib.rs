//! File formats, configuration and the command-line driver around
//! [`grasp_core`].

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod gfea;
pub mod pnm;
pub mod svg;
pub mod tables;

pub use error::KitError;

/// Published ImageNet cost/accuracy points for 23 backbones, in the card
/// format read by [`tables::read_cards`].
pub const BUNDLED_CARDS: &str = include_str!("../data/cards.csv");
