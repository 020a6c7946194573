pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod game;
pub mod graph;
pub mod harness;
pub mod stats;
mod util;

pub use error::{Error, Result};
pub use game::{Game, Player, Profile};
