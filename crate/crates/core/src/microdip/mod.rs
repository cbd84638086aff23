//! Miniature simultaneous-move territory game with hold, move and support
//! orders.

mod adjudicate;
mod env;
mod map;
mod order;
mod render;

pub use adjudicate::{adjudicate, Resolution};
pub use env::{sos_score, BoardState, MicroDip};
pub use map::MapGraph;
pub use order::{is_valid_order, valid_orders, Order, OrderDisplay, OrderKind, PlayerAction};
pub use render::{render_dot, render_text};

use crate::error::{Error, Result};

pub const PRESETS: [&str; 3] = ["duel9", "arena16", "tri12"];

/// Named map preset.
pub fn standard_map(name: &str) -> Result<MapGraph> {
    match name {
        "duel9" => Ok(MapGraph::duel9()),
        "arena16" => Ok(MapGraph::arena16()),
        "tri12" => Ok(MapGraph::tri12()),
        other => Err(Error::Unknown {
            kind: "map",
            name: other.to_owned(),
        }),
    }
}

#[cfg(test)]
mod tests;
