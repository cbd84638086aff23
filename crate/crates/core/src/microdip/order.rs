use std::fmt;

use serde::{Deserialize, Serialize};

use super::map::MapGraph;
use crate::error::{Error, Result};

/// What a unit does this turn. Node ids refer to the map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OrderKind {
    Hold,
    Move(u8),
    /// Support the unit at the node in holding.
    SupportHold(u8),
    /// Support the unit at `.0` moving into `.1`.
    SupportMove(u8, u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Order {
    pub unit: u8,
    pub kind: OrderKind,
}

/// One order per unit of the acting player, sorted by unit location.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlayerAction(pub Vec<Order>);

impl PlayerAction {
    pub fn orders(&self) -> &[Order] {
        &self.0
    }

    pub fn order_for(&self, unit: u8) -> Option<OrderKind> {
        self.0
            .binary_search_by_key(&unit, |o| o.unit)
            .ok()
            .map(|i| self.0[i].kind)
    }

    /// Parses the text form written by [`PlayerAction::display`], e.g.
    /// `"a2 S a3 - b3, a3 - b3, b1 H"`. Orders may come in any order.
    pub fn parse(map: &MapGraph, text: &str) -> Result<Self> {
        let mut orders = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let spaced = part.replace('-', " - ");
            let toks: Vec<&str> = spaced.split_whitespace().collect();
            let node = |t: &str| map.node_id(t);
            let kind = match toks.as_slice() {
                [_, "H"] => OrderKind::Hold,
                [_, "-", d] => OrderKind::Move(node(d)?),
                [_, "S", t] => OrderKind::SupportHold(node(t)?),
                [_, "S", s, "-", d] => OrderKind::SupportMove(node(s)?, node(d)?),
                _ => return Err(Error::Config(format!("cannot parse order '{part}'"))),
            };
            orders.push(Order { unit: node(toks[0])?, kind });
        }
        orders.sort();
        if orders.windows(2).any(|w| w[0].unit == w[1].unit) {
            return Err(Error::Config("two orders for one unit".into()));
        }
        Ok(PlayerAction(orders))
    }

    pub fn display(&self, map: &MapGraph) -> String {
        if self.0.is_empty() {
            return "(no units)".into();
        }
        self.0
            .iter()
            .map(|o| OrderDisplay { order: o, map }.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

pub struct OrderDisplay<'a> {
    pub order: &'a Order,
    pub map: &'a MapGraph,
}

impl fmt::Display for OrderDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = |i: u8| self.map.nodes[i as usize].as_str();
        let u = n(self.order.unit);
        match self.order.kind {
            OrderKind::Hold => write!(f, "{u} H"),
            OrderKind::Move(d) => write!(f, "{u} - {}", n(d)),
            OrderKind::SupportHold(t) => write!(f, "{u} S {}", n(t)),
            OrderKind::SupportMove(s, d) => write!(f, "{u} S {} - {}", n(s), n(d)),
        }
    }
}

/// Legal orders for the unit at `loc` owned by `owner`, in canonical order.
///
/// Supports may only name the owner's own units. A support-move needs the
/// destination adjacent to both the supporter and the supported unit.
pub fn valid_orders(map: &MapGraph, units: &[Option<u8>], loc: u8, owner: u8) -> Vec<OrderKind> {
    let own = |x: u8| units[x as usize] == Some(owner);
    let mut out = vec![OrderKind::Hold];
    out.extend(map.neighbors(loc).iter().map(|&d| OrderKind::Move(d)));
    out.extend(
        map.neighbors(loc)
            .iter()
            .filter(|&&t| own(t))
            .map(|&t| OrderKind::SupportHold(t)),
    );
    let mut moves = Vec::new();
    for &dest in map.neighbors(loc) {
        for &src in map.neighbors(dest) {
            if src != loc && own(src) {
                moves.push(OrderKind::SupportMove(src, dest));
            }
        }
    }
    moves.sort_unstable();
    out.extend(moves);
    out
}

/// Whether `kind` is in [`valid_orders`] for the unit at `loc`.
pub fn is_valid_order(map: &MapGraph, units: &[Option<u8>], loc: u8, owner: u8, kind: OrderKind) -> bool {
    let n = map.num_nodes() as u8;
    let own = |x: u8| x < n && units[x as usize] == Some(owner);
    match kind {
        OrderKind::Hold => true,
        OrderKind::Move(d) => d < n && map.adjacent(loc, d),
        OrderKind::SupportHold(t) => own(t) && map.adjacent(loc, t),
        OrderKind::SupportMove(s, d) => {
            own(s) && d < n && s != loc && map.adjacent(loc, d) && map.adjacent(s, d)
        }
    }
}
