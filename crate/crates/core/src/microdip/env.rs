use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;

use super::adjudicate::adjudicate;
use super::map::MapGraph;
use super::order::{is_valid_order, valid_orders, Order, OrderKind, PlayerAction};
use crate::error::{Error, Result};
use crate::stogame::Game;

const EMPTY: u8 = u8::MAX;

/// Board position: unit owner per node, owner per supply center, turn.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoardState {
    pub units: Vec<Option<u8>>,
    pub sc_owner: Vec<Option<u8>>,
    pub turn: u16,
    pub terminal: bool,
}

impl BoardState {
    pub fn unit_locations(&self, player: u8) -> Vec<u8> {
        (0..self.units.len() as u8)
            .filter(|&x| self.units[x as usize] == Some(player))
            .collect()
    }

    pub fn sc_counts(&self, players: usize) -> Vec<usize> {
        let mut c = vec![0; players];
        for o in self.sc_owner.iter().flatten() {
            c[*o as usize] += 1;
        }
        c
    }
}

/// Sum-of-squares share of supply centers, or a win of 1 for a player at or
/// above the victory threshold. Scores sum to 1; nobody holding a center
/// splits evenly.
pub fn sos_score(counts: &[usize], victory_threshold: usize) -> Vec<f64> {
    if let Some(w) = counts.iter().position(|&c| c >= victory_threshold) {
        let mut out = vec![0.0; counts.len()];
        out[w] = 1.0;
        return out;
    }
    let total: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    if total == 0.0 {
        return vec![1.0 / counts.len() as f64; counts.len()];
    }
    counts.iter().map(|&c| (c * c) as f64 / total).collect()
}

/// Simultaneous-move territory game on a [`MapGraph`].
///
/// Supply centers change hands at the end of every `capture_every`-th turn
/// and on the final turn. The game ends when a player owns at least
/// `victory_threshold` centers or after `max_turns` turns; terminal states
/// pay [`sos_score`], all other states pay zero.
#[derive(Clone, Debug)]
pub struct MicroDip {
    pub map: Arc<MapGraph>,
    pub max_turns: usize,
    pub victory_threshold: usize,
    pub capture_every: usize,
    discount: f64,
    name: String,
}

impl MicroDip {
    pub fn new(map: MapGraph, max_turns: usize) -> Result<Self> {
        map.validate()?;
        let threshold = map.supply_centers.len() / 2 + 1;
        Self::with_rules(map, max_turns, threshold, 2)
    }

    pub fn with_rules(
        map: MapGraph,
        max_turns: usize,
        victory_threshold: usize,
        capture_every: usize,
    ) -> Result<Self> {
        map.validate()?;
        if max_turns == 0 || max_turns > u16::MAX as usize || capture_every == 0 {
            return Err(Error::Config("max_turns and capture_every must be positive".into()));
        }
        if victory_threshold == 0 {
            return Err(Error::Config("victory threshold must be positive".into()));
        }
        let name = map.name.clone();
        Ok(Self {
            map: Arc::new(map),
            max_turns,
            victory_threshold,
            capture_every,
            discount: 1.0,
            name,
        })
    }

    pub fn with_discount(mut self, discount: f64) -> Result<Self> {
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(Error::Config(format!("discount {discount} outside (0, 1]")));
        }
        self.discount = discount;
        Ok(self)
    }

    /// Renames the game (used to tag variants in checkpoints).
    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn duel9(max_turns: usize) -> Self {
        Self::new(MapGraph::duel9(), max_turns).expect("preset map is valid")
    }

    pub fn arena16(max_turns: usize) -> Self {
        Self::new(MapGraph::arena16(), max_turns).expect("preset map is valid")
    }

    pub fn tri12(max_turns: usize) -> Self {
        Self::new(MapGraph::tri12(), max_turns).expect("preset map is valid")
    }

    /// A state with the given units and center owners at `turn`.
    pub fn state_with(
        &self,
        units: &[(u8, u8)],
        sc_owner: Vec<Option<u8>>,
        turn: u16,
    ) -> Result<BoardState> {
        if sc_owner.len() != self.map.supply_centers.len() {
            return Err(Error::InvalidMap("one owner entry per supply center".into()));
        }
        let mut cells = vec![None; self.map.num_nodes()];
        for &(node, p) in units {
            if node as usize >= cells.len() || p as usize >= self.num_players() {
                return Err(Error::InvalidMap("unit references unknown node or player".into()));
            }
            if cells[node as usize].replace(p).is_some() {
                return Err(Error::InvalidMap("two units on one node".into()));
            }
        }
        let mut s = BoardState {
            units: cells,
            sc_owner,
            turn,
            terminal: false,
        };
        s.terminal = self.ends(&s);
        Ok(s)
    }

    fn ends(&self, s: &BoardState) -> bool {
        s.turn as usize >= self.max_turns
            || s.sc_counts(self.num_players())
                .iter()
                .any(|&c| c >= self.victory_threshold)
    }

    fn is_capture_turn(&self, completed: usize) -> bool {
        completed % self.capture_every == 0 || completed >= self.max_turns
    }

    fn per_unit_orders(&self, state: &BoardState, player: usize) -> Vec<(u8, Vec<OrderKind>)> {
        state
            .unit_locations(player as u8)
            .into_iter()
            .map(|loc| (loc, valid_orders(&self.map, &state.units, loc, player as u8)))
            .collect()
    }

    fn check_player(&self, state: &BoardState, player: usize) -> Result<()> {
        if state.terminal {
            return Err(Error::TerminalState);
        }
        if player >= self.num_players() {
            return Err(Error::IllegalAction {
                player,
                detail: "no such player".into(),
            });
        }
        Ok(())
    }

    /// Own units on the nodes adjacent to `location`.
    pub fn clique(&self, state: &BoardState, player: usize, location: u8) -> Vec<u8> {
        self.map
            .neighbors(location)
            .iter()
            .copied()
            .filter(|&x| state.units[x as usize] == Some(player as u8))
            .collect()
    }
}

impl Game for MicroDip {
    type State = BoardState;
    type Action = PlayerAction;

    fn name(&self) -> &str {
        &self.name
    }

    fn num_players(&self) -> usize {
        self.map.num_players()
    }

    fn initial_state(&self) -> BoardState {
        let mut sc_owner = vec![None; self.map.supply_centers.len()];
        for (p, homes) in self.map.home_centers.iter().enumerate() {
            for &h in homes {
                sc_owner[self.map.sc_index(h).unwrap()] = Some(p as u8);
            }
        }
        self.state_with(&self.map.initial_units, sc_owner, 0)
            .expect("validated map")
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn max_turns(&self) -> usize {
        self.max_turns
    }

    fn turn(&self, state: &BoardState) -> usize {
        state.turn as usize
    }

    fn is_terminal(&self, state: &BoardState) -> bool {
        state.terminal
    }

    fn enumerate_actions(
        &self,
        state: &BoardState,
        player: usize,
        cap: usize,
    ) -> Result<Vec<PlayerAction>> {
        self.check_player(state, player)?;
        let per_unit = self.per_unit_orders(state, player);
        let counts: Vec<usize> = per_unit.iter().map(|(_, o)| o.len()).collect();
        let total = counts.iter().try_fold(1usize, |a, &c| a.checked_mul(c)).unwrap_or(usize::MAX);
        let mut out = Vec::with_capacity(total.min(cap).min(1 << 20));
        let mut pos = vec![0usize; counts.len()];
        while out.len() < total.min(cap) {
            out.push(PlayerAction(
                per_unit
                    .iter()
                    .zip(&pos)
                    .map(|((loc, opts), &i)| Order { unit: *loc, kind: opts[i] })
                    .collect(),
            ));
            crate::matrix::advance(&mut pos, &counts);
        }
        Ok(out)
    }

    fn action_count(&self, state: &BoardState, player: usize) -> Result<u128> {
        self.check_player(state, player)?;
        Ok(self
            .per_unit_orders(state, player)
            .iter()
            .map(|(_, o)| o.len() as u128)
            .product())
    }

    fn sample_action<R: Rng + ?Sized>(
        &self,
        state: &BoardState,
        player: usize,
        rng: &mut R,
    ) -> Result<PlayerAction> {
        self.check_player(state, player)?;
        Ok(PlayerAction(
            self.per_unit_orders(state, player)
                .into_iter()
                .map(|(loc, opts)| Order {
                    unit: loc,
                    kind: *opts.choose(rng).unwrap(),
                })
                .collect(),
        ))
    }

    fn validate_action(&self, state: &BoardState, player: usize, action: &PlayerAction) -> Result<()> {
        self.check_player(state, player)?;
        let locs = state.unit_locations(player as u8);
        let illegal = |detail: String| Error::IllegalAction { player, detail };
        if action.0.len() != locs.len() {
            return Err(illegal(format!(
                "{} orders for {} units",
                action.0.len(),
                locs.len()
            )));
        }
        for (o, &loc) in action.0.iter().zip(&locs) {
            if o.unit != loc {
                return Err(illegal(format!("order for node {} but unit is at {loc}", o.unit)));
            }
            if !is_valid_order(&self.map, &state.units, loc, player as u8, o.kind) {
                return Err(illegal(format!("invalid order {:?} at {loc}", o.kind)));
            }
        }
        Ok(())
    }

    fn next_state(&self, state: &BoardState, joint: &[PlayerAction]) -> Result<BoardState> {
        if state.terminal {
            return Err(Error::TerminalState);
        }
        let mut orders = vec![None; self.map.num_nodes()];
        for action in joint {
            for o in &action.0 {
                if (o.unit as usize) < orders.len() {
                    orders[o.unit as usize] = Some(o.kind);
                }
            }
        }
        let res = adjudicate(&self.map, &state.units, &orders);
        let completed = state.turn as usize + 1;
        let mut sc_owner = state.sc_owner.clone();
        if self.is_capture_turn(completed) {
            for (i, &node) in self.map.supply_centers.iter().enumerate() {
                if let Some(p) = res.units[node as usize] {
                    sc_owner[i] = Some(p);
                }
            }
        }
        let mut next = BoardState {
            units: res.units,
            sc_owner,
            turn: completed as u16,
            terminal: false,
        };
        next.terminal = self.ends(&next);
        Ok(next)
    }

    fn reward(&self, state: &BoardState) -> Vec<f64> {
        if state.terminal {
            sos_score(&state.sc_counts(self.num_players()), self.victory_threshold)
        } else {
            vec![0.0; self.num_players()]
        }
    }

    fn encode_state(&self, s: &BoardState) -> Vec<u8> {
        let mut out = Vec::with_capacity(3 + s.units.len() + s.sc_owner.len());
        out.extend_from_slice(&s.turn.to_le_bytes());
        out.push(s.terminal as u8);
        out.extend(s.units.iter().map(|u| u.unwrap_or(EMPTY)));
        out.extend(s.sc_owner.iter().map(|u| u.unwrap_or(EMPTY)));
        out
    }

    fn decode_state(&self, bytes: &[u8]) -> Result<BoardState> {
        let (n, k) = (self.map.num_nodes(), self.map.supply_centers.len());
        if bytes.len() != 3 + n + k {
            return Err(Error::Checkpoint(format!(
                "state encoding has {} bytes, expected {}",
                bytes.len(),
                3 + n + k
            )));
        }
        let owner = |b: u8| -> Result<Option<u8>> {
            match b {
                EMPTY => Ok(None),
                p if (p as usize) < self.num_players() => Ok(Some(p)),
                p => Err(Error::Checkpoint(format!("unknown player {p} in state"))),
            }
        };
        Ok(BoardState {
            turn: u16::from_le_bytes([bytes[0], bytes[1]]),
            terminal: bytes[2] != 0,
            units: bytes[3..3 + n].iter().map(|&b| owner(b)).collect::<Result<_>>()?,
            sc_owner: bytes[3 + n..].iter().map(|&b| owner(b)).collect::<Result<_>>()?,
        })
    }

    fn encode_action(&self, a: &PlayerAction) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 * a.0.len());
        for o in &a.0 {
            let (tag, x, y) = match o.kind {
                OrderKind::Hold => (0, 0, 0),
                OrderKind::Move(d) => (1, d, 0),
                OrderKind::SupportHold(t) => (2, t, 0),
                OrderKind::SupportMove(s, d) => (3, s, d),
            };
            out.extend_from_slice(&[o.unit, tag, x, y]);
        }
        out
    }

    fn decode_action(&self, bytes: &[u8]) -> Result<PlayerAction> {
        if bytes.len() % 4 != 0 {
            return Err(Error::Checkpoint("action encoding must be 4 bytes per order".into()));
        }
        bytes
            .chunks_exact(4)
            .map(|c| {
                let kind = match c[1] {
                    0 => OrderKind::Hold,
                    1 => OrderKind::Move(c[2]),
                    2 => OrderKind::SupportHold(c[2]),
                    3 => OrderKind::SupportMove(c[2], c[3]),
                    t => return Err(Error::Checkpoint(format!("unknown order tag {t}"))),
                };
                Ok(Order { unit: c[0], kind })
            })
            .collect::<Result<Vec<_>>>()
            .map(PlayerAction)
    }

    fn constant_sum(&self) -> Option<f64> {
        Some(1.0)
    }

    fn num_locations(&self) -> usize {
        self.map.num_nodes()
    }

    /// Redraws the orders of the player's units adjacent to `location`.
    /// Each such unit first picks hold, one of its moves, or "support"
    /// uniformly; supporting units then pick uniformly among supports that
    /// match the new orders of their own units, falling back to hold.
    fn modify_near<R: Rng + ?Sized>(
        &self,
        state: &BoardState,
        player: usize,
        base: &PlayerAction,
        location: usize,
        rng: &mut R,
    ) -> Result<PlayerAction> {
        self.validate_action(state, player, base)?;
        if location >= self.map.num_nodes() {
            return Err(Error::InvalidMap(format!("no location {location}")));
        }
        let clique = self.clique(state, player, location as u8);
        if clique.is_empty() {
            return Ok(base.clone());
        }
        let mut orders = base.0.clone();
        let idx = |orders: &[Order], u: u8| orders.iter().position(|o| o.unit == u).unwrap();
        let mut supporters = Vec::new();
        for &u in &clique {
            let nbrs = self.map.neighbors(u);
            let pick = rng.random_range(0..nbrs.len() + 2);
            let i = idx(&orders, u);
            orders[i].kind = if pick == 0 {
                OrderKind::Hold
            } else if pick <= nbrs.len() {
                OrderKind::Move(nbrs[pick - 1])
            } else {
                supporters.push(u);
                OrderKind::Hold
            };
        }
        for &u in &supporters {
            let mut options = Vec::new();
            for &t in self.map.neighbors(u) {
                if state.units[t as usize] == Some(player as u8)
                    && !matches!(orders[idx(&orders, t)].kind, OrderKind::Move(_))
                {
                    options.push(OrderKind::SupportHold(t));
                }
            }
            for o in &orders {
                if let OrderKind::Move(d) = o.kind {
                    if o.unit != u && self.map.adjacent(u, d) {
                        options.push(OrderKind::SupportMove(o.unit, d));
                    }
                }
            }
            let i = idx(&orders, u);
            orders[i].kind = options.choose(rng).copied().unwrap_or(OrderKind::Hold);
        }
        Ok(PlayerAction(orders))
    }

    fn units(&self, state: &BoardState, player: usize) -> usize {
        state.unit_locations(player as u8).len()
    }

    fn describe_action(&self, action: &PlayerAction) -> String {
        action.display(&self.map)
    }
}
