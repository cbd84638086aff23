use super::map::MapGraph;
use super::order::OrderKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Unknown,
    Succeeds,
    Fails,
}

/// Outcome of one simultaneous turn.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resolution {
    /// Unit owner per node after the turn.
    pub units: Vec<Option<u8>>,
    /// Nodes whose moving unit reached its destination.
    pub successful_moves: Vec<u8>,
    /// Nodes whose unit was dislodged and removed.
    pub dislodged: Vec<u8>,
}

/// Resolves simultaneous orders. `orders[n]` is the order of the unit at
/// node `n` (ignored where there is no unit; missing orders hold).
///
/// A move succeeds when its strength (one plus uncut supports) strictly
/// exceeds every other move into the same node and the defence there:
/// the hold strength of a staying unit, one for a unit whose own move
/// failed, or the opposing strength in a head-to-head swap. Supports from
/// the occupant's own power never count toward dislodging it, and a power
/// cannot dislodge its own units. A support is cut by a move into the
/// supporter's node from another power, unless that move comes from the
/// node the support is directed at. Rings of three or more moves that wait
/// only on each other all succeed.
pub fn adjudicate(map: &MapGraph, units: &[Option<u8>], orders: &[Option<OrderKind>]) -> Resolution {
    let n = map.num_nodes();
    let order = |x: usize| -> OrderKind {
        match units[x] {
            Some(_) => orders.get(x).copied().flatten().unwrap_or(OrderKind::Hold),
            None => OrderKind::Hold,
        }
    };
    let moving_to = |x: usize| -> Option<usize> {
        match (units[x], order(x)) {
            (Some(_), OrderKind::Move(d)) => Some(d as usize),
            _ => None,
        }
    };

    let mut cut = vec![false; n];
    for x in 0..n {
        let Some(owner) = units[x] else { continue };
        let target = match order(x) {
            OrderKind::SupportHold(t) => t as usize,
            OrderKind::SupportMove(_, d) => d as usize,
            _ => continue,
        };
        cut[x] = (0..n).any(|a| {
            moving_to(a) == Some(x) && units[a] != Some(owner) && a != target
        });
    }

    let mut hold_support = vec![0u32; n];
    // Supporter owners per moving source.
    let mut move_support: Vec<Vec<u8>> = vec![Vec::new(); n];
    for x in 0..n {
        if units[x].is_none() || cut[x] {
            continue;
        }
        match order(x) {
            OrderKind::SupportHold(t) => {
                let t = t as usize;
                if units[t].is_some() && moving_to(t).is_none() {
                    hold_support[t] += 1;
                }
            }
            OrderKind::SupportMove(s, d) => {
                let s = s as usize;
                if moving_to(s) == Some(d as usize) {
                    move_support[s].push(units[x].unwrap());
                }
            }
            _ => {}
        }
    }

    let strength = |m: usize| 1 + move_support[m].len() as u32;
    let strength_against = |m: usize, defender: u8| {
        1 + move_support[m].iter().filter(|&&o| o != defender).count() as u32
    };

    let mut status = vec![Status::Unknown; n];
    let movers: Vec<usize> = (0..n).filter(|&x| moving_to(x).is_some()).collect();
    // A move fails outright when it does not beat every rival into its target.
    for &m in &movers {
        let d = moving_to(m).unwrap();
        let s = strength(m);
        if movers
            .iter()
            .any(|&o| o != m && moving_to(o) == Some(d) && strength(o) >= s)
        {
            status[m] = Status::Fails;
        }
    }

    loop {
        let mut progress = false;
        for &m in &movers {
            if status[m] != Status::Unknown {
                continue;
            }
            let d = moving_to(m).unwrap();
            let me = units[m].unwrap();
            let verdict = match units[d] {
                None => Some(true),
                Some(occ) if occ == me => match moving_to(d) {
                    Some(e) if e != m => match status[d] {
                        Status::Succeeds => Some(true),
                        Status::Fails => Some(false),
                        Status::Unknown => None,
                    },
                    _ => Some(false),
                },
                Some(occ) => match moving_to(d) {
                    None => Some(strength_against(m, occ) > 1 + hold_support[d]),
                    Some(e) if e == m => {
                        Some(strength_against(m, occ) > strength_against(d, me))
                    }
                    Some(_) => match status[d] {
                        Status::Succeeds => Some(true),
                        Status::Fails => Some(strength_against(m, occ) > 1),
                        Status::Unknown => None,
                    },
                },
            };
            if let Some(ok) = verdict {
                status[m] = if ok { Status::Succeeds } else { Status::Fails };
                progress = true;
            }
        }
        if progress {
            continue;
        }
        // Every unresolved move waits on another unresolved move; the
        // remaining dependencies end in rings, which move together.
        let Some(&start) = movers.iter().find(|&&m| status[m] == Status::Unknown) else {
            break;
        };
        let mut seen = vec![false; n];
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = moving_to(x).unwrap();
        }
        let ring_start = x;
        loop {
            status[x] = Status::Succeeds;
            x = moving_to(x).unwrap();
            if x == ring_start {
                break;
            }
        }
    }

    let mut next = units.to_vec();
    let mut successful_moves = Vec::new();
    for &m in &movers {
        if status[m] == Status::Succeeds {
            successful_moves.push(m as u8);
            next[m] = None;
        }
    }
    let mut dislodged = Vec::new();
    for &m in &successful_moves {
        let d = moving_to(m as usize).unwrap();
        if units[d].is_some() && status[d] != Status::Succeeds {
            dislodged.push(d as u8);
        }
        next[d] = units[m as usize];
    }
    dislodged.sort_unstable();
    Resolution {
        units: next,
        successful_moves,
        dislodged,
    }
}
