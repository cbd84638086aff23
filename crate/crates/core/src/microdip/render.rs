use std::fmt::Write;

use super::env::BoardState;
use super::map::MapGraph;

fn unit_tag(u: Option<u8>) -> String {
    u.map_or_else(|| "..".into(), |p| format!("P{p}"))
}

fn sc_tag(map: &MapGraph, s: &BoardState, node: u8) -> String {
    match map.sc_index(node) {
        Some(i) => s.sc_owner[i].map_or_else(|| "*-".into(), |p| format!("*{p}")),
        None => "  ".into(),
    }
}

/// Plain-text board. Grid maps are drawn as a grid; other maps as a node list.
pub fn render_text(map: &MapGraph, s: &BoardState) -> String {
    let mut out = String::new();
    let counts = s.sc_counts(map.num_players());
    let centers: Vec<String> = counts.iter().enumerate().map(|(p, c)| format!("P{p}={c}")).collect();
    let _ = writeln!(
        out,
        "{} turn {}{} centers {}",
        map.name,
        s.turn,
        if s.terminal { " (terminal)" } else { "" },
        centers.join(" ")
    );
    match &map.coords {
        Some(coords) => {
            let rows = coords.iter().map(|c| c.0).max().unwrap_or(0) + 1;
            for r in 0..rows {
                let cells: Vec<String> = (0..map.num_nodes())
                    .filter(|&i| coords[i].0 == r)
                    .map(|i| {
                        format!(
                            "{:>3} {} {}",
                            map.nodes[i],
                            unit_tag(s.units[i]),
                            sc_tag(map, s, i as u8)
                        )
                    })
                    .collect();
                let _ = writeln!(out, "{}", cells.join(" |"));
            }
        }
        None => {
            for i in 0..map.num_nodes() {
                let nbrs: Vec<&str> = map.neighbors(i as u8).iter().map(|&j| map.nodes[j as usize].as_str()).collect();
                let _ = writeln!(
                    out,
                    "{:>4} {} {}  -> {}",
                    map.nodes[i],
                    unit_tag(s.units[i]),
                    sc_tag(map, s, i as u8),
                    nbrs.join(" ")
                );
            }
        }
    }
    out
}

/// Graphviz description of the board.
pub fn render_dot(map: &MapGraph, s: &BoardState) -> String {
    let mut out = format!("graph \"{}\" {{\n", map.name);
    for i in 0..map.num_nodes() {
        let shape = if map.sc_index(i as u8).is_some() { "doublecircle" } else { "circle" };
        let mut label = map.nodes[i].clone();
        if let Some(p) = s.units[i] {
            let _ = write!(label, "\\nP{p}");
        }
        if let Some(Some(p)) = map.sc_index(i as u8).map(|k| s.sc_owner[k]) {
            let _ = write!(label, "\\nsc:{p}");
        }
        let _ = writeln!(out, "  n{i} [label=\"{label}\" shape={shape}];");
    }
    for (a, nbrs) in map.adjacency.iter().enumerate() {
        for &b in nbrs {
            if (a as u8) < b {
                let _ = writeln!(out, "  n{a} -- n{b};");
            }
        }
    }
    out.push_str("}\n");
    out
}
