use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// An undirected board graph with supply centers and starting units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapGraph {
    pub name: String,
    pub nodes: Vec<String>,
    /// Sorted neighbor lists.
    pub adjacency: Vec<Vec<u8>>,
    /// Sorted node ids that are supply centers.
    pub supply_centers: Vec<u8>,
    /// Home centers per player.
    pub home_centers: Vec<Vec<u8>>,
    /// Starting units as (node, owner).
    pub initial_units: Vec<(u8, u8)>,
    /// Optional grid coordinates (row, col) for rendering.
    #[serde(default)]
    pub coords: Option<Vec<(i32, i32)>>,
}

impl MapGraph {
    pub fn num_players(&self) -> usize {
        self.home_centers.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn neighbors(&self, node: u8) -> &[u8] {
        &self.adjacency[node as usize]
    }

    pub fn adjacent(&self, a: u8, b: u8) -> bool {
        self.adjacency[a as usize].binary_search(&b).is_ok()
    }

    pub fn sc_index(&self, node: u8) -> Option<usize> {
        self.supply_centers.binary_search(&node).ok()
    }

    pub fn node_id(&self, name: &str) -> Result<u8> {
        self.nodes
            .iter()
            .position(|n| n == name)
            .map(|i| i as u8)
            .ok_or_else(|| Error::InvalidMap(format!("unknown node '{name}'")))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 || n > 250 {
            return Err(Error::InvalidMap(format!("node count {n} outside 1..=250")));
        }
        if self.adjacency.len() != n {
            return Err(Error::InvalidMap("adjacency length differs from node count".into()));
        }
        for (a, nbrs) in self.adjacency.iter().enumerate() {
            if nbrs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMap(format!("neighbors of {} not sorted/unique", self.nodes[a])));
            }
            for &b in nbrs {
                if b as usize >= n || b as usize == a || !self.adjacent(b, a as u8) {
                    return Err(Error::InvalidMap(format!(
                        "edge {}-{b} is not a symmetric edge between distinct nodes",
                        self.nodes[a]
                    )));
                }
            }
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0u8]);
        seen[0] = true;
        while let Some(x) = queue.pop_front() {
            for &y in self.neighbors(x) {
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    queue.push_back(y);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidMap("graph is not connected".into()));
        }
        if self.supply_centers.is_empty() {
            return Err(Error::InvalidMap("no supply centers".into()));
        }
        if self.supply_centers.windows(2).any(|w| w[0] >= w[1])
            || self.supply_centers.iter().any(|&s| s as usize >= n)
        {
            return Err(Error::InvalidMap("supply centers must be sorted unique node ids".into()));
        }
        if self.home_centers.is_empty() || self.home_centers.len() > 8 {
            return Err(Error::InvalidMap("player count must be 1..=8".into()));
        }
        let mut owner = vec![None; n];
        for (p, homes) in self.home_centers.iter().enumerate() {
            for &h in homes {
                if self.sc_index(h).is_none() {
                    return Err(Error::InvalidMap(format!("home {} is not a supply center", self.nodes[h as usize])));
                }
                if owner[h as usize].replace(p).is_some() {
                    return Err(Error::InvalidMap(format!("home {} shared by players", self.nodes[h as usize])));
                }
            }
        }
        let mut occupied = vec![false; n];
        for &(node, p) in &self.initial_units {
            if node as usize >= n || p as usize >= self.num_players() {
                return Err(Error::InvalidMap("unit references unknown node or player".into()));
            }
            if std::mem::replace(&mut occupied[node as usize], true) {
                return Err(Error::InvalidMap(format!("two units at {}", self.nodes[node as usize])));
            }
        }
        if let Some(c) = &self.coords {
            if c.len() != n {
                return Err(Error::InvalidMap("coords length differs from node count".into()));
            }
        }
        Ok(())
    }

    /// Builds a map from `{nodes, edges, scs, homes, units}`; edges, scs,
    /// homes and units refer to nodes by name.
    pub fn from_json(doc: &Value) -> Result<Self> {
        let strs = |v: &Value, field: &str| -> Result<Vec<String>> {
            v.as_array()
                .ok_or_else(|| Error::InvalidMap(format!("'{field}' must be an array")))?
                .iter()
                .map(|x| {
                    x.as_str()
                        .map(str::to_owned)
                        .ok_or_else(|| Error::InvalidMap(format!("'{field}' entries must be strings")))
                })
                .collect()
        };
        let field = |name: &str| {
            doc.get(name)
                .ok_or_else(|| Error::InvalidMap(format!("missing field '{name}'")))
        };
        let nodes = strs(field("nodes")?, "nodes")?;
        let ids: HashMap<&str, u8> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i as u8))
            .collect();
        let id = |name: &str| {
            ids.get(name)
                .copied()
                .ok_or_else(|| Error::InvalidMap(format!("unknown node '{name}'")))
        };
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for e in field("edges")?
            .as_array()
            .ok_or_else(|| Error::InvalidMap("'edges' must be an array".into()))?
        {
            let pair = strs(e, "edges")?;
            if pair.len() != 2 {
                return Err(Error::InvalidMap("edges are [a, b] pairs".into()));
            }
            let (a, b) = (id(&pair[0])?, id(&pair[1])?);
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
            nbrs.dedup();
        }
        let mut supply_centers = strs(field("scs")?, "scs")?
            .iter()
            .map(|s| id(s))
            .collect::<Result<Vec<_>>>()?;
        supply_centers.sort_unstable();
        let home_centers = field("homes")?
            .as_array()
            .ok_or_else(|| Error::InvalidMap("'homes' must be an array".into()))?
            .iter()
            .map(|h| strs(h, "homes")?.iter().map(|s| id(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let initial_units = field("units")?
            .as_array()
            .ok_or_else(|| Error::InvalidMap("'units' must be an array".into()))?
            .iter()
            .map(|u| {
                let node = u.get(0).and_then(Value::as_str).ok_or_else(|| {
                    Error::InvalidMap("units are [node, owner] pairs".into())
                })?;
                let owner = u.get(1).and_then(Value::as_u64).ok_or_else(|| {
                    Error::InvalidMap("units are [node, owner] pairs".into())
                })?;
                Ok((id(node)?, owner as u8))
            })
            .collect::<Result<Vec<_>>>()?;
        let map = Self {
            name: doc
                .get("name")
                .and_then(Value::as_str)
                .unwrap_or("custom")
                .to_owned(),
            nodes,
            adjacency,
            supply_centers,
            home_centers,
            initial_units,
            coords: None,
        };
        map.validate()?;
        Ok(map)
    }

    /// Rectangular grid; `diagonal` adds king-move adjacency.
    fn grid(name: &str, rows: i32, cols: i32, diagonal: bool) -> Self {
        let id = |r: i32, c: i32| (r * cols + c) as u8;
        let mut nodes = Vec::new();
        let mut coords = Vec::new();
        let mut adjacency = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                nodes.push(format!("{}{}", (b'a' + r as u8) as char, c + 1));
                coords.push((r, c));
                let mut nbrs = Vec::new();
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        if (dr, dc) == (0, 0) || (!diagonal && dr != 0 && dc != 0) {
                            continue;
                        }
                        let (nr, nc) = (r + dr, c + dc);
                        if (0..rows).contains(&nr) && (0..cols).contains(&nc) {
                            nbrs.push(id(nr, nc));
                        }
                    }
                }
                nbrs.sort_unstable();
                adjacency.push(nbrs);
            }
        }
        Self {
            name: name.into(),
            nodes,
            adjacency,
            supply_centers: Vec::new(),
            home_centers: Vec::new(),
            initial_units: Vec::new(),
            coords: Some(coords),
        }
    }

    /// 3x3 orthogonal grid, two players with two units each, three supply
    /// centers (one home each and the contested center).
    pub fn duel9() -> Self {
        let mut m = Self::grid("duel9", 3, 3, false);
        // a2 = 1, b2 = 4, c2 = 7
        m.supply_centers = vec![1, 4, 7];
        m.home_centers = vec![vec![1], vec![7]];
        m.initial_units = vec![(0, 0), (2, 0), (6, 1), (8, 1)];
        m
    }

    /// 4x4 king-move grid, two players with three units each and six supply
    /// centers. Opening action counts exceed one thousand per player.
    pub fn arena16() -> Self {
        let mut m = Self::grid("arena16", 4, 4, true);
        // a1 = 0, a2 = 1, b1 = 4 | d4 = 15, d3 = 14, c4 = 11 | neutral b3 = 6, c2 = 9
        m.supply_centers = vec![0, 1, 6, 9, 14, 15];
        m.home_centers = vec![vec![0, 1], vec![14, 15]];
        m.initial_units = vec![(0, 0), (1, 0), (4, 0), (15, 1), (14, 1), (11, 1)];
        m
    }

    /// Twelve nodes for three players: a nine-node outer ring and an inner
    /// triangle, each inner node touching three consecutive ring nodes.
    pub fn tri12() -> Self {
        let mut nodes: Vec<String> = (0..9).map(|i| format!("o{i}")).collect();
        nodes.extend((0..3).map(|i| format!("i{i}")));
        let mut adjacency = vec![Vec::new(); 12];
        let mut link = |a: usize, b: usize| {
            adjacency[a].push(b as u8);
            adjacency[b].push(a as u8);
        };
        for i in 0..9 {
            link(i, (i + 1) % 9);
        }
        for k in 0..3 {
            link(9 + k, 9 + (k + 1) % 3);
            for j in 0..3 {
                link(9 + k, 3 * k + j);
            }
        }
        for n in &mut adjacency {
            n.sort_unstable();
            n.dedup();
        }
        Self {
            name: "tri12".into(),
            nodes,
            adjacency,
            supply_centers: vec![1, 4, 7, 9, 10, 11],
            home_centers: vec![vec![1], vec![4], vec![7]],
            initial_units: vec![(0, 0), (1, 0), (3, 1), (4, 1), (6, 2), (7, 2)],
            coords: None,
        }
    }
}
