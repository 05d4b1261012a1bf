//! UAV node-distribution tables and base-station placement.
//!
//! The file mirrors the printed table: one line per row, one `|`-separated
//! cell per UAV column, each cell a bracketed node list. Cell `(row r, UAV u)`
//! is read as the nodes UAV `u` covers during decision slot `r` (slots cycle
//! through the rows). `base_stations` and `placement` (the node hosting each
//! station) are `key = value` lines.
//!
//! ```text
//! base_stations = 2
//! placement = 1, 3
//! row | UAV 1 | UAV 2
//! 1 | [1,1] | [1,2]
//! 2 | [2,3,1] | [2,2]
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    /// `cells[row][uav]`, both 0-based.
    pub cells: Vec<Vec<Vec<u32>>>,
    pub base_stations: usize,
    pub placement: Vec<u32>,
    /// Node ids run from 1 to `n_nodes`.
    pub n_nodes: u32,
}

fn parse_list(cell: &str, line: usize) -> Result<Vec<u32>> {
    let inner = cell
        .trim()
        .strip_prefix('[')
        .and_then(|c| c.strip_suffix(']'))
        .ok_or_else(|| HarnessError::at_line(line, format!("cell {cell:?} is not a bracketed list")))?;
    inner
        .split(',')
        .map(|v| v.trim().parse::<u32>().map_err(|_| HarnessError::at_line(line, format!("bad node id {v:?}"))))
        .collect()
}

/// The bundled nine-UAV, ten-slot table with four stations.
pub const BUILTIN_TOPOLOGY: &str = include_str!("../../../../data/topology/table2.txt");

impl Topology {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TOPOLOGY).expect("bundled topology parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cells: Vec<Vec<Vec<u32>>> = Vec::new();
        let mut row_lines = Vec::new();
        let (mut base_stations, mut placement, mut n_nodes): (Option<usize>, Option<(usize, Vec<u32>)>, Option<u32>) = (None, None, None);
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some((k, v)) = line.split_once('=') {
                let v = v.trim();
                let bad = |what: &str| HarnessError::at_line(line_no, format!("bad {what} value {v:?}"));
                match k.trim() {
                    "base_stations" => base_stations = Some(v.parse().map_err(|_| bad("base_stations"))?),
                    "nodes" => n_nodes = Some(v.parse().map_err(|_| bad("nodes"))?),
                    "placement" => {
                        let ids = v.split(',').map(|x| x.trim().parse::<u32>()).collect::<std::result::Result<Vec<_>, _>>().map_err(|_| bad("placement"))?;
                        placement = Some((line_no, ids));
                    }
                    other => return Err(HarnessError::at_line(line_no, format!("unknown key {other:?}"))),
                }
                continue;
            }
            let mut parts = line.split('|');
            let head = parts.next().unwrap_or("").trim();
            if head.eq_ignore_ascii_case("row") {
                continue;
            }
            let r: usize = head.parse().map_err(|_| HarnessError::at_line(line_no, format!("expected a row number, found {head:?}")))?;
            if r != cells.len() + 1 {
                return Err(HarnessError::at_line(line_no, format!("row {r} out of order, expected {}", cells.len() + 1)));
            }
            let row = parts.map(|c| parse_list(c, line_no)).collect::<Result<Vec<_>>>()?;
            if let Some(first) = cells.first() {
                if row.len() != first.len() {
                    return Err(HarnessError::at_line(line_no, format!("row has {} cells, expected {}", row.len(), first.len())));
                }
            }
            if row.is_empty() || row.iter().any(Vec::is_empty) {
                return Err(HarnessError::at_line(line_no, "empty cell or row"));
            }
            cells.push(row);
            row_lines.push(line_no);
        }
        if cells.is_empty() {
            return Err(HarnessError::validation("topology has no rows"));
        }
        let base_stations = base_stations.ok_or_else(|| HarnessError::validation("missing base_stations"))?;
        if base_stations == 0 {
            return Err(HarnessError::validation("base_stations must be at least 1"));
        }
        let n_nodes = n_nodes.unwrap_or(cells.len() as u32);
        for (row, line) in cells.iter().zip(&row_lines) {
            if let Some(bad) = row.iter().flatten().find(|n| **n == 0 || **n > n_nodes) {
                return Err(HarnessError::at_line(*line, format!("node {bad} does not exist (nodes are 1..={n_nodes})")));
            }
        }
        let placement = match placement {
            Some((line, p)) => {
                if p.len() != base_stations {
                    return Err(HarnessError::at_line(line, format!("placement lists {} nodes for {base_stations} stations", p.len())));
                }
                if let Some(bad) = p.iter().find(|n| **n == 0 || **n > n_nodes) {
                    return Err(HarnessError::at_line(line, format!("placement node {bad} does not exist")));
                }
                p
            }
            None => (0..base_stations).map(|i| (i as u32 % n_nodes) + 1).collect(),
        };
        Ok(Self { cells, base_stations, placement, n_nodes })
    }

    pub fn n_uavs(&self) -> usize {
        self.cells[0].len()
    }

    pub fn n_rows(&self) -> usize {
        self.cells.len()
    }

    /// The cells of 1-based row `r`, one per UAV.
    pub fn row(&self, r: usize) -> &[Vec<u32>] {
        &self.cells[r - 1]
    }

    /// The node lists of 0-based `uav` across all rows.
    pub fn uav_lists(&self, uav: usize) -> Vec<&[u32]> {
        self.cells.iter().map(|row| row[uav].as_slice()).collect()
    }

    /// Whether `uav` covers `node` in decision slot `slot`. UAVs beyond the
    /// table's columns reuse columns cyclically.
    pub fn covers(&self, uav: usize, slot: usize, node: u32) -> bool {
        let row = &self.cells[slot % self.n_rows()];
        row[uav % row.len()].contains(&node)
    }

    /// Node hosting station `s`; stations past the placement list have none.
    pub fn station_node(&self, s: usize) -> Option<u32> {
        self.placement.get(s).copied()
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "base_stations = {}", self.base_stations);
        let _ = writeln!(out, "placement = {}", self.placement.iter().map(u32::to_string).collect::<Vec<_>>().join(", "));
        let _ = writeln!(out, "nodes = {}", self.n_nodes);
        let header: Vec<String> = (1..=self.n_uavs()).map(|u| format!("UAV {u}")).collect();
        let _ = writeln!(out, "row | {}", header.join(" | "));
        for (r, row) in self.cells.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|c| format!("[{}]", c.iter().map(u32::to_string).collect::<Vec<_>>().join(","))).collect();
            let _ = writeln!(out, "{} | {}", r + 1, cells.join(" | "));
        }
        out
    }
}

pub fn load_topology(path: &Path) -> Result<Topology> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Topology::parse(&text)
}
