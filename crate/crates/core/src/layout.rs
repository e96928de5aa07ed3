use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("line {line}: bad mapping entry: {message}")]
    Parse { line: usize, message: String },
    #[error("cell ({0}, {1}) is outside the layout")]
    OutOfRange(u32, u32),
    #[error("cell ({0}, {1}) is not a data cell")]
    NonDataCell(u32, u32),
    #[error("cell ({0}, {1}) assigned to more than one qubit")]
    DuplicateCell(u32, u32),
    #[error("qubit {0} mapped more than once")]
    DuplicateQubit(u32),
    #[error("layout has {available} data cells, cannot map {requested} qubits")]
    TooManyQubits { requested: u32, available: u32 },
    #[error("routing cells do not reach every data-cell edge orientation")]
    RoutingAccess,
}

#[derive(Clone, Copy, Debug, Eq, Hash, Ord, PartialEq, PartialOrd)]
pub struct Cell {
    pub row: u32,
    pub col: u32,
}

impl Cell {
    pub fn new(row: u32, col: u32) -> Self {
        Cell { row, col }
    }

    pub fn manhattan(&self, other: &Cell) -> u32 {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Clone, Copy, Debug, Eq, PartialEq)]
pub enum CellRole {
    Data,
    Routing,
}

/// A 2D patch grid. Every data cell's horizontal (north/south) edges carry
/// the logical Z operator and its vertical (east/west) edges carry logical X.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub rows: u32,
    pub cols: u32,
    roles: Vec<CellRole>,
    data_cells: Vec<Cell>,
}

impl Layout {
    pub(crate) fn from_predicate(rows: u32, cols: u32, is_data: impl Fn(u32, u32) -> bool) -> Self {
        let mut roles = Vec::with_capacity((rows * cols) as usize);
        let mut data_cells = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if is_data(r, c) {
                    roles.push(CellRole::Data);
                    data_cells.push(Cell::new(r, c));
                } else {
                    roles.push(CellRole::Routing);
                }
            }
        }
        Layout {
            rows,
            cols,
            roles,
            data_cells,
        }
    }

    pub fn in_bounds(&self, row: i64, col: i64) -> bool {
        row >= 0 && col >= 0 && (row as u32) < self.rows && (col as u32) < self.cols
    }

    pub fn role(&self, cell: Cell) -> CellRole {
        self.roles[(cell.row * self.cols + cell.col) as usize]
    }

    pub fn is_routing(&self, cell: Cell) -> bool {
        self.role(cell) == CellRole::Routing
    }

    pub fn total_cells(&self) -> u32 {
        self.rows * self.cols
    }

    /// Data cells in row-major order.
    pub fn data_cells(&self) -> &[Cell] {
        &self.data_cells
    }

    /// In-bounds neighbors in north, south, west, east order.
    pub fn neighbors(&self, cell: Cell) -> Vec<Cell> {
        let mut result = Vec::with_capacity(4);
        let (r, c) = (cell.row as i64, cell.col as i64);
        for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
            if self.in_bounds(r + dr, c + dc) {
                result.push(Cell::new((r + dr) as u32, (c + dc) as u32));
            }
        }
        result
    }

    /// Checks that the routing cells form one connected component touching at
    /// least one horizontal and one vertical edge of every data cell.
    pub fn validate_routing_access(&self) -> Result<(), LayoutError> {
        let routing: Vec<Cell> = (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| Cell::new(r, c)))
            .filter(|&cell| self.is_routing(cell))
            .collect();
        if routing.is_empty() {
            return Err(LayoutError::RoutingAccess);
        }
        let mut seen = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(routing[0]);
        queue.push_back(routing[0]);
        while let Some(cell) = queue.pop_front() {
            for next in self.neighbors(cell) {
                if self.is_routing(next) && seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        if seen.len() != routing.len() {
            return Err(LayoutError::RoutingAccess);
        }
        for &cell in &self.data_cells {
            let vertical_neighbors = [(-1i64, 0i64), (1, 0)];
            let horizontal_access = vertical_neighbors.iter().any(|&(dr, dc)| {
                let (r, c) = (cell.row as i64 + dr, cell.col as i64 + dc);
                self.in_bounds(r, c) && self.is_routing(Cell::new(r as u32, c as u32))
            });
            let vertical_access = [(0i64, -1i64), (0, 1)].iter().any(|&(dr, dc)| {
                let (r, c) = (cell.row as i64 + dr, cell.col as i64 + dc);
                self.in_bounds(r, c) && self.is_routing(Cell::new(r as u32, c as u32))
            });
            if !horizontal_access || !vertical_access {
                return Err(LayoutError::RoutingAccess);
            }
        }
        Ok(())
    }
}

// Data-row (or column) index of a grid row under the standard pattern, where
// rows r with r mod 3 != 1 hold data.
fn standard_data_index(r: u32) -> Option<u32> {
    match r % 3 {
        0 => Some(r / 3 * 2),
        2 => Some(r / 3 * 2 + 1),
        _ => None,
    }
}

/// Standard layout for an a x b grid of data qubits: data cells in 2x2 blocks
/// separated by single routing lanes, 9 cells per 4 data qubits. The lanes
/// sit at rows/columns congruent to 1 mod 3 so that every data cell touches
/// routing on both a horizontal and a vertical edge.
pub fn gen_standard(a: u32, b: u32) -> Layout {
    assert!(a >= 1 && b >= 1);
    let rows = 3 * a.div_ceil(2);
    let cols = 3 * b.div_ceil(2);
    Layout::from_predicate(rows, cols, |r, c| {
        matches!((standard_data_index(r), standard_data_index(c)),
            (Some(ri), Some(ci)) if ri < a && ci < b)
    })
}

/// Sparse layout: data cells on even rows and columns, 4 cells per data qubit.
pub fn gen_sparse(a: u32, b: u32) -> Layout {
    assert!(a >= 1 && b >= 1);
    Layout::from_predicate(2 * a, 2 * b, |r, c| r % 2 == 0 && c % 2 == 0)
}

/// Patch count of the sequential scheme's layout for N data qubits,
/// excluding distillation factories: ceil(2N + sqrt(8N) + 1).
pub fn spc_patch_count(n: u32) -> u64 {
    assert!(n >= 1);
    (2.0 * n as f64 + (8.0 * n as f64).sqrt() + 1.0).ceil() as u64
}

/// Assignment of logical qubits to data cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Mapping {
    qubit_to_cell: BTreeMap<u32, Cell>,
    cell_to_qubit: BTreeMap<Cell, u32>,
}

impl Mapping {
    pub fn new(assignment: impl IntoIterator<Item = (u32, Cell)>, layout: &Layout) -> Result<Self, LayoutError> {
        let mut qubit_to_cell = BTreeMap::new();
        let mut cell_to_qubit = BTreeMap::new();
        for (qubit, cell) in assignment {
            if cell.row >= layout.rows || cell.col >= layout.cols {
                return Err(LayoutError::OutOfRange(cell.row, cell.col));
            }
            if layout.role(cell) != CellRole::Data {
                return Err(LayoutError::NonDataCell(cell.row, cell.col));
            }
            if cell_to_qubit.insert(cell, qubit).is_some() {
                return Err(LayoutError::DuplicateCell(cell.row, cell.col));
            }
            if qubit_to_cell.insert(qubit, cell).is_some() {
                return Err(LayoutError::DuplicateQubit(qubit));
            }
        }
        Ok(Mapping {
            qubit_to_cell,
            cell_to_qubit,
        })
    }

    pub fn cell_of(&self, qubit: u32) -> Option<Cell> {
        self.qubit_to_cell.get(&qubit).copied()
    }

    pub fn qubit_at(&self, cell: Cell) -> Option<u32> {
        self.cell_to_qubit.get(&cell).copied()
    }

    pub fn len(&self) -> usize {
        self.qubit_to_cell.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubit_to_cell.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, Cell)> + '_ {
        self.qubit_to_cell.iter().map(|(&q, &c)| (q, c))
    }
}

/// Assigns qubits 0..qubit_count to data cells in row-major order.
pub fn default_mapping(layout: &Layout, qubit_count: u32) -> Result<Mapping, LayoutError> {
    let available = layout.data_cells().len() as u32;
    if qubit_count > available {
        return Err(LayoutError::TooManyQubits {
            requested: qubit_count,
            available,
        });
    }
    Mapping::new(
        (0..qubit_count).map(|q| (q, layout.data_cells()[q as usize])),
        layout,
    )
}

/// Parses a mapping file: one `<qubit> <row> <col>` triple per line, `#`
/// starts a comment.
pub fn parse_mapping(text: &str, layout: &Layout) -> Result<Mapping, LayoutError> {
    let mut assignment = Vec::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(LayoutError::Parse {
                line,
                message: format!("expected `<qubit> <row> <col>`, got {:?}", content),
            });
        }
        let parse = |token: &str| -> Result<u32, LayoutError> {
            token.parse().map_err(|_| LayoutError::Parse {
                line,
                message: format!("bad integer {:?}", token),
            })
        };
        assignment.push((parse(tokens[0])?, Cell::new(parse(tokens[1])?, parse(tokens[2])?)));
    }
    Mapping::new(assignment, layout)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_standard_counts() {
        let layout = gen_standard(4, 4);
        assert_eq!((layout.rows, layout.cols), (6, 6));
        assert_eq!(layout.total_cells(), 36);
        assert_eq!(layout.data_cells().len(), 16);

        let layout = gen_standard(1, 1);
        assert_eq!((layout.rows, layout.cols), (3, 3));
        assert_eq!(layout.data_cells().len(), 1);

        let layout = gen_standard(6, 6);
        assert_eq!((layout.rows, layout.cols), (9, 9));
        assert_eq!(layout.total_cells(), 81);
        assert_eq!(layout.data_cells().len(), 36);
    }

    #[test]
    fn test_standard_count_formula() {
        for (a, b) in [(1, 1), (2, 3), (4, 4), (5, 5), (6, 6), (7, 3)] {
            let layout = gen_standard(a, b);
            assert_eq!(layout.total_cells(), 9 * a.div_ceil(2) * b.div_ceil(2));
            assert_eq!(layout.data_cells().len() as u32, a * b);
        }
    }

    #[test]
    fn test_sparse_counts() {
        let layout = gen_sparse(4, 4);
        assert_eq!((layout.rows, layout.cols), (8, 8));
        assert_eq!(layout.total_cells(), 64);
        assert_eq!(layout.data_cells().len(), 16);

        let layout = gen_sparse(1, 1);
        assert_eq!((layout.rows, layout.cols), (2, 2));
        assert_eq!(layout.data_cells().len(), 1);

        let layout = gen_sparse(12, 12);
        assert_eq!(layout.total_cells(), 576);
        assert_eq!(layout.data_cells().len(), 144);
    }

    #[test]
    fn test_routing_access_both_layouts() {
        for (a, b) in [(1, 1), (2, 2), (4, 4), (5, 3), (6, 6), (8, 8)] {
            gen_standard(a, b).validate_routing_access().unwrap();
            gen_sparse(a, b).validate_routing_access().unwrap();
        }
    }

    #[test]
    fn test_spc_patch_count() {
        assert_eq!(spc_patch_count(18), 49);
        assert_eq!(spc_patch_count(2), 9);
        assert_eq!(spc_patch_count(36), 90);
    }

    #[test]
    fn test_default_mapping_row_major() {
        let layout = gen_standard(4, 4);
        let mapping = default_mapping(&layout, 16).unwrap();
        // Data columns under the standard pattern are 0, 2, 3, 5.
        assert_eq!(mapping.cell_of(0), Some(Cell::new(0, 0)));
        assert_eq!(mapping.cell_of(1), Some(Cell::new(0, 2)));
        assert_eq!(mapping.cell_of(2), Some(Cell::new(0, 3)));
        assert_eq!(mapping.cell_of(3), Some(Cell::new(0, 5)));
        assert_eq!(mapping.cell_of(4), Some(Cell::new(2, 0)));
        assert_eq!(mapping.qubit_at(Cell::new(0, 2)), Some(1));
    }

    #[test]
    fn test_parse_mapping() {
        let layout = gen_standard(2, 2);
        let mapping = parse_mapping("0 0 0\n1 0 2  # second qubit\n", &layout).unwrap();
        assert_eq!(mapping.cell_of(0), Some(Cell::new(0, 0)));
        assert_eq!(mapping.cell_of(1), Some(Cell::new(0, 2)));

        // Routing cell target is rejected.
        assert_eq!(
            parse_mapping("0 0 1", &layout).unwrap_err(),
            LayoutError::NonDataCell(0, 1)
        );
        assert_eq!(
            parse_mapping("0 0 0\n1 0 0", &layout).unwrap_err(),
            LayoutError::DuplicateCell(0, 0)
        );
        assert_eq!(
            parse_mapping("0 0 0\n0 0 2", &layout).unwrap_err(),
            LayoutError::DuplicateQubit(0)
        );
        assert_eq!(
            parse_mapping("0 9 0", &layout).unwrap_err(),
            LayoutError::OutOfRange(9, 0)
        );
    }

    #[test]
    fn test_too_many_qubits() {
        let layout = gen_standard(2, 2);
        assert!(matches!(
            default_mapping(&layout, 5),
            Err(LayoutError::TooManyQubits { .. })
        ));
    }
}
