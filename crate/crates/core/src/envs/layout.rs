//! Plain-text grid maps.
//!
//! Lines starting with `;` are metadata or comments (`; name: taxi`,
//! `; version: 1`). Every other non-empty line is a grid row: cells sit at even
//! character positions and the odd positions between them are separators, a
//! space for an open edge or `|` for a wall between the two neighbouring cells.
//!
//! Cell glyphs: `#` wall, `.` free, `R` red, `S` start, `G` goal,
//! `P` passenger, `D` destination, `C` congested.

use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Wall,
    Free,
    Red,
    Start,
    Goal,
    Passenger,
    Destination,
    Congested,
}

impl Cell {
    fn from_glyph(c: char) -> Option<Self> {
        Some(match c {
            '#' => Cell::Wall,
            '.' => Cell::Free,
            'R' => Cell::Red,
            'S' => Cell::Start,
            'G' => Cell::Goal,
            'P' => Cell::Passenger,
            'D' => Cell::Destination,
            'C' => Cell::Congested,
            _ => return None,
        })
    }

    pub fn glyph(self) -> char {
        match self {
            Cell::Wall => '#',
            Cell::Free => '.',
            Cell::Red => 'R',
            Cell::Start => 'S',
            Cell::Goal => 'G',
            Cell::Passenger => 'P',
            Cell::Destination => 'D',
            Cell::Congested => 'C',
        }
    }
}

pub type Pos = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    North,
    South,
    East,
    West,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("line {line}: unknown cell glyph `{glyph}`")]
    Glyph { line: usize, glyph: char },
    #[error("line {line}: unknown separator `{glyph}`")]
    Separator { line: usize, glyph: char },
    #[error("line {line}: row has {got} cells, expected {expected}")]
    Ragged {
        line: usize,
        got: usize,
        expected: usize,
    },
    #[error("layout has no rows")]
    Empty,
    #[error("layout needs exactly one `{glyph}` cell, found {count}")]
    Marker { glyph: char, count: usize },
    #[error("{0}")]
    Unreachable(String),
    #[error("reading layout: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub name: String,
    pub version: String,
    cells: Vec<Vec<Cell>>,
    /// `(r, c)` means a wall between `(r, c)` and `(r, c + 1)`.
    side_walls: BTreeSet<Pos>,
}

impl Layout {
    pub fn parse(text: &str) -> Result<Self, LayoutError> {
        let mut name = String::new();
        let mut version = String::new();
        let mut cells: Vec<Vec<Cell>> = Vec::new();
        let mut side_walls = BTreeSet::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim_end();
            if let Some(meta) = trimmed.strip_prefix(';') {
                if let Some((k, v)) = meta.split_once(':') {
                    match k.trim() {
                        "name" => name = v.trim().to_string(),
                        "version" => version = v.trim().to_string(),
                        _ => {}
                    }
                }
                continue;
            }
            if trimmed.is_empty() {
                continue;
            }
            let r = cells.len();
            let mut row = Vec::new();
            for (j, ch) in trimmed.chars().enumerate() {
                if j % 2 == 0 {
                    row.push(Cell::from_glyph(ch).ok_or(LayoutError::Glyph { line, glyph: ch })?);
                } else {
                    match ch {
                        ' ' => {}
                        '|' => {
                            side_walls.insert((r, j / 2));
                        }
                        other => return Err(LayoutError::Separator { line, glyph: other }),
                    }
                }
            }
            if let Some(first) = cells.first() {
                if first.len() != row.len() {
                    return Err(LayoutError::Ragged {
                        line,
                        got: row.len(),
                        expected: first.len(),
                    });
                }
            }
            cells.push(row);
        }
        if cells.is_empty() || cells[0].is_empty() {
            return Err(LayoutError::Empty);
        }
        Ok(Self {
            name,
            version,
            cells,
            side_walls,
        })
    }

    pub fn load(path: &Path) -> Result<Self, LayoutError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LayoutError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn rows(&self) -> usize {
        self.cells.len()
    }

    pub fn cols(&self) -> usize {
        self.cells[0].len()
    }

    pub fn cell(&self, (r, c): Pos) -> Cell {
        self.cells[r][c]
    }

    pub fn positions(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.rows()).flat_map(move |r| (0..self.cols()).map(move |c| (r, c)))
    }

    pub fn find_all(&self, cell: Cell) -> Vec<Pos> {
        self.positions().filter(|&p| self.cell(p) == cell).collect()
    }

    /// The single cell of the given kind.
    pub fn find_one(&self, cell: Cell) -> Result<Pos, LayoutError> {
        match self.find_all(cell).as_slice() {
            [p] => Ok(*p),
            ps => Err(LayoutError::Marker {
                glyph: cell.glyph(),
                count: ps.len(),
            }),
        }
    }

    pub fn is_open(&self, p: Pos) -> bool {
        self.cell(p) != Cell::Wall
    }

    /// Where a move from `p` lands, or `None` if the boundary, a wall cell or
    /// a wall edge is in the way.
    pub fn neighbor(&self, (r, c): Pos, d: Direction) -> Option<Pos> {
        let target = match d {
            Direction::North => (r.checked_sub(1)?, c),
            Direction::South => (r + 1, c),
            Direction::West => (r, c.checked_sub(1)?),
            Direction::East => (r, c + 1),
        };
        if target.0 >= self.rows() || target.1 >= self.cols() || !self.is_open(target) {
            return None;
        }
        let edge = match d {
            Direction::East => Some((r, c)),
            Direction::West => Some((r, c - 1)),
            _ => None,
        };
        if edge.is_some_and(|e| self.side_walls.contains(&e)) {
            return None;
        }
        Some(target)
    }

    /// Open cells reachable from `from` by moves.
    pub fn reachable(&self, from: Pos) -> BTreeSet<Pos> {
        let mut seen = BTreeSet::from([from]);
        let mut stack = vec![from];
        while let Some(p) = stack.pop() {
            for d in [Direction::North, Direction::South, Direction::East, Direction::West] {
                if let Some(n) = self.neighbor(p, d) {
                    if seen.insert(n) {
                        stack.push(n);
                    }
                }
            }
        }
        seen
    }
}
