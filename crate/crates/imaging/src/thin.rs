//! Safe-point thinning.
//!
//! Each pass peels the four classes of edge points (left, right, top, bottom)
//! in a fixed order. An edge point of a class is a foreground pixel whose
//! neighbour on that side is background. Within one class, every edge point
//! that is not a safe point is deleted in parallel. A safe point is one whose
//! removal could break connectivity or shorten an arc past its end.
//!
//! Neighbours are numbered counter-clockwise from east, with y pointing down:
//!
//! ```text
//!   n3 n2 n1
//!   n4 p  n0
//!   n5 n6 n7
//! ```
//!
//! For a left edge point (`n4 == 0`) the point may go only when
//! `n0 & (n1 | n2 | n6 | n7) & (n2 | !n3) & (n6 | !n5)`; the other three
//! classes use the same expression rotated so that `n0` is the neighbour
//! opposite the empty side.
//!
//! After the peeling converges, pixels that sit in a 2x2 foreground block, are
//! simple (their removal keeps both foreground 8-connectivity and background
//! 4-connectivity intact) and are not arc ends are removed one at a time, and
//! peeling resumes. This repeats until nothing changes. A 2x2
//! block survives only when each of its pixels is the sole link to a diagonal
//! branch, in which case removing any of them would change the topology.

use std::sync::OnceLock;

use crate::image::BinaryMask;

/// Which side of a pixel must be background for it to be an edge point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeClass {
    Left,
    Right,
    Top,
    Bottom,
}

impl EdgeClass {
    /// Neighbour index opposite the empty side.
    fn inner(self) -> usize {
        match self {
            EdgeClass::Left => 0,
            EdgeClass::Right => 4,
            EdgeClass::Top => 6,
            EdgeClass::Bottom => 2,
        }
    }

    fn slot(self) -> usize {
        match self {
            EdgeClass::Left => 0,
            EdgeClass::Right => 1,
            EdgeClass::Top => 2,
            EdgeClass::Bottom => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThinningOptions {
    pub pass_order: [EdgeClass; 4],
    /// Upper bound on full peeling passes.
    pub max_iterations: usize,
    /// Break up reducible 2x2 blocks left behind by the peeling.
    pub reduce_blocks: bool,
    /// Drop single-pixel components at the end.
    pub remove_isolated: bool,
}

impl Default for ThinningOptions {
    fn default() -> Self {
        Self {
            pass_order: [
                EdgeClass::Left,
                EdgeClass::Right,
                EdgeClass::Top,
                EdgeClass::Bottom,
            ],
            max_iterations: 10_000,
            reduce_blocks: true,
            remove_isolated: false,
        }
    }
}

/// A thinned mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton(BinaryMask);

impl Skeleton {
    pub fn as_mask(&self) -> &BinaryMask {
        &self.0
    }

    pub fn into_mask(self) -> BinaryMask {
        self.0
    }
}

const OFFSETS: [(isize, isize); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

#[inline]
fn bit(code: u8, k: usize) -> bool {
    code & (1 << (k % 8)) != 0
}

fn deletable(code: u8, class: EdgeClass) -> bool {
    let i = class.inner();
    let n = |k: usize| bit(code, i + k);
    let outer_empty = !n(4);
    outer_empty && n(0) && (n(1) || n(2) || n(6) || n(7)) && (n(2) || !n(3)) && (n(6) || !n(5))
}

/// Number of components among the neighbourhood cells with the given state.
/// With `touching_p`, only components containing a 4-neighbour of the centre
/// are counted.
fn ring_components(code: u8, foreground: bool, eight: bool, touching_p: bool) -> usize {
    let cells: Vec<usize> = (0..8).filter(|&k| bit(code, k) == foreground).collect();
    let mut comp = [usize::MAX; 8];
    let mut count = 0;
    for &start in &cells {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = count;
        let mut touches = false;
        while let Some(k) = stack.pop() {
            touches |= k % 2 == 0;
            for &j in &cells {
                if comp[j] != usize::MAX {
                    continue;
                }
                let dx = (OFFSETS[k].0 - OFFSETS[j].0).abs();
                let dy = (OFFSETS[k].1 - OFFSETS[j].1).abs();
                let adjacent = if eight {
                    dx <= 1 && dy <= 1
                } else {
                    dx + dy == 1
                };
                if adjacent {
                    comp[j] = count;
                    stack.push(j);
                }
            }
        }
        if !touching_p || touches {
            count += 1;
        } else {
            for c in comp.iter_mut() {
                if *c == count {
                    *c = usize::MAX - 1;
                }
            }
        }
    }
    count
}

/// Whether removing the centre pixel keeps the number of foreground
/// 8-components and background 4-components unchanged.
fn simple(code: u8) -> bool {
    ring_components(code, true, true, false) == 1 && ring_components(code, false, false, true) == 1
}

struct Tables {
    deletable: [[bool; 256]; 4],
    simple: [bool; 256],
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut t = Tables {
            deletable: [[false; 256]; 4],
            simple: [false; 256],
        };
        for code in 0..=255u8 {
            for class in [
                EdgeClass::Left,
                EdgeClass::Right,
                EdgeClass::Top,
                EdgeClass::Bottom,
            ] {
                t.deletable[class.slot()][code as usize] = deletable(code, class);
            }
            t.simple[code as usize] = simple(code);
        }
        t
    })
}

/// Working copy of the mask with a one-pixel background frame.
struct Grid {
    stride: usize,
    cells: Vec<bool>,
    offsets: [isize; 8],
}

impl Grid {
    fn new(mask: &BinaryMask) -> Self {
        let stride = mask.width() + 2;
        let mut cells = vec![false; stride * (mask.height() + 2)];
        for (x, y) in mask.points() {
            cells[(y + 1) * stride + x + 1] = true;
        }
        let s = stride as isize;
        let offsets = OFFSETS.map(|(dx, dy)| dy * s + dx);
        Self {
            stride,
            cells,
            offsets,
        }
    }

    #[inline]
    fn code(&self, i: usize) -> u8 {
        let mut code = 0u8;
        for (k, off) in self.offsets.iter().enumerate() {
            if self.cells[(i as isize + off) as usize] {
                code |= 1 << k;
            }
        }
        code
    }

    fn in_block(&self, i: usize) -> bool {
        let s = self.stride;
        let c = &self.cells;
        let square = |tl: usize| c[tl] && c[tl + 1] && c[tl + s] && c[tl + s + 1];
        square(i) || square(i - 1) || square(i - s) || square(i - s - 1)
    }

    fn into_mask(self, width: usize, height: usize) -> BinaryMask {
        BinaryMask::from_fn(width, height, |x, y| {
            self.cells[(y + 1) * self.stride + x + 1]
        })
    }
}

/// Visiting order for block reduction: x ascending when left edges are peeled
/// before right edges, y ascending when top edges come before bottom edges.
/// Mirroring the pass order therefore mirrors the scan.
fn block_scan_order(live: &[usize], stride: usize, order: &[EdgeClass; 4]) -> Vec<usize> {
    let rank = |c: EdgeClass| order.iter().position(|&o| o == c).unwrap_or(0);
    let x_asc = rank(EdgeClass::Left) <= rank(EdgeClass::Right);
    let y_asc = rank(EdgeClass::Top) <= rank(EdgeClass::Bottom);
    let mut out = live.to_vec();
    out.sort_by_key(|&i| {
        let (x, y) = ((i % stride) as isize, (i / stride) as isize);
        (if y_asc { y } else { -y }, if x_asc { x } else { -x })
    });
    out
}

/// Thins with the default options.
pub fn thin(mask: &BinaryMask) -> Skeleton {
    thin_with(mask, &ThinningOptions::default())
}

pub fn thin_with(mask: &BinaryMask, opts: &ThinningOptions) -> Skeleton {
    let t = tables();
    let mut grid = Grid::new(mask);
    // foreground positions in raster order
    let mut live: Vec<usize> = (0..grid.cells.len()).filter(|&i| grid.cells[i]).collect();
    let mut doomed = Vec::new();
    let mut passes = 0usize;

    'outer: loop {
        // peeling
        loop {
            if passes >= opts.max_iterations {
                break 'outer;
            }
            passes += 1;
            let mut removed = 0;
            for class in opts.pass_order {
                let table = &t.deletable[class.slot()];
                doomed.clear();
                doomed.extend(
                    live.iter()
                        .copied()
                        .filter(|&i| table[grid.code(i) as usize]),
                );
                for &i in &doomed {
                    grid.cells[i] = false;
                }
                if !doomed.is_empty() {
                    removed += doomed.len();
                    live.retain(|&i| grid.cells[i]);
                }
            }
            if removed == 0 {
                break;
            }
        }

        if !opts.reduce_blocks {
            break;
        }
        let mut changed = false;
        for i in block_scan_order(&live, grid.stride, &opts.pass_order) {
            if grid.cells[i] && grid.in_block(i) {
                let code = grid.code(i);
                if code.count_ones() >= 2 && t.simple[code as usize] {
                    grid.cells[i] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
        live.retain(|&i| grid.cells[i]);
    }

    if opts.remove_isolated {
        for &i in &live {
            if grid.code(i) == 0 {
                grid.cells[i] = false;
            }
        }
    }

    Skeleton(grid.into_mask(mask.width(), mask.height()))
}
