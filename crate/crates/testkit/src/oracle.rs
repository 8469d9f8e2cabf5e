use std::collections::VecDeque;

use hine_imaging::{BinaryMask, LabelMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn steps(self) -> &'static [(i64, i64)] {
        match self {
            Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Connectivity::Eight => &[
                (1, 0),
                (-1, 0),
                (0, 1),
                (0, -1),
                (1, 1),
                (1, -1),
                (-1, 1),
                (-1, -1),
            ],
        }
    }
}

/// Breadth-first component count over cells where `inside(x, y)` holds, on
/// an arbitrary rectangle.
fn count_components(
    width: i64,
    height: i64,
    inside: impl Fn(i64, i64) -> bool,
    conn: Connectivity,
) -> usize {
    let mut seen = vec![false; (width * height) as usize];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for y in 0..height {
        for x in 0..width {
            if seen[(y * width + x) as usize] || !inside(x, y) {
                continue;
            }
            count += 1;
            seen[(y * width + x) as usize] = true;
            queue.push_back((x, y));
            while let Some((cx, cy)) = queue.pop_front() {
                for &(dx, dy) in conn.steps() {
                    let (nx, ny) = (cx + dx, cy + dy);
                    if nx < 0 || ny < 0 || nx >= width || ny >= height {
                        continue;
                    }
                    let k = (ny * width + nx) as usize;
                    if !seen[k] && inside(nx, ny) {
                        seen[k] = true;
                        queue.push_back((nx, ny));
                    }
                }
            }
        }
    }
    count
}

/// Number of foreground components under the given connectivity.
pub fn oracle_components(mask: &BinaryMask, conn: Connectivity) -> usize {
    count_components(
        mask.width() as i64,
        mask.height() as i64,
        |x, y| mask.get(x as usize, y as usize),
        conn,
    )
}

/// Number of 4-connected background components, with the area beyond the
/// image edge counted as one shared background component.
pub fn oracle_background_components(mask: &BinaryMask) -> usize {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    count_components(
        w + 2,
        h + 2,
        |x, y| {
            let (ix, iy) = (x - 1, y - 1);
            ix < 0 || iy < 0 || ix >= w || iy >= h || !mask.get(ix as usize, iy as usize)
        },
        Connectivity::Four,
    )
}

/// Count of pixels carrying `label` that have an 8-neighbour with another
/// label or outside the image.
pub fn oracle_perimeter(width: usize, height: usize, labels: &[u32], label: u32) -> u64 {
    let at = |x: i64, y: i64| -> Option<u32> {
        if x < 0 || y < 0 || x >= width as i64 || y >= height as i64 {
            None
        } else {
            Some(labels[y as usize * width + x as usize])
        }
    };
    let mut count = 0;
    for y in 0..height as i64 {
        for x in 0..width as i64 {
            if at(x, y) != Some(label) {
                continue;
            }
            let boundary = Connectivity::Eight
                .steps()
                .iter()
                .any(|&(dx, dy)| at(x + dx, y + dy) != Some(label));
            if boundary {
                count += 1;
            }
        }
    }
    count
}

/// Foreground pixels with exactly one 8-neighbour.
pub fn endpoints(mask: &BinaryMask) -> Vec<(usize, usize)> {
    mask.points()
        .filter(|&(x, y)| {
            Connectivity::Eight
                .steps()
                .iter()
                .filter(|&&(dx, dy)| {
                    mask.get_signed(x as isize + dx as isize, y as isize + dy as isize)
                })
                .count()
                == 1
        })
        .collect()
}

/// Top-left corner of the first 2x2 all-foreground block, if any.
pub fn has_block(mask: &BinaryMask) -> Option<(usize, usize)> {
    for y in 0..mask.height().saturating_sub(1) {
        for x in 0..mask.width().saturating_sub(1) {
            if mask.get(x, y) && mask.get(x + 1, y) && mask.get(x, y + 1) && mask.get(x + 1, y + 1)
            {
                return Some((x, y));
            }
        }
    }
    None
}

/// Top-left corners of 2x2 foreground blocks that contain a pixel whose
/// removal keeps both the foreground 8-component and background 4-component
/// counts. Blocks outside this list cannot be thinned without changing
/// topology.
pub fn reducible_blocks(mask: &BinaryMask) -> Vec<(usize, usize)> {
    let fg = oracle_components(mask, Connectivity::Eight);
    let bg = oracle_background_components(mask);
    let mut found = Vec::new();
    for y in 0..mask.height().saturating_sub(1) {
        for x in 0..mask.width().saturating_sub(1) {
            let cells = [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)];
            if !cells.iter().all(|&(cx, cy)| mask.get(cx, cy)) {
                continue;
            }
            let deletable = cells.iter().any(|&(cx, cy)| {
                let mut probe = mask.clone();
                probe.set(cx, cy, false);
                oracle_components(&probe, Connectivity::Eight) == fg
                    && oracle_background_components(&probe) == bg
            });
            if deletable {
                found.push((x, y));
            }
        }
    }
    found
}

/// Result of the brute-force merger, in the same id space as the fast one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReferenceMerge {
    pub labels: Vec<u32>,
    pub areas: Vec<u64>,
    pub color_sums: Vec<[u64; 3]>,
    pub perimeters: Vec<u64>,
}

/// Brute-force small-region merging.
///
/// Every step rescans the whole label grid: areas are recounted, the smallest
/// region under the threshold is chosen (lowest id on ties), and its shared
/// edge count with every other region is recounted pixel pair by pixel pair.
/// The partner is the region with the most shared edges, then the larger
/// area, then the lower id. Surviving ids are compacted in ascending order.
pub fn reference_merge(lm: &LabelMap, min_region_fraction: f64) -> ReferenceMerge {
    let (w, h) = (lm.width(), lm.height());
    let k = lm.region_count();
    let mut labels = lm.labels().to_vec();
    let mut sums: Vec<[u64; 3]> = lm.regions().iter().map(|r| r.color_sum).collect();
    let threshold = min_region_fraction * (w * h) as f64;

    loop {
        let mut area = vec![0u64; k];
        for &l in &labels {
            area[l as usize] += 1;
        }
        let live: Vec<usize> = (0..k).filter(|&i| area[i] > 0).collect();
        if live.len() <= 1 {
            break;
        }
        let Some(&small) = live
            .iter()
            .filter(|&&i| (area[i] as f64) < threshold)
            .min_by_key(|&&i| (area[i], i))
        else {
            break;
        };

        let mut shared = vec![0u64; k];
        for y in 0..h {
            for x in 0..w {
                let a = labels[y * w + x] as usize;
                let mut pair = |b: usize| {
                    if a == small && b != small {
                        shared[b] += 1;
                    } else if b == small && a != small {
                        shared[a] += 1;
                    }
                };
                if x + 1 < w {
                    pair(labels[y * w + x + 1] as usize);
                }
                if y + 1 < h {
                    pair(labels[(y + 1) * w + x] as usize);
                }
            }
        }
        let mut best: Option<usize> = None;
        for n in 0..k {
            if shared[n] == 0 {
                continue;
            }
            best = match best {
                None => Some(n),
                Some(b) => {
                    let better =
                        shared[n] > shared[b] || (shared[n] == shared[b] && area[n] > area[b]);
                    Some(if better { n } else { b })
                }
            };
        }
        let target = best.expect("a region below threshold always has a neighbour");
        for l in labels.iter_mut() {
            if *l as usize == small {
                *l = target as u32;
            }
        }
        let moved = sums[small];
        for c in 0..3 {
            sums[target][c] += moved[c];
        }
    }

    let mut area = vec![0u64; k];
    for &l in &labels {
        area[l as usize] += 1;
    }
    let mut remap = vec![u32::MAX; k];
    let mut next = 0u32;
    for i in 0..k {
        if area[i] > 0 {
            remap[i] = next;
            next += 1;
        }
    }
    let labels: Vec<u32> = labels.iter().map(|&l| remap[l as usize]).collect();
    let kept: Vec<usize> = (0..k).filter(|&i| area[i] > 0).collect();
    let perimeters = (0..next)
        .map(|id| oracle_perimeter(w, h, &labels, id))
        .collect();
    ReferenceMerge {
        areas: kept.iter().map(|&i| area[i]).collect(),
        color_sums: kept.iter().map(|&i| sums[i]).collect(),
        labels,
        perimeters,
    }
}
