use std::collections::{BTreeMap, BTreeSet};

use crate::config::PipelineConfig;
use crate::segment::{perimeters, LabelMap, RegionStats};

/// Absorbs small regions into their neighbours until none is left below
/// `min_region_fraction` of the image area.
///
/// Each step takes the smallest region under the threshold (lowest id on ties)
/// and merges it into the 4-adjacent neighbour sharing the most pixel edges
/// with it; ties go to the larger neighbour, then the lower id. The surviving
/// region keeps its id until the end, when ids are compacted in ascending
/// order. Colour sums add, so the merged mean colour is area-weighted.
pub fn merge_small_regions(lm: &LabelMap, cfg: &PipelineConfig) -> LabelMap {
    let (w, h) = (lm.width, lm.height);
    let k = lm.regions.len();
    if k <= 1 {
        return lm.clone();
    }
    let threshold = cfg.min_region_fraction * (w * h) as f64;
    let is_small = |area: u64| (area as f64) < threshold;

    // Shared 4-adjacent edge counts between distinct regions.
    let mut adjacency: Vec<BTreeMap<u32, u64>> = vec![BTreeMap::new(); k];
    let mut link = |a: u32, b: u32| {
        if a != b {
            *adjacency[a as usize].entry(b).or_insert(0) += 1;
            *adjacency[b as usize].entry(a).or_insert(0) += 1;
        }
    };
    for y in 0..h {
        for x in 0..w {
            let l = lm.labels[y * w + x];
            if x + 1 < w {
                link(l, lm.labels[y * w + x + 1]);
            }
            if y + 1 < h {
                link(l, lm.labels[(y + 1) * w + x]);
            }
        }
    }

    let mut stats: Vec<RegionStats> = lm.regions.clone();
    let mut owner: Vec<u32> = (0..k as u32).collect();
    let mut alive = vec![true; k];
    let mut pending: BTreeSet<(u64, u32)> = stats
        .iter()
        .enumerate()
        .filter(|(_, s)| is_small(s.area))
        .map(|(i, s)| (s.area, i as u32))
        .collect();

    while let Some((_, small)) = pending.pop_first() {
        let s = small as usize;
        let Some(target) = adjacency[s]
            .iter()
            .max_by(|(&a, &ea), (&b, &eb)| {
                ea.cmp(&eb)
                    .then(stats[a as usize].area.cmp(&stats[b as usize].area))
                    .then(b.cmp(&a))
            })
            .map(|(&t, _)| t)
        else {
            // the only region left
            continue;
        };
        let t = target as usize;

        pending.remove(&(stats[t].area, target));
        let absorbed = std::mem::replace(
            &mut stats[s],
            RegionStats {
                area: 0,
                color_sum: [0; 3],
                perimeter: 0,
                touches_border: false,
            },
        );
        let into = &mut stats[t];
        into.area += absorbed.area;
        for c in 0..3 {
            into.color_sum[c] += absorbed.color_sum[c];
        }
        into.touches_border |= absorbed.touches_border;
        if is_small(into.area) {
            pending.insert((into.area, target));
        }

        let edges = std::mem::take(&mut adjacency[s]);
        for (n, count) in edges {
            adjacency[n as usize].remove(&small);
            if n == target {
                continue;
            }
            *adjacency[t].entry(n).or_insert(0) += count;
            *adjacency[n as usize].entry(target).or_insert(0) += count;
        }
        alive[s] = false;
        owner[s] = target;
    }

    let mut compact = vec![u32::MAX; k];
    let mut regions = Vec::new();
    for (old, stat) in stats.into_iter().enumerate() {
        if alive[old] {
            compact[old] = regions.len() as u32;
            regions.push(stat);
        }
    }
    let resolve = |mut l: u32| {
        while !alive[l as usize] {
            l = owner[l as usize];
        }
        compact[l as usize]
    };
    let mut final_label = vec![0u32; k];
    for (l, slot) in final_label.iter_mut().enumerate() {
        *slot = resolve(l as u32);
    }
    let labels: Vec<u32> = lm.labels.iter().map(|&l| final_label[l as usize]).collect();

    let lengths = perimeters(w, h, &labels, regions.len());
    for (stat, p) in regions.iter_mut().zip(lengths) {
        stat.perimeter = p;
    }

    LabelMap {
        width: w,
        height: h,
        labels,
        regions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{RasterImage, Rgb};
    use crate::segment::segment;

    const WHITE: Rgb = [250, 250, 250];
    const RED: Rgb = [220, 20, 20];
    const BLUE: Rgb = [20, 20, 220];

    fn cfg_with_min_area(area: f64, pixels: usize) -> PipelineConfig {
        PipelineConfig {
            min_region_fraction: area / pixels as f64,
            ..Default::default()
        }
    }

    #[test]
    fn single_region_unchanged() {
        let lm = segment(
            &RasterImage::filled(5, 3, WHITE),
            &PipelineConfig::default(),
        );
        let cfg = PipelineConfig {
            min_region_fraction: 0.9,
            ..Default::default()
        };
        assert_eq!(merge_small_regions(&lm, &cfg), lm);
    }

    #[test]
    fn speck_is_absorbed() {
        let img = RasterImage::from_fn(4, 4, |x, y| if (x, y) == (1, 2) { RED } else { WHITE });
        let lm = segment(&img, &PipelineConfig::default());
        assert_eq!(lm.region_count(), 2);
        let merged = merge_small_regions(&lm, &cfg_with_min_area(4.0, 16));
        assert_eq!(merged.region_count(), 1);
        let r = &merged.regions()[0];
        assert_eq!(r.area, 16);
        assert_eq!(r.color_sum[0], 15 * 250 + 220);
        assert_eq!(r.perimeter, 12);
    }

    #[test]
    fn strip_merges_smallest_first() {
        // areas {2, 2, 12}: the first pair goes into its only neighbour
        let img = RasterImage::from_fn(16, 1, |x, _| match x {
            0 | 1 => RED,
            2 | 3 => BLUE,
            _ => WHITE,
        });
        let lm = segment(&img, &PipelineConfig::default());
        assert_eq!(lm.region_count(), 3);
        let merged = merge_small_regions(&lm, &cfg_with_min_area(4.0, 16));
        let areas: Vec<u64> = merged.regions().iter().map(|r| r.area).collect();
        assert_eq!(areas, vec![4, 12]);
        assert_eq!(&merged.labels()[..4], &[0, 0, 0, 0]);
    }

    #[test]
    fn prefers_longest_shared_boundary() {
        // 1x1 red speck at (2,1): three white neighbours edges vs one blue edge
        //   W W W W
        //   W W R B
        //   W W W B
        let img = RasterImage::from_fn(4, 3, |x, y| match (x, y) {
            (2, 1) => RED,
            (3, 1) | (3, 2) => BLUE,
            _ => WHITE,
        });
        let lm = segment(&img, &PipelineConfig::default());
        let merged = merge_small_regions(&lm, &cfg_with_min_area(2.0, 12));
        assert_eq!(merged.region_count(), 2);
        assert_eq!(merged.label_at(2, 1), merged.label_at(0, 0));
    }

    #[test]
    fn region_count_never_increases() {
        let img = RasterImage::from_fn(9, 9, |x, y| match (x * 7 + y * 3) % 5 {
            0 => RED,
            1 => BLUE,
            _ => WHITE,
        });
        let lm = segment(&img, &PipelineConfig::default());
        let merged = merge_small_regions(&lm, &cfg_with_min_area(5.0, 81));
        assert!(merged.region_count() <= lm.region_count());
        assert_eq!(merged.regions().iter().map(|r| r.area).sum::<u64>(), 81);
        assert!(merged.region_count() == 1 || merged.regions().iter().all(|r| r.area >= 5));
    }
}
