/// Integer pixel coordinate.
pub type Point = (usize, usize);

fn directed(from: &[Point], to: &[Point]) -> f64 {
    from.iter()
        .map(|&(ax, ay)| {
            to.iter()
                .map(|&(bx, by)| {
                    let dx = ax as f64 - bx as f64;
                    let dy = ay as f64 - by as f64;
                    dx * dx + dy * dy
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
        .sqrt()
}

/// Symmetric Hausdorff distance in pixels, by exhaustive search.
///
/// Two empty sets are at distance zero; an empty set is infinitely far from a
/// non-empty one.
pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        _ => directed(a, b).max(directed(b, a)),
    }
}
