use std::fmt;

use hine_imaging::BinaryMask;

use crate::oracle::{
    endpoints, has_block, oracle_background_components, oracle_components, Connectivity,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Dimensions,
    /// Output has foreground where the input had none.
    Subset {
        x: usize,
        y: usize,
    },
    /// Output contains a 2x2 foreground block with this top-left corner.
    Thinness {
        x: usize,
        y: usize,
    },
    /// Foreground 8-component count changed.
    Connectivity {
        before: usize,
        after: usize,
    },
    /// Background 4-component count changed.
    Holes {
        before: usize,
        after: usize,
    },
    /// An end of a unit-width input arc was removed.
    Endpoint {
        x: usize,
        y: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dimensions => write!(f, "dimensions differ"),
            Violation::Subset { x, y } => write!(f, "subset: ({x},{y}) not in input"),
            Violation::Thinness { x, y } => write!(f, "thinness: 2x2 block at ({x},{y})"),
            Violation::Connectivity { before, after } => {
                write!(
                    f,
                    "connectivity: {before} foreground components became {after}"
                )
            }
            Violation::Holes { before, after } => {
                write!(f, "holes: {before} background components became {after}")
            }
            Violation::Endpoint { x, y } => write!(f, "endpoint: ({x},{y}) removed"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(Vec<Violation>),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn violations(&self) -> &[Violation] {
        match self {
            Verdict::Pass => &[],
            Verdict::Fail(v) => v,
        }
    }
}

/// Certifies a thinning result against its input.
pub fn check_thinning_invariants(input: &BinaryMask, output: &BinaryMask) -> Verdict {
    if input.width() != output.width() || input.height() != output.height() {
        return Verdict::Fail(vec![Violation::Dimensions]);
    }
    let mut found = Vec::new();

    if let Some((x, y)) = output.points().find(|&(x, y)| !input.get(x, y)) {
        found.push(Violation::Subset { x, y });
    }
    if let Some((x, y)) = has_block(output) {
        found.push(Violation::Thinness { x, y });
    }
    let (before, after) = (
        oracle_components(input, Connectivity::Eight),
        oracle_components(output, Connectivity::Eight),
    );
    if before != after {
        found.push(Violation::Connectivity { before, after });
    }
    let (before, after) = (
        oracle_background_components(input),
        oracle_background_components(output),
    );
    if before != after {
        found.push(Violation::Holes { before, after });
    }
    if has_block(input).is_none() {
        for (x, y) in endpoints(input) {
            if !output.get(x, y) {
                found.push(Violation::Endpoint { x, y });
            }
        }
    }

    if found.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail(found)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(art: &str) -> BinaryMask {
        BinaryMask::from_ascii(art).unwrap()
    }

    #[test]
    fn thin_line_passes() {
        let m = mask("#####");
        assert_eq!(check_thinning_invariants(&m, &m), Verdict::Pass);
    }

    #[test]
    fn block_flagged() {
        let m = mask("###\n###");
        let v = check_thinning_invariants(&m, &m);
        assert!(v
            .violations()
            .iter()
            .any(|v| matches!(v, Violation::Thinness { .. })));
    }

    #[test]
    fn split_flagged() {
        let input = mask("#####");
        let output = mask("##.##");
        let v = check_thinning_invariants(&input, &output);
        assert!(v.violations().contains(&Violation::Connectivity {
            before: 1,
            after: 2
        }));
    }

    #[test]
    fn hole_and_endpoint_and_subset() {
        let ring = mask("###\n#.#\n###");
        let opened = mask("###\n#..\n###");
        assert!(check_thinning_invariants(&ring, &opened)
            .violations()
            .contains(&Violation::Holes {
                before: 2,
                after: 1
            }));

        let line = mask("####");
        let short = mask(".###");
        assert!(check_thinning_invariants(&line, &short)
            .violations()
            .contains(&Violation::Endpoint { x: 0, y: 0 }));

        assert!(check_thinning_invariants(&short, &line)
            .violations()
            .contains(&Violation::Subset { x: 0, y: 0 }));
    }
}
