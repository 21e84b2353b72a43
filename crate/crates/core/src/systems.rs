//! Ready-made example systems used by tests, docs and the CLI defaults.

use crate::fiber::FiberMap;
use crate::skew::StepSkewSystem;

fn affine(slope: f64, intercept: f64) -> FiberMap {
    FiberMap::affine(slope, intercept).expect("catalogue map")
}

/// Two preserving contractions `0.5x + 0.1`, `0.5x + 0.4`.
pub fn sys_p() -> StepSkewSystem {
    StepSkewSystem::new(vec![affine(0.5, 0.1), affine(0.5, 0.4)], true).expect("catalogue system")
}

/// `0.5x + 0.1` and the reversing `0.9 − 0.5x`.
pub fn sys_m() -> StepSkewSystem {
    StepSkewSystem::new(vec![affine(0.5, 0.1), affine(-0.5, 0.9)], true).expect("catalogue system")
}

/// The preserving map of the bi-graph example: attracting fixed points at
/// 0.25 and 0.75 (slope 0.5), repelling at 0.5 (slope 2).
pub fn bigraph_f1() -> FiberMap {
    FiberMap::anchored(vec![0.0, 0.25, 0.5, 0.75, 1.0], vec![0.1, 0.25, 0.5, 0.75, 0.9], vec![0.6, 0.5, 2.0, 0.5, 0.6])
        .expect("catalogue map")
}

/// The reversing map of the bi-graph example, swapping 0.25 and 0.75.
pub fn bigraph_f2(shift: f64) -> FiberMap {
    FiberMap::anchored(
        vec![0.0, 0.25, 0.75, 1.0],
        vec![0.9 + shift, 0.75 + shift, 0.25 + shift, 0.1 + shift],
        vec![0.6, 0.5, 0.5, 0.6],
    )
    .expect("catalogue map")
}

/// Bi-graph example: the orbit of period two through 0.25 and 0.75.
pub fn sys_bg() -> StepSkewSystem {
    StepSkewSystem::new(vec![bigraph_f1(), bigraph_f2(0.0)], true).expect("catalogue system")
}

/// [`sys_bg`] with the reversing map's values raised by 0.01.
pub fn sys_bg_shifted() -> StepSkewSystem {
    StepSkewSystem::new(vec![bigraph_f1(), bigraph_f2(0.01)], true).expect("catalogue system")
}

/// A single reversing contraction `0.75 − 0.5x`.
pub fn single_reversing() -> StepSkewSystem {
    StepSkewSystem::new(vec![affine(-0.5, 0.75)], true).expect("catalogue system")
}
