//! Small hand-made matrices shared by tests, examples and the FFI smoke test.

use crate::model::PreferenceMatrix;

/// Three users over five arms. Single-peaked under the order
/// `[0, 1, 4, 3, 2]`, with peaks at arms 0, 1 and 4.
pub fn figure_one() -> PreferenceMatrix {
    PreferenceMatrix::from_rows(&[
        [0.85, 0.65, 0.15, 0.30, 0.45],
        [0.30, 0.90, 0.50, 0.60, 0.70],
        [0.10, 0.60, 0.25, 0.55, 0.95],
    ])
    .expect("entries lie in [0, 1]")
}
