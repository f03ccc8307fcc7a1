//! The two reference B tensors shipped with the crate (`fixtures/ex41.json`,
//! `fixtures/ex42.json`).

use crate::io::parse_tensor;
use crate::tensor::Tensor;

pub const EX41_JSON: &str = include_str!("../fixtures/ex41.json");
pub const EX42_JSON: &str = include_str!("../fixtures/ex42.json");

/// Symmetric 4-order 3-dimensional B tensor: diagonal (6, 5, 6), the
/// permutations of (1,3,3,3) set to 1, those of (2,3,2,2) to 1.5, all else 2.
pub fn ex41() -> Tensor {
    parse_tensor(EX41_JSON).expect("bundled fixture parses")
}

/// Symmetric 4-order 4-dimensional B tensor: diagonal 3, the permutations of
/// (1,4,4,4) set to 0.7, those of (2,3,3,3) to 0.5, all else 1.
pub fn ex42() -> Tensor {
    parse_tensor(EX42_JSON).expect("bundled fixture parses")
}
