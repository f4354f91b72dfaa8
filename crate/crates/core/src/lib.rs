//! Exact arithmetic for equal-characteristic higher local fields
//! `K = F_q((t_1))...((t_d))`: Milnor K-symbols, Witt vectors, differential
//! forms, the cohomology groups `H^q` in their symbol presentation, the
//! invariant map `H^{d+1}(K) → Q/Z`, and the reciprocity map of cyclic
//! extensions of prime degree.

pub mod cli;
pub mod cohomology;
pub mod error;
pub mod extensions;
pub mod forms;
pub mod gf;
pub mod kgroup;
pub mod parse;
pub mod reciprocity;
pub mod ring;
pub mod sample;
pub mod tower;
pub mod witt;

pub use error::{Error, Result};
pub use gf::{FFElem, GaloisField};
pub use ring::Ring;
pub use tower::{Elem, FieldConfig, Tower, EXACT};
