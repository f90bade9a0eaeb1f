//! Exact computations with quiver algebras: path algebras with relations,
//! localization, representations, stability, monads and quiver algebroid
//! stacks.

#![allow(clippy::needless_range_loop, clippy::type_complexity, clippy::too_many_arguments, clippy::len_without_is_empty)]

pub mod algebra;
pub mod dga;
pub mod formats;
pub mod groebner;
pub mod linalg;
pub mod localization;
pub mod monad;
pub mod path;
pub mod quiver;
pub mod representation;
pub mod stability;
pub mod scalar;
pub mod stack;

pub use algebra::{Membership, QuiverAlgebra};
pub use path::{Element, Path};
pub use quiver::{Graph, Quiver};
pub use scalar::{GaussRat, Novikov, Rational, Scalar};
