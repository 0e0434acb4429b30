//! Birational dynamics of the elliptic Painlevé equation and its higher
//! analogs, realized through noncommutative plane geometry.
//!
//! The crate is organized around a chain of increasingly structured objects:
//!
//! * [`plane`] — projective points, plane curves, interpolation and
//!   intersection over complex floats;
//! * [`elliptic`] — smooth plane cubics with a flex base point, the chord
//!   group law and Picard-class bookkeeping;
//! * [`weyl`] — the extended affine Weyl group `S(3d) ⋉ Z^{3d}` and its action
//!   on parameter tuples;
//! * [`dynamics`] — the birational action on pairs (plane divisor, curve
//!   points); the case d = 3 is the elliptic Painlevé equation;
//! * [`sklyanin`] — truncated 3-generator Sklyanin algebras, their point
//!   scheme, central element and twisted restriction to the cubic;
//! * [`sheaf`] — the explicit d = 3 moduli chart by presentation data and the
//!   two-step Hecke move, cross-validated against [`dynamics`];
//! * [`poisson`] — residue-formula Poisson pairing and symplecticity checks;
//! * [`ore`] — an exact-arithmetic one-variable model of the root-shift
//!   phenomenon.
//!
//! All floating-point code is generic over [`scalar::Real`], with `f64` and a
//! double-double type for extended-precision runs.

pub mod complex;
pub mod linalg;
pub mod poly;
pub mod scalar;

pub mod plane;
pub mod elliptic;
pub mod weyl;
pub mod dynamics;
pub mod sklyanin;
pub mod sheaf;
pub mod poisson;
pub mod ore;

pub mod io;
pub mod suite;

pub use complex::{C64, Cx};
pub use scalar::{Dd, Real};
