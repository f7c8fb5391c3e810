//! Large-scale conformal geometry on finite metric spaces.
//!
//! The crate evaluates packing-supremum energies, capacities, moduli and the
//! Grötzsch pseudo-distance on finite samples of metric spaces, and checks
//! conformality certificates for maps between them.
//!
//! ```
//! use lsconf::space::{gen_space, SpaceSpec};
//! use lsconf::energy::{energy, EnergyMode, MapValues};
//!
//! let path = gen_space(&SpaceSpec::Path { n: 7 }).unwrap();
//! let u = MapValues::scalar((0..7).map(|i| i as f64).collect());
//! let e = energy(&path, &u, 1.0, 1.0, 1.0, 1.0, EnergyMode::Exact).unwrap();
//! assert_eq!(e.exact, Some(4.0));
//! ```

pub mod energy;
pub mod maps;
pub mod packing;
pub mod solver;
pub mod space;
pub mod suite;
pub mod varprob;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/spaces.md")]
struct BookSpaces;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/packings.md")]
struct BookPackings;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/energy.md")]
struct BookEnergy;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/capacity.md")]
struct BookCapacity;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/maps.md")]
struct BookMaps;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/suites.md")]
struct BookSuites;
