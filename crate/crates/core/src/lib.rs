//! Slope filtrations at desk scale: types and polygons, lattices over
//! discrete valuation rings, Harder-Narasimhan filtrations, Kisin modules,
//! isocrystals and the abelian cocharacter calculus.

pub mod arith;
pub mod error;
pub mod filtrations;
pub mod hncore;
pub mod isocrystal;
pub mod kisin;
pub mod lattices;
pub mod phimod;
pub mod tori;
pub mod types;

pub use arith::{Laurent, QPoly, RingSpec, SeriesElement, Q};
pub use error::{Error, Result};
pub use filtrations::{Field, FlagFiltration, Subspace};
pub use hncore::{Certificate, HnFlag, SlopeCategory};
pub use isocrystal::{FilteredIsocrystal, Isocrystal, WittLattice};
pub use kisin::{Eisenstein, HnDecomposition, KisinModule, ThetaOptions, ThetaStep, Witness};
pub use lattices::DvrLattice;
pub use phimod::{PtModule, SearchOptions, TorsionKisinModule};
pub use tori::{CharacterFunction, GaloisSet, Weights};
pub use types::{PolygonFunction, TypeVector};
