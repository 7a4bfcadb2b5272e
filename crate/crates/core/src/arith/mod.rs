//! Exact arithmetic: rationals, polynomials, truncated series, and Smith
//! normal forms over the local rings the rest of the crate lives in.

pub mod chain;
pub mod dvr;
pub mod laurent;
pub mod literal;
pub mod poly;
pub mod rational;
pub mod series;

pub use dvr::{Dvr, EAdic, Mat, PAdic, SLocal, Snf, UAdic, Val};
pub use laurent::Laurent;
pub use literal::{parse_laurent, parse_poly};
pub use poly::{QPoly, RatFunc};
pub use rational::Q;
pub use series::{RingSpec, SeriesElement};
