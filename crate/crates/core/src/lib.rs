//! Regularity diagnostics at the origin for weak solutions of
//! `∂_j(a_ij ∂_i u) = 0` with Gilbarg-Serrin coefficients
//! `a_ij = δ_ij + g(|x|) θ_i θ_j`.
//!
//! The crate is organized around the coefficient profile `g`:
//!
//! * [`profiles`]: closed-form and tabulated profiles, Dini-type moduli.
//! * [`dynsys`]: the R-matrix, scalar stability of `φ' = ((n-1)/n) g φ` and
//!   the final [`dynsys::RegularityVerdict`].
//! * [`radial_ode`]: the comparison equation for `Z(r)` in log coordinates.
//! * [`oscillation`]: ball means and mean oscillation at `x = 0`.
//! * [`oracle`]: spherical-harmonic and finite-difference solvers used as
//!   independent checks.
//!
//! All radial quantities use `t = -log r`.

pub mod dynsys;
pub mod error;
pub mod oracle;
pub mod oscillation;
pub mod profiles;
pub mod quadrature;
pub mod radial_ode;
pub mod report;
pub mod sphere;
pub mod verdict;

pub use error::{Error, Result};
pub use profiles::{Family, FamilyName, ProfileSpec, RadialProfile};
pub use verdict::{Evidence, Finding, PaperTag, Status, Verdict};
