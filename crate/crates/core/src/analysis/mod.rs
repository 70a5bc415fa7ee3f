//! Measurements behind the efficiency claims: supports, inner-product
//! counts, error bounds for partial orthogonalization, and a quadrature
//! oracle for inner products.

mod bounds;
mod counts;
mod partial;
mod quadrature;
mod support;

pub use bounds::{g_iteration, hat_inner_formula, piecewise_linear, ErrorModel, GStep};
pub use counts::{
    count_inner_products, one_sided_count, splinet_count_exact, splinet_count_stated, CountReport,
};
pub use partial::{measure_partial_error, partial_reconstruction_error, PartialError};
pub use quadrature::{gauss_legendre, integrate_pieces, quadrature_inner_product, superfluous_distance};
pub use support::{relative_support, BasisSupport, SupportReport};
