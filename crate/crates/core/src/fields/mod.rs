//! Periodic-grid storage, differentiation, quadrature, and pointwise
//! tensor algebra for all field types.

pub mod deriv;
pub mod field;
pub mod forms;
pub mod grid;
pub mod io;
pub(crate) mod linalg;
pub mod metric;
pub mod tensor;

pub use deriv::{derive, quadrature};
pub use field::{CGridField, FieldScalar, GridField, Rank};
pub use grid::{GridSpec, Scheme};
pub use metric::{inner_sym, matrix_exp, MetricField, VolumeForm};
