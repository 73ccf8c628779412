//! Precision contract, the smooth transition h, panel quadrature, hex floats.

pub mod hexfloat;
pub mod quad;
pub mod real;
pub mod transition;

pub use hexfloat::{f64_to_hex, float_to_hex, hex_to_f64, hex_to_float};
pub use quad::{integrate_pieces, integrate_with, oscillatory_integrate, QuadOptions, QuadValue, QuadratureResult, SampledPanels};
pub use real::{Mpf, Precision, Real};
pub use transition::{smooth_step, smooth_step_d1, transition_h};
