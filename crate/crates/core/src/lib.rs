//! Optimal growth of a host economy that receives foreign direct investment
//! and can pay a fixed cost to run domestic R&D.
//!
//! Savings `S` are split each period between physical capital, R&D and
//! training of workers hired by a multinational firm. The best split gives
//! next-period resources `G(S)`, a technology that is increasing but not
//! concave: R&D only pays once its output clears a fixed cost. The crate
//! solves that static problem, locates the takeoff threshold, computes the
//! no-R&D steady states, solves the dynamic program by value function
//! iteration and simulates optimal paths.
//!
//! ```
//! use fdi_growth::{model::{Model, Parameters}, thresholds};
//!
//! let model = Model::new(Parameters::trap_baseline()).unwrap();
//! let s_b = thresholds::steady_fdi_no_rd(&model).unwrap();
//! assert!((s_b - 0.4608).abs() < 1e-6);
//! ```

// `!(x < y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bellman;
pub mod error;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod simulate;
pub mod sweep;
pub mod technology;
pub mod thresholds;

pub use error::{ModelError, Result};
pub use model::{Model, Parameters, Utility};
