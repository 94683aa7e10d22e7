//! CG-like-Adam: Adam-type optimization along a damped conjugate-gradient
//! direction, together with reference optimizers, deterministic test problems
//! and trajectory diagnostics for the quantities that govern its convergence.
//!
//! ```
//! use cgadam::{HyperParams, OptimizerState, ConjugateMethod};
//! use cgadam::problems::{quadratic, GradientOracle};
//!
//! let problem = quadratic(4, 10.0).unwrap();
//! let hp = HyperParams::default().with_method(ConjugateMethod::Fr).with_alpha(1e-2);
//! let mut state = OptimizerState::new(vec![1.0; 4]).unwrap();
//! for _ in 0..100 {
//!     let g = problem.gradient(state.x());
//!     state.step(&g, &hp).unwrap();
//! }
//! assert!(problem.value(state.x()) < problem.value(&[1.0; 4]));
//! ```

pub mod algorithm;
pub mod baselines;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod params;
pub mod problems;

pub use algorithm::Algorithm;
pub use baselines::{baseline_step, BaselineKind, GenericAdam, SecondMoment};
pub use error::{Error, Result};
pub use optimizer::{cg_like_direction, conjugate_coefficient, step, OptimizerState, StepOutput};
pub use params::{Beta1Schedule, ConjugateMethod, HyperParams};
