//! Bessel-Poisson semigroup on the half line, variation-type differential transforms
//! along lacunary time sequences, and the numerical checks that accompany them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod function;
pub mod hankel;
pub mod kernel;
pub mod lab;
pub mod lacunary;
pub mod measure;
pub mod quadrature;
pub mod transform;

pub use error::{Error, Result};
pub use function::{Grid, Profile, RadialFunction, SampledFunction, TailPolicy};
pub use kernel::{KernelJet, KernelPoint, PoissonKernel, QuadratureSpec};
pub use lacunary::{LacunarySetup, RefinedSetup};
pub use measure::{Interval, LambdaSpace, PowerWeight};
pub use transform::{IndexWindow, TruncationLevel};
