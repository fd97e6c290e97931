//! Minimal neural substrate: dense matrices, a gradient tape, transformer
//! layers, an optimizer and a finite-difference checker.

pub mod gradcheck;
pub mod layers;
pub mod matrix;
pub mod optim;
pub mod tape;

pub use gradcheck::{gradcheck, GradcheckReport};
pub use layers::{DecoderStack, EncoderStack, Linear, MlpHead, StackConfig};
pub use matrix::Matrix;
pub use optim::Adam;
pub use tape::{Gradients, ParamId, ParamStore, Tape, Var};
