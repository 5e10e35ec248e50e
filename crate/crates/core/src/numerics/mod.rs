//! Dense networks with hand-written reverse-mode gradients, an Adam
//! optimizer and a central-difference gradient checker.

mod adam;
mod dense;
mod gradcheck;
mod params;

pub use adam::{adam_step, AdamState, DEFAULT_LEARNING_RATE};
pub use dense::{Activation, DenseLayer, DenseNet, Tape};
pub use gradcheck::{check_gradient, finite_diff_check, GradCheckReport};
pub use params::{LayoutEntry, ParamDocument, ParamVector, PARAM_DOCUMENT_VERSION};
