//! From-scratch recurrent forecasting engine: LSTM and MLP backbones,
//! forecasting heads with clear-sky injection, exact reverse-mode
//! gradients, Adam, the training loop, and checkpoints.

mod adam;
mod checkpoint;
mod gradcheck;
pub mod head;
mod lstm;
mod model;
mod params;
mod spec;
mod train;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{Checkpoint, FORMAT_VERSION, MAGIC};
pub use gradcheck::{check_gradients, GradCheck, GRADCHECK_FLOOR};
pub use head::{ForecastOutput, SampleOutput};
pub use model::{GradientTape, Model};
pub use params::{Gradients, ParamBlock};
pub use spec::{Backbone, HeadKind, ModelSpec, TrainConfig};
pub use train::{train, train_model, validation_ace, EpochLog, StopReason, TrainOutcome, TrainingLog};

pub(crate) fn sigmoid(x: f64) -> f64 {
    crate::distributions::logistic(x)
}
