//! Deep Q-learning mathematics: feature frames and state windows, the
//! reward, alignment of delayed feedback into experiences, the recurrent
//! Q-network with hand-written backpropagation through time, the replay
//! buffer, and parameter snapshot serialization.

mod feature;
mod net;
mod obs;
mod replay;
pub mod snapshot;
mod train;

pub use feature::{build_frame, reward, FeatureFrame, StateWindow};
pub use net::{ForwardCache, GruParams, Mat, QNet, N_ACTIONS};
pub use obs::{AlignError, Experience, ObservationLog, TxOutcome};
pub use replay::ReplayBuffer;
pub use train::{
    backward, gradient_check, select_action, sync, train_step, Adam, GradCheckReport,
    Hyperparams, TrainError,
};
