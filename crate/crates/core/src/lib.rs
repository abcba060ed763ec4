//! First-order MARS regression, its exact conversion into ReLU networks,
//! function-preserving network growth, lattice piecewise-linear compilation,
//! and the experiment harness comparing converted and randomly initialized
//! networks.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

pub mod convert;
pub mod data;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod net;
pub mod pwl;
pub mod scalar;
pub mod spline;

pub use convert::{
    deepen, mars_to_network, parameter_shift_report, reshape_to, widen, widen_with_jitter, ConversionReport,
    LayerShift, ShiftReport,
};
pub use data::{
    encode_categorical, load_csv, normalize, split_shuffle, CsvOptions, Dataset, DatasetManifest, RawTable, Scaler,
};
pub use error::{Error, Result};
pub use experiment::{
    emit_reports, prepare, run_comparison, run_scaling, run_timing, ExperimentConfig, ExperimentReport,
    ScalingReport, TimingReport,
};
pub use linalg::{least_squares, LeastSquares, Matrix};
pub use net::{
    gradients, mse_loss, random_init, sgd_step, train, Activation, DenseNetwork, Gradients, Layer, TrainConfig,
    TrainHistory, Trainer,
};
pub use pwl::{
    compile_lattice, eval_lattice, max_affine_eval, max_gadget, min_gadget, AffinePiece, DepthReport, LatticePwl,
};
pub use scalar::Scalar;
pub use spline::{
    backward_prune, effective_params, feature_importance, fit_mars, forward_pass, gcv, ramp, BasisFunction,
    Direction, FitConfig, GcvRecord, ImportanceReport, MarsFit, MarsModel, Term,
};

pub type Model = MarsModel<f64>;
pub type Model32 = MarsModel<f32>;
pub type Network = DenseNetwork<f64>;
pub type Network32 = DenseNetwork<f32>;
pub type Lattice = LatticePwl<f64>;
pub type Lattice32 = LatticePwl<f32>;
pub type Data = Dataset<f64>;
pub type Data32 = Dataset<f32>;
