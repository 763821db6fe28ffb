//! Zero-shot classification with conditional denoisers.
//!
//! A conditional denoiser `x̂ = denoise(x_t, t, condition)` becomes a
//! classifier by scoring each candidate class with the weighted squared
//! error `w_t ‖x_0 − x̂‖²` of its prediction from a noised input and taking
//! the argmin of the Monte Carlo mean. The crate provides:
//!
//! * [`diffusion`]: the continuous-time forward process and the denoiser trait;
//! * [`world`]: a class-conditional Gaussian world with its exact
//!   posterior-mean denoiser and Bayes classifier, used as an oracle;
//! * [`weighting`]: timestep weightings, including a learned 20-bucket one;
//! * [`stats`]: streaming paired differences and the paired t-test;
//! * [`classifier`]: naive, shared-noise and pruned classification;
//! * [`calibration`]: temperature/Platt scaling and reliability reports;
//! * [`binding`]: synthetic attribute-binding prompt tasks;
//! * [`io`]: the on-disk formats.

pub mod binding;
pub mod calibration;
pub mod classifier;
pub mod diffusion;
pub mod error;
pub mod io;
pub mod rng;
pub mod stats;
pub mod weighting;
pub mod world;

pub use classifier::{
    aggregate_weighted, calls_to_accuracy, efficiency_curve, ClassScore, Classification,
    ClassifierConfig, EfficiencyRow, Elimination, Engine, Method, NoiseMode, Prediction,
    PruningConfig, RoundScores, ScoreRecord, ScoresLedger, Strategy,
};
pub use diffusion::{
    default_label_names, label_set, squared_error_score, Condition, NoiseSchedule,
    NoisedObservation, Observation, ScheduleValues, ScoreModel,
};
pub use error::{Error, Result};
pub use stats::{paired_ttest_pvalue, student_t_sf, PairedAccumulator, Sidedness};
pub use weighting::{bucket_index, TimestepWeight, WeightingSpec};
pub use world::{ClusteredSpec, GaussianWorld, WorldDenoiser, WorldSpec};
