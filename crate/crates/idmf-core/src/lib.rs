//! Core data model and physics for car-following trajectory prediction:
//! trajectory types and dataset pipeline, the Intelligent Driver Model with
//! open-loop and closed-loop prediction, correlated GPS error synthesis, and
//! a scenario simulator that generates labeled leader/follower datasets.
//!
//! All types are immutable values after construction and every operation is
//! a pure function, so everything here is safe to use from multiple threads.

pub mod calibrate;
pub mod csv_io;
pub mod error;
pub mod idm;
pub mod noise;
pub mod normalize;
pub mod pipeline;
pub mod scenario;
pub mod trajectory;

pub use calibrate::{calibrate_idm, validate_fde, FdeOutcome, ParamBounds};
pub use csv_io::{load_csv, load_manifest, save_csv, save_manifest, DatasetManifest, SplitCounts};
pub use error::{CoreError, Result};
pub use idm::{
    closed_loop_rollout, consistent_initial_velocity, desired_gap, double_integrate,
    equilibrium_gap, finite_difference_velocities, idm_acceleration, open_loop_accel_sequence,
    open_loop_positions, IdmParams, IntegrationConfig,
};
pub use noise::{
    apply_noise, apply_noise_dataset, derive_seed, generate_noise, measure_mae, ArmaNoiseParams,
    NoiseChannelSpec,
};
pub use normalize::{denormalize, normalize_window, Normalizer};
pub use pipeline::{
    extract_pairs, split_dataset, window_pairs, DEFAULT_GAP_THRESHOLD, DEFAULT_WINDOW_LEN,
};
pub use scenario::{
    build_dataset, generate_lead_trajectory, simulate_follower, GenerationConfig, LeadProfileKind,
    LeadProfileSpec, ScenarioManifest, ScenarioMix, SimScenario,
};
pub use trajectory::{DatasetSplit, SequenceWindow, Trajectory, TrajectoryPair};
