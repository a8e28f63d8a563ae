//! Benchmark harness: dataset ingestion, synthetic scenes and experiment
//! reports.

pub mod dataset;
pub mod experiment;
pub mod synth;

pub use dataset::{load_dataset, GroundTruth, SceneRecord};
pub use experiment::{
    run_experiment, ExperimentConfig, Method, MetricsReport, SceneFailure, SceneResult, Sensor, SynthSceneSpec,
};
pub use synth::{random_edge_scene, synth_color_scene, synth_scene, synth_stokes, SceneKind, Stokes, SynthParams};
