//! Reproducible simulation studies.
//!
//! A study is a pipeline of models (data-generating distributions), methods
//! applied to their draws, and metrics computed on method outputs. Every
//! intermediate object is saved under a study directory and a [`Simulation`]
//! only holds references to those files, so stages can be rerun, extended,
//! split across processes or subset without recomputation.

pub mod cli;
pub mod codec;
pub mod component;
pub mod engine;
pub mod error;
pub mod param;
pub mod predicate;
pub mod report;
pub mod rng;
pub mod simulation;
pub mod store;

pub use component::*;
pub use engine::{new_model_generator, ModelGenerator, ParallelOptions};
pub use error::{BoxError, Error, Result};
pub use param::{list_of, map_bit_eq, Matrix, ParamMap, ParamValue};
pub use predicate::Predicate;
pub use rng::{derive_chunk_stream, method_stream_for, ChunkStream, RngState, StreamKey};
pub use simulation::{load_simulation, new_simulation, Selector, Simulation};
pub use store::{Ref, RefKind};
