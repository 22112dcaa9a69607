pub mod batch;
pub mod error;
pub mod features;
pub mod graph;
pub mod io;
pub mod output;
pub mod phantom;
pub mod pipeline;
pub mod regional;
pub mod skeleton;
pub mod stats;
pub mod volume;

pub use error::{Error, Result};
pub use volume::{LabelVolume, VoxelVolume};
