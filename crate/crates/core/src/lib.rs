//! Real-time voicemail detection core: audio I/O, 8 kHz -> 16 kHz
//! resampling, VAD segmentation, temporal feature extraction, shallow
//! tree/linear classifiers, and the end-to-end detection pipeline.

pub mod audio;
pub mod error;
pub mod features;
pub mod model;
pub mod pipeline;
pub mod resample;
pub mod vad;

pub use audio::{ChannelRole, MonoBuffer, StereoPcm};
pub use error::{CoreError, Result};
pub use features::{FeatureWindow, TemporalFeatureVector};
pub use model::{classify, Decision, DecisionThreshold, Model, SavedModel};
pub use pipeline::{
    CrossChannelExtraction, DetectionResult, Detector, FeatureExtractor, PipelineConfig,
    StreamAccumulator, WindowExtraction,
};
pub use vad::{SpeechSegment, VadParams};
