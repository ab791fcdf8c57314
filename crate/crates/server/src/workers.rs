use std::collections::HashMap;
use std::sync::Arc;
use std::thread::JoinHandle;

use crossbeam_channel::{Receiver, Sender};
use tokio::sync::oneshot;
use vmd_core::model::{DecisionThreshold, SavedModel};
use vmd_core::vad::{BackendSpec, VadParams};
use vmd_core::{DetectionResult, Detector, FeatureWindow, PipelineConfig};

use crate::error::Result;

pub struct Job {
    pub samples: Vec<i16>,
    pub window: FeatureWindow,
    pub reply: oneshot::Sender<vmd_core::Result<DetectionResult>>,
}

/// A fixed set of OS threads, each owning its own pre-warmed detector,
/// fed from an unbounded queue so submission never blocks the
/// connection loops. Jobs queue when every worker is busy.
pub struct InferencePool {
    jobs: Option<Sender<Job>>,
    workers: Vec<JoinHandle<()>>,
    model: Arc<SavedModel>,
}

impl InferencePool {
    pub fn new(
        model: Arc<SavedModel>,
        vad: VadParams,
        backend: BackendSpec,
        tau: DecisionThreshold,
        default_window: FeatureWindow,
        size: usize,
    ) -> Result<Self> {
        // Construction is deterministic in its inputs, so one probe
        // validates what every worker will build. Startup fails fast
        // here instead of on the first session.
        Detector::new(&PipelineConfig {
            window: default_window,
            tau,
            vad: vad.clone(),
            model: Arc::clone(&model),
            backend: backend.clone(),
        })?;

        let (tx, rx) = crossbeam_channel::unbounded::<Job>();
        let workers = (0..size.max(1))
            .map(|i| {
                let rx = rx.clone();
                let model = Arc::clone(&model);
                let vad = vad.clone();
                let backend = backend.clone();
                std::thread::Builder::new()
                    .name(format!("vmd-infer-{i}"))
                    .spawn(move || worker_loop(rx, model, vad, backend, tau, default_window))
                    .expect("spawn inference worker")
            })
            .collect();
        Ok(Self {
            jobs: Some(tx),
            workers,
            model,
        })
    }

    pub fn model(&self) -> &Arc<SavedModel> {
        &self.model
    }

    /// Queues one window for inference. The receiver errors only if the
    /// pool is shutting down.
    pub fn submit(
        &self,
        samples: Vec<i16>,
        window: FeatureWindow,
    ) -> oneshot::Receiver<vmd_core::Result<DetectionResult>> {
        let (reply, rx) = oneshot::channel();
        let job = Job {
            samples,
            window,
            reply,
        };
        if let Some(jobs) = &self.jobs {
            // A send error drops the job, and with it the reply sender;
            // the caller sees the closed channel.
            let _ = jobs.send(job);
        }
        rx
    }
}

impl Drop for InferencePool {
    fn drop(&mut self) {
        self.jobs = None;
        for worker in self.workers.drain(..) {
            let _ = worker.join();
        }
    }
}

fn worker_loop(
    rx: Receiver<Job>,
    model: Arc<SavedModel>,
    vad: VadParams,
    backend: BackendSpec,
    tau: DecisionThreshold,
    default_window: FeatureWindow,
) {
    let build = |window: FeatureWindow| {
        Detector::new(&PipelineConfig {
            window,
            tau,
            vad: vad.clone(),
            model: Arc::clone(&model),
            backend: backend.clone(),
        })
    };
    let mut detectors: HashMap<u32, Detector> = HashMap::new();
    // Pre-warm: the common case never constructs on the request path.
    if let Ok(detector) = build(default_window) {
        detectors.insert(default_window.window_ms(), detector);
    }
    for job in rx {
        let detector = match detectors.entry(job.window.window_ms()) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(v) => match build(job.window) {
                Ok(detector) => v.insert(detector),
                Err(e) => {
                    let _ = job.reply.send(Err(e));
                    continue;
                }
            },
        };
        let _ = job.reply.send(detector.detect_samples(&job.samples));
    }
}
