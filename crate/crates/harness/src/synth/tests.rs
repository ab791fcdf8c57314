use std::fs;

use rayon::prelude::*;
use tempfile::tempdir;

use vmd_core::audio::ChannelRole;
use vmd_core::vad::VadParams;
use vmd_core::{Decision, FeatureExtractor, FeatureWindow};

use crate::dataset::reference_backend;

use super::*;

#[test]
fn default_spec_validates() {
    SynthSpec::default().validate().unwrap();
}

#[test]
fn out_of_contract_specs_are_rejected() {
    let spec = |f: fn(&mut SynthSpec)| {
        let mut s = SynthSpec::default();
        f(&mut s);
        s
    };
    assert!(
        spec(|s| s.vm_micro_pause_ms = (60, 250)).validate().is_err(),
        "micro-pauses must stay under 200 ms"
    );
    assert!(
        spec(|s| s.nvm_silence_ms = (800, 2000)).validate().is_err(),
        "live-answer silences start at 1 s"
    );
    assert!(spec(|s| s.vm_prior = 1.5).validate().is_err());
    assert!(
        spec(|s| s.vm_onset_ms = (800, 200)).validate().is_err(),
        "inverted range"
    );
    assert!(
        spec(|s| s.noise_level = 0.5).validate().is_err(),
        "noise must sit below speech"
    );
}

#[test]
fn same_index_reproduces_identical_samples() {
    let spec = SynthSpec::default();
    let a = generate_call(&spec, 3).unwrap();
    let b = generate_call(&spec, 3).unwrap();
    assert_eq!(a.stereo.samples_interleaved, b.stereo.samples_interleaved);
    assert_eq!(a.label, b.label);
    assert_eq!(a.seed, b.seed);

    let c = generate_call(&spec, 4).unwrap();
    assert_ne!(a.stereo.samples_interleaved, c.stereo.samples_interleaved);
}

#[test]
fn labels_follow_the_prior() {
    let mut spec = SynthSpec {
        vm_prior: 1.0,
        ..Default::default()
    };
    assert!((0..50).all(|i| generate_call(&spec, i).unwrap().label == Decision::Vm));
    spec.vm_prior = 0.0;
    assert!((0..50).all(|i| generate_call(&spec, i).unwrap().label == Decision::Nvm));
}

#[test]
fn bot_channel_is_silent() {
    let call = generate_call(&SynthSpec::default(), 0).unwrap();
    assert!(call
        .stereo
        .channel_i16(ChannelRole::Bot)
        .iter()
        .all(|&s| s == 0));
}

#[test]
fn corpus_is_byte_identical_per_seed() {
    let spec = SynthSpec::default();
    let dir_a = tempdir().unwrap();
    let dir_b = tempdir().unwrap();
    let entries = generate_corpus(&spec, 12, dir_a.path()).unwrap();
    generate_corpus(&spec, 12, dir_b.path()).unwrap();
    assert_eq!(entries.len(), 12);

    for e in &entries {
        let bytes_a = fs::read(dir_a.path().join(&e.path)).unwrap();
        let bytes_b = fs::read(dir_b.path().join(&e.path)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{}", e.path.display());
    }
    assert_eq!(
        fs::read(dir_a.path().join(MANIFEST_NAME)).unwrap(),
        fs::read(dir_b.path().join(MANIFEST_NAME)).unwrap()
    );
}

#[test]
fn manifest_round_trips() {
    let spec = SynthSpec::default();
    let dir = tempdir().unwrap();
    let written = generate_corpus(&spec, 8, dir.path()).unwrap();
    let loaded = load_manifest(&dir.path().join(MANIFEST_NAME)).unwrap();

    assert_eq!(written.len(), loaded.len());
    for (w, l) in written.iter().zip(&loaded) {
        assert_eq!(dir.path().join(&w.path), l.path);
        assert_eq!(w.label, l.label);
        assert_eq!(w.source, l.source);
        assert_eq!(w.seed, l.seed);
        assert!(l.path.exists());
    }
}

#[test]
fn empty_corpus_is_rejected() {
    let dir = tempdir().unwrap();
    assert!(generate_corpus(&SynthSpec::default(), 0, dir.path()).is_err());
}

#[test]
fn bad_manifests_are_rejected() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("manifest.csv");

    fs::write(&path, "who,knows\n").unwrap();
    assert!(load_manifest(&path).is_err(), "wrong header");

    fs::write(&path, "path,label,source,seed\na.wav,MAYBE,synthetic,1\n").unwrap();
    assert!(load_manifest(&path).is_err(), "unknown label");

    fs::write(&path, "path,label,source,seed\na.wav,VM,synthetic\n").unwrap();
    assert!(load_manifest(&path).is_err(), "missing field");

    fs::write(&path, "path,label,source,seed\na.wav,VM,guessed,1\n").unwrap();
    assert!(load_manifest(&path).is_err(), "unknown source");
}

/// Shape contract over a 1000-call generation: voicemail greetings are
/// speech-dense and live answers carry at least one long silence, as
/// seen by the actual extraction pipeline at the 5 s window.
#[test]
fn generated_classes_have_their_shapes() {
    let spec = SynthSpec::default();
    let window = FeatureWindow::new(5000).unwrap();

    let observed: Vec<(Decision, f64, f64)> = (0..1000u64)
        .into_par_iter()
        .map_init(
            || {
                FeatureExtractor::new(window, VadParams::default(), &reference_backend())
                    .expect("reference extractor")
            },
            |extractor, index| {
                let call = generate_call(&spec, index).unwrap();
                let callee = call.stereo.channel_i16(ChannelRole::Callee);
                let features = extractor.extract(&callee).unwrap().features;
                (call.label, features.speech_ratio, features.max_silence_ms)
            },
        )
        .collect();

    let vm: Vec<_> = observed.iter().filter(|(l, ..)| *l == Decision::Vm).collect();
    let nvm: Vec<_> = observed.iter().filter(|(l, ..)| *l == Decision::Nvm).collect();
    assert!(vm.len() >= 300 && nvm.len() >= 300, "prior 0.5 should fill both classes");

    let dense_vm = vm.iter().filter(|(_, ratio, _)| *ratio > 0.6).count();
    assert!(
        dense_vm as f64 >= 0.9 * vm.len() as f64,
        "only {dense_vm}/{} voicemail calls had speech_ratio > 0.6",
        vm.len()
    );

    let quiet_nvm = nvm.iter().filter(|(.., max_sil)| *max_sil >= 1000.0).count();
    assert!(
        quiet_nvm as f64 >= 0.9 * nvm.len() as f64,
        "only {quiet_nvm}/{} live answers had max_silence_ms >= 1000",
        nvm.len()
    );
}
