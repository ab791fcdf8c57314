use std::collections::HashSet;

use tempfile::tempdir;

use vmd_core::audio::ChannelRole;

use crate::synth::{generate_call, generate_corpus, SynthSpec, MANIFEST_NAME};

use super::*;

fn windows() -> Vec<FeatureWindow> {
    vec![
        FeatureWindow::new(3000).unwrap(),
        FeatureWindow::new(5000).unwrap(),
    ]
}

#[test]
fn views_match_direct_extraction_bit_for_bit() {
    let call = generate_call(&SynthSpec::default(), 11).unwrap();
    let vad = VadParams::default();
    let views = extract_views(&call.stereo, &windows(), &vad, &reference_backend()).unwrap();
    assert_eq!(views.len(), 2);

    for window in windows() {
        let mut extractor =
            FeatureExtractor::new(window, vad.clone(), &reference_backend()).unwrap();
        let direct = extractor
            .extract(&call.stereo.channel_i16(ChannelRole::Callee))
            .unwrap();
        let view = &views[&window.window_ms()];
        assert_eq!(view.temporal, direct.features.to_array());
        // Silent bot channel shows up in the cross-channel tail.
        assert_eq!(view.cross_channel[7], 1.0, "bot_silence_indicator");
        assert_eq!(view.cross_channel[1], 0.0, "bot speech ratio");
    }
}

#[test]
fn manifest_extraction_matches_in_memory_extraction() {
    let spec = SynthSpec::default();
    let dir = tempdir().unwrap();
    generate_corpus(&spec, 6, dir.path()).unwrap();
    let entries = crate::synth::load_manifest(&dir.path().join(MANIFEST_NAME)).unwrap();

    let vad = VadParams::default();
    let from_disk =
        grid_records_from_manifest(&entries, &windows(), &vad, &reference_backend()).unwrap();

    let calls: Vec<(String, StereoPcm, Decision)> = entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let call = generate_call(&spec, i as u64).unwrap();
            (e.path.display().to_string(), call.stereo, e.label)
        })
        .collect();
    let in_memory =
        grid_records_from_calls(&calls, &windows(), &vad, &reference_backend()).unwrap();

    assert_eq!(from_disk, in_memory);
}

#[test]
fn labeled_records_carry_the_projected_dimensions() {
    let call = generate_call(&SynthSpec::default(), 2).unwrap();
    let records = grid_records_from_calls(
        &[("c2".into(), call.stereo, call.label)],
        &windows(),
        &VadParams::default(),
        &reference_backend(),
    )
    .unwrap();
    let w5 = FeatureWindow::new(5000).unwrap();

    for (set, dim) in [
        (FeatureSet::Vad15, 15),
        (FeatureSet::CrossChannel8, 8),
        (FeatureSet::Combined23, 23),
    ] {
        let projected = labeled_records(&records, w5, set, LabelSource::Synthetic).unwrap();
        assert_eq!(projected.len(), 1);
        assert_eq!(projected[0].features.len(), dim);
        assert_eq!(projected[0].window, w5);
    }

    let missing = FeatureWindow::new(7000).unwrap();
    assert!(labeled_records(&records, missing, FeatureSet::Vad15, LabelSource::Synthetic).is_err());

    let vectors = training_vectors(
        &labeled_records(&records, w5, FeatureSet::Vad15, LabelSource::Synthetic).unwrap(),
    );
    assert_eq!(vectors.len(), 1);
    assert_eq!(vectors[0].is_vm, records[0].label == Decision::Vm);
}

#[test]
fn stratified_split_holds_out_each_class_proportionally() {
    let labels: Vec<Decision> = (0..40)
        .map(|i| if i < 24 { Decision::Vm } else { Decision::Nvm })
        .collect();
    let (train, eval) = stratified_split_indices(&labels, 0.25, 7).unwrap();

    assert_eq!(train.len() + eval.len(), 40);
    let train_set: HashSet<_> = train.iter().collect();
    assert!(eval.iter().all(|i| !train_set.contains(i)), "disjoint");

    let eval_vm = eval.iter().filter(|&&i| labels[i] == Decision::Vm).count();
    let eval_nvm = eval.len() - eval_vm;
    assert_eq!(eval_vm, 6, "ceil(24 * 0.25)");
    assert_eq!(eval_nvm, 4, "ceil(16 * 0.25)");
}

#[test]
fn stratified_split_is_deterministic_per_seed() {
    let labels: Vec<Decision> = (0..30)
        .map(|i| if i % 2 == 0 { Decision::Vm } else { Decision::Nvm })
        .collect();
    let a = stratified_split_indices(&labels, 0.2, 1).unwrap();
    let b = stratified_split_indices(&labels, 0.2, 1).unwrap();
    assert_eq!(a, b);
    let c = stratified_split_indices(&labels, 0.2, 2).unwrap();
    assert_ne!(a.1, c.1, "a different seed draws a different holdout");
}

#[test]
fn degenerate_splits_are_rejected() {
    let labels = vec![Decision::Vm];
    assert!(stratified_split_indices(&[], 0.2, 0).is_err());
    assert!(stratified_split_indices(&labels, 0.0, 0).is_err());
    assert!(stratified_split_indices(&labels, 1.0, 0).is_err());
}

#[test]
fn mono_probe_tells_channel_counts_apart() {
    let dir = tempdir().unwrap();

    let stereo_path = dir.path().join("stereo.wav");
    let call = generate_call(&SynthSpec::default(), 0).unwrap();
    vmd_core::audio::write_wav(&stereo_path, &call.stereo).unwrap();
    assert!(!wav_is_mono(&stereo_path).unwrap());

    let mono_path = dir.path().join("mono.wav");
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: 8000,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(&mono_path, spec).unwrap();
    for i in 0..8000i32 {
        writer.write_sample((i % 100) as i16).unwrap();
    }
    writer.finalize().unwrap();
    assert!(wav_is_mono(&mono_path).unwrap());

    assert!(wav_is_mono(&dir.path().join("absent.wav")).is_err());
}
