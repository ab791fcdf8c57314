use vmd_core::model::Decision;

use super::*;

#[test]
fn fresh_collector_reports_zeros() {
    let report = StatsCollector::new().report();
    assert_eq!(report.sessions_total, 0);
    assert_eq!(report.sessions_active, 0);
    assert_eq!(report.decisions_vm, 0);
    assert_eq!(report.decisions_nvm, 0);
    assert_eq!(report.failures, 0);
    assert_eq!(report.p50_processing_ms, 0.0);
    assert_eq!(report.p95_processing_ms, 0.0);
    assert_eq!(report.throughput_per_s, 0.0);
}

#[test]
fn nearest_rank_percentiles() {
    let sorted = [1000, 2000, 3000, 4000];
    assert_eq!(percentile_ms(&sorted, 0.50), 2.0);
    // ceil(0.95 * 4) = 4 -> the maximum
    assert_eq!(percentile_ms(&sorted, 0.95), 4.0);
    assert_eq!(percentile_ms(&[7000], 0.50), 7.0);
    assert_eq!(percentile_ms(&[], 0.50), 0.0);
}

#[test]
fn admission_caps_at_max() {
    let stats = StatsCollector::new();
    assert!(stats.try_admit(2));
    assert!(stats.try_admit(2));
    assert!(!stats.try_admit(2));
    stats.session_closed();
    assert!(stats.try_admit(2));

    let report = stats.report();
    assert_eq!(report.sessions_total, 3);
    assert_eq!(report.sessions_active, 2);
}

#[test]
fn decisions_split_by_class() {
    let stats = StatsCollector::new();
    stats.record_decision(Decision::Vm, 4000);
    stats.record_decision(Decision::Vm, 8000);
    stats.record_decision(Decision::Nvm, 6000);
    stats.record_failure();

    let report = stats.report();
    assert_eq!(report.decisions_vm, 2);
    assert_eq!(report.decisions_nvm, 1);
    assert_eq!(report.failures, 1);
    assert_eq!(report.p50_processing_ms, 6.0);
    assert_eq!(report.p95_processing_ms, 8.0);
    assert!(report.throughput_per_s > 0.0);
}
