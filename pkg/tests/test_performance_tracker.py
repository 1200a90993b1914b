import logging

from xy_correlators.performance_tracker import PerformanceTracker


def test_performance_tracker_summary():
    tracker = PerformanceTracker()
    start = tracker.start_stage('static')
    tracker.record_stage('static', start, rows=4, est_error=1e-10)
    tracker.record_stage('driven', tracker.start_stage('driven'), rows=2, est_error=1e-3, converged=False)
    summary = tracker.get_session_summary()
    assert summary['total_rows'] == 6
    assert summary['worst_est_error'] == 1e-3
    assert summary['converged'] is False
    assert summary['total_stages'] == 2


def test_start_stage_logs_stage_name(caplog):
    caplog.set_level(logging.DEBUG, logger='xy_correlators.performance_tracker')
    PerformanceTracker().start_stage('kz')
    assert 'Stage kz started' in caplog.text
