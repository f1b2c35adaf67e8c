"""
Test Metrics Collection Functionality

Covers the in-memory collector used by verification runs:
1. Timings recorded directly and through the timed() context manager
2. Counters per section
3. Error tracking when a timed block raises
4. Summary generation and the timing snapshot embedded in reports
"""

import pytest

from services import metrics
from services.errors import ResourceLimitError


def test_timing_metrics():
    """Test timing statistics per key"""
    print("\n" + "="*70)
    print("TEST 1: Timing Metrics")
    print("="*70)

    metrics._metrics_collector = None
    collector = metrics.get_metrics_collector()

    metrics.record_timing("pquotient", "class_2", 10.0)
    metrics.record_timing("pquotient", "class_2", 30.0)
    metrics.record_timing("sl2", "sylow_bfs_M3", 250.5)

    current = collector.get_metrics()
    stats = current["timings"]["pquotient.class_2"]
    print(f"\n📈 pquotient.class_2: {stats}")

    assert stats["count"] == 2
    assert stats["min_ms"] == 10.0
    assert stats["max_ms"] == 30.0
    assert stats["avg_ms"] == 20.0
    assert stats["total_ms"] == 40.0
    assert "sl2.sylow_bfs_M3" in current["timings"]

    print("\n✅ Test Passed: Timings aggregated per key")


def test_timed_context_manager():
    """Test timed() records a duration for the enclosed block"""
    print("\n" + "="*70)
    print("TEST 2: timed() Context Manager")
    print("="*70)

    metrics._metrics_collector = None

    with metrics.timed("classgroup", "structures"):
        total = sum(range(1000))

    timings = metrics.get_timings()
    print(f"\n⏱  Timings: {timings}")

    assert total == 499500
    assert "classgroup.structures" in timings
    assert timings["classgroup.structures"] >= 0

    print("\n✅ Test Passed: Block duration recorded")


def test_counter_metrics():
    """Test counters accumulate per section"""
    print("\n" + "="*70)
    print("TEST 3: Counter Metrics")
    print("="*70)

    metrics._metrics_collector = None

    metrics.record_counter("pgen", "nodes_visited")
    metrics.record_counter("pgen", "nodes_visited")
    metrics.record_counter("classgroup", "structures_computed", 35)

    counters = metrics.get_metrics()["counters"]
    print(f"\n🔢 Counters: {counters}")

    assert counters["pgen.nodes_visited"] == 2
    assert counters["classgroup.structures_computed"] == 35

    print("\n✅ Test Passed: Counters accumulated")


def test_error_metrics():
    """Test a raising block is timed and its error type counted"""
    print("\n" + "="*70)
    print("TEST 4: Error Metrics")
    print("="*70)

    metrics._metrics_collector = None

    with pytest.raises(ResourceLimitError):
        with metrics.timed("sl2", "normal_closure"):
            raise ResourceLimitError("matrix group order", 3**10, 3**11)

    current = metrics.get_metrics()
    print(f"\n❌ Errors: {current['errors']}")

    assert current["errors"]["total"] == 1
    assert current["errors"]["by_type"]["sl2/ResourceLimitError"] == 1
    assert current["timings"]["sl2.normal_closure"]["count"] == 1

    print("\n✅ Test Passed: Errors tracked by type")


def test_metrics_summary():
    """Test human-readable summary"""
    print("\n" + "="*70)
    print("TEST 5: Metrics Summary")
    print("="*70)

    metrics._metrics_collector = None

    metrics.record_timing("pgen", "descend", 1200.0)
    metrics.record_counter("pgen", "nodes_visited", 4)

    summary = metrics.get_summary()
    print("\n" + summary)

    assert "TIMING SUMMARY" in summary
    assert "pgen.descend" in summary
    assert "pgen.nodes_visited: 4" in summary

    print("\n✅ Test Passed: Summary generated")


def main():
    print("\n" + "="*70)
    print("🎯 METRICS COLLECTION TESTING - SCHUR-SIGMA TOOLKIT")
    print("="*70)

    try:
        test_timing_metrics()
        test_timed_context_manager()
        test_counter_metrics()
        test_error_metrics()
        test_metrics_summary()

        print("\n" + "="*70)
        print("✅ ALL METRICS TESTS PASSED")
        print("="*70)

    except Exception as e:
        print(f"\n❌ Test failed: {e}")
        import traceback
        traceback.print_exc()


if __name__ == "__main__":
    main()
