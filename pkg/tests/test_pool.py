"""Tests for cascadelab.pool — ordered parallel map."""

import time

from cascadelab import log as _log
from cascadelab.pool import ordered_map


class TestOrderedMap:

    def test_results_in_item_order(self):
        def slow_square(x):
            time.sleep(0.001 * (10 - x))
            return x * x
        assert ordered_map(slow_square, range(10), threads=4) == [x * x for x in range(10)]

    def test_same_result_for_any_thread_count(self):
        items = list(range(37))
        one = ordered_map(lambda x: 3 * x + 1, items, threads=1)
        many = ordered_map(lambda x: 3 * x + 1, items, threads=8)
        assert one == many

    def test_empty_input(self):
        assert ordered_map(lambda x: x, [], threads=4) == []

    def test_progress_messages(self, capsys):
        _log.configure(verbose=2)
        ordered_map(lambda x: x, range(20), threads=1, label="Zn")
        err = capsys.readouterr().err
        assert "Zn: 20/20" in err
        _log.configure(verbose=1)
