import os
import time

import pytest

from pydiffau import Executor, ThreadManager, resolve_jobs


def test_resolve_jobs():
    assert resolve_jobs(None) == resolve_jobs(0) == (os.cpu_count() or 1)
    assert resolve_jobs(3) == 3
    assert resolve_jobs(-2) == 1


def test_map_ordered_keeps_input_order():
    def slow_square(x):
        time.sleep(0.01 * (5 - x))
        return x * x

    with ThreadManager().create_new_executor(max_workers=4, thread_name="test") as executor:
        assert isinstance(executor, Executor)
        assert executor.map_ordered(slow_square, range(5)) == [0, 1, 4, 9, 16]
        assert executor.futures == []


def test_map_ordered_reraises():
    def fail_on_two(x):
        if x == 2:
            raise ValueError("two")
        return x

    with ThreadManager().create_new_executor(max_workers=2) as executor:
        with pytest.raises(ValueError):
            executor.map_ordered(fail_on_two, range(4))


def test_sessions_are_distinct():
    manager = ThreadManager()
    first, second = manager.generate_thread_session(), manager.generate_thread_session()
    assert first != second
    with manager.create_new_executor(max_workers=1, session_id="abc") as executor:
        assert executor.session_id == "abc"
        assert executor.wait_for_futures() is None
