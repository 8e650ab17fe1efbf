import pytest

from lcnorm.bench import interleaved_medians


@pytest.fixture
def timing_medians():
    """Median wall time in ns per callable, repetitions interleaved so slow
    machine drift cannot bias the comparison."""

    def run(fns, reps: int = 7, warmup: int = 2):
        return interleaved_medians(fns, reps, warmup)

    return run
