import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opporelay import _kernels_py as py
from opporelay import kernels
from opporelay._parallel import map_trials, worker_count
from opporelay.core import FadingBlock, sample_gamma, sample_xi
from opporelay.scheduler import evaluate_phase1, run_phase2, schedule_phase1

try:
    from opporelay import _kernels as cy
except ImportError:  # pragma: no cover - extension not built
    cy = None

needs_compiled = pytest.mark.skipif(cy is None, reason="compiled extension not built")


def test_backend_named():
    assert kernels.BACKEND in ("compiled", "python")
    if cy is not None and not os.environ.get("OPPORELAY_PURE"):
        assert kernels.BACKEND == "compiled"


def test_pure_path_forced():
    code = "import opporelay.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, OPPORELAY_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
@settings(max_examples=200, deadline=None)
@given(st.integers(1, 40), st.integers(1, 10), st.integers(0, 2**32), st.floats(0.01, 100.0))
def test_phase_kernels_agree(n, m, seed, rho):
    g = sample_gamma(n, m, seed, 0)
    x = sample_xi(n, m, seed, 0)
    a_cy, d_cy = cy.phase1_prefix_bits(g, 1 / rho)
    a_py, d_py = py.phase1_prefix_bits(g, 1 / rho)
    assert np.array_equal(a_cy, a_py) and np.array_equal(d_cy, d_py)
    assert np.array_equal(cy.phase2_prefix_bits(x, 1 / rho), py.phase2_prefix_bits(x, 1 / rho))


@needs_compiled
@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10), st.integers(1, 4), st.integers(0, 2**32), st.floats(0.1, 100.0))
def test_genie_kernels_agree(n, m, seed, rho):
    m = min(m, n)
    g = np.ascontiguousarray(sample_gamma(n, m, seed, 0))
    assert cy.genie_full(g, 1 / rho) == py.genie_full(g, 1 / rho)
    assert cy.genie_grouped(g, 1 / rho) == py.genie_grouped(g, 1 / rho)


@pytest.mark.parametrize("impl", [py] + ([cy] if cy is not None else []), ids=lambda m: m.__name__)
@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 30), m=st.integers(1, 8), seed=st.integers(0, 2**32), rho=st.floats(0.05, 50.0))
def test_prefix_bits_match_scheduler(impl, n, m, seed, rho):
    g = sample_gamma(n, m, seed, 1)
    x = sample_xi(n, m, seed, 1)
    all_bits, distinct_bits = impl.phase1_prefix_bits(g, 1 / rho)
    p2 = impl.phase2_prefix_bits(x, 1 / rho)
    for k in range(1, m + 1):
        b = FadingBlock(g[:, :k], x[:k])
        r1 = evaluate_phase1(b, schedule_phase1(b), rho)
        assert all_bits[k - 1] == r1.delivered_bits
        assert distinct_bits[k - 1] == r1.distinct_only_bits
        assert p2[k - 1] == run_phase2(b, rho).delivered_bits


def test_readonly_inputs_accepted():
    g = sample_gamma(6, 2, 0, 0)
    g.setflags(write=False)
    assert kernels.phase1_prefix_bits(g, 0.1)[0].shape == (2,)
    assert kernels.genie_full(np.ascontiguousarray(g), 0.1) in (True, False)


class TestParallel:
    def test_order_independent_of_threads(self):
        f = lambda t: [t, t * t]  # noqa: E731
        ref = map_trials(f, 37, threads=1)
        for k in (2, 3, 8, 64):
            assert np.array_equal(map_trials(f, 37, threads=k), ref)
        assert ref[:, 0].tolist() == list(range(37))

    def test_env(self, monkeypatch):
        monkeypatch.setenv("OPPORELAY_THREADS", "3")
        assert worker_count() == 3
        monkeypatch.setenv("OPPORELAY_THREADS", "zero")
        with pytest.raises(ValueError):
            worker_count()
        monkeypatch.delenv("OPPORELAY_THREADS")
        assert worker_count() >= 1

    def test_rejects_no_trials(self):
        with pytest.raises(ValueError):
            map_trials(lambda t: t, 0)
