from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import cascade as cascade_oracle, water_level
from slicesim import kernels
from slicesim.domain import SNssai
from slicesim.errors import UnknownSlice, ValidationError
from slicesim.scheduler import (
    Allocation, ChannelModel, DemandEntry, DemandVector, SliceConfig, SliceSchedule, allocate,
    intra_slice_maxmin, quantize, quantize_arrays,
)

HI, LO = SNssai(1, 1), SNssai(1, 2)

# frozen from the exact oracles in oracles.py
BG_SHARE_237 = float(water_level(Fraction("237.53"), [Fraction(4)] * 124)[0])
EPS_FIT = 0.03073
C2 = 337.527


def demands(pairs):
    entries = []
    for snssai, values in pairs:
        for v in values:
            entries.append(DemandEntry(len(entries) + 1, f"ue{len(entries)}", snssai, v))
    return DemandVector(entries)


def two_slices(eps=0.0, lo_priority=1):
    return [SliceConfig(HI, 0, eps, "hi"), SliceConfig(LO, lo_priority, 0.0, "lo")]


def test_oracle_values_frozen():
    assert BG_SHARE_237 == pytest.approx(1.9156, abs=5e-5)
    assert float(water_level(Fraction("339.89"), [500] + [4] * 124)[0]) == pytest.approx(2.71912)


def test_maxmin_hand_example():
    assert intra_slice_maxmin(10, [2, 20]) == [2, 8]


def test_maxmin_equal_share():
    out = intra_slice_maxmin(339.89, [500.0] + [4.0] * 124)
    assert np.allclose(out, 339.89 / 125, rtol=0, atol=1e-12)
    assert 339.89 / 125 == pytest.approx(2.7191, abs=1e-4)


def test_maxmin_background_share():
    out = intra_slice_maxmin(237.53, [4.0] * 124)
    assert np.allclose(out, BG_SHARE_237, rtol=1e-12)


def test_maxmin_exact_fractions():
    out = intra_slice_maxmin(Fraction(7), [Fraction(1), Fraction(5), Fraction(5)])
    assert out == [1, 3, 3]
    assert all(isinstance(v, Fraction) for v in out)


def test_fitted_floor_split():
    sched = allocate(ChannelModel(C2), two_slices(EPS_FIT), demands([(HI, [500.0]), (LO, [4.0] * 124)]))
    allocs = [a.alloc for a in sched.allocations]
    assert allocs[0] == pytest.approx(327.15, abs=0.01)
    assert sum(allocs[1:]) == pytest.approx(10.37, abs=0.01)
    assert allocs[1] == pytest.approx(0.0837, abs=1e-4)
    assert np.ptp(allocs[1:]) == 0.0


@pytest.mark.parametrize("bg", [[4.0] * 124, [0.5, 100.0]])
def test_strict_priority_saturated(bg):
    sched = allocate(ChannelModel(C2), two_slices(), demands([(HI, [500.0]), (LO, bg)]))
    allocs = [a.alloc for a in sched.allocations]
    assert allocs[0] == C2
    assert allocs[1:] == [0.0] * len(bg)


def test_priority_satisfied_then_background():
    sched = allocate(ChannelModel(337.53), two_slices(), demands([(HI, [100.0]), (LO, [4.0] * 124)]))
    allocs = [a.alloc for a in sched.allocations]
    assert allocs[0] == 100.0
    assert allocs[1:] == pytest.approx([BG_SHARE_237] * 124, rel=1e-12)


def test_floor_unused_without_lower_demand():
    sched = allocate(ChannelModel(100.0), two_slices(0.5), demands([(HI, [500.0]), (LO, [0.0])]))
    assert sched.allocations[0].alloc == 100.0


def test_unknown_slice():
    with pytest.raises(UnknownSlice):
        allocate(ChannelModel(10.0), two_slices(), demands([(SNssai(9), [1.0])]))


@pytest.mark.parametrize("make", [
    lambda: ChannelModel(0.0),
    lambda: ChannelModel(10.0, 11.0),
    lambda: SliceConfig(HI, 0, 1.0),
    lambda: SliceConfig(HI, 0, -0.1),
    lambda: DemandEntry(1, "u", HI, -1.0),
    lambda: allocate(ChannelModel(1.0), [SliceConfig(HI, 0), SliceConfig(LO, 0)], DemandVector()),
])
def test_invariant_violations(make):
    with pytest.raises(ValidationError):
        make()


def test_quantize_tie_goes_to_lower_session():
    sched = SliceSchedule(0.0, (Allocation(1, 2.7), Allocation(2, 2.7)))
    assert [a.alloc for a in quantize(sched, 1.0).allocations] == [3.0, 2.0]
    swapped = SliceSchedule(0.0, (Allocation(2, 2.7), Allocation(1, 2.7)))
    assert quantize(swapped, 1.0).by_session() == {1: 3.0, 2: 2.0}


def test_quantize_coarse_quantum():
    sched = SliceSchedule(0.0, (Allocation(1, 0.3), Allocation(2, 0.4)))
    assert [a.alloc for a in quantize(sched, 1.0).allocations] == [0.0, 0.0]


def test_unquantized_schedule_untouched():
    sched = allocate(ChannelModel(10.0), two_slices(), demands([(HI, [2.7]), (LO, [2.7])]))
    assert [a.alloc for a in sched.allocations] == [2.7, 2.7]


def test_quantize_largest_unmet_first():
    q = quantize_arrays(np.array([1.5, 1.5]), np.array([1.5, 9.0]), np.array([1, 2]), 1.0)
    assert q.tolist() == [1.0, 2.0]


def test_allocate_applies_channel_quantum():
    sched = allocate(ChannelModel(10.0, 1.0), two_slices(), demands([(HI, [2.5, 2.5]), (LO, [9.0])]))
    assert [a.alloc for a in sched.allocations] == [2.0, 2.0, 6.0]


# --- properties -----------------------------------------------------------------

amounts = st.floats(0.0, 200.0, allow_nan=False)
entries = st.lists(st.tuples(st.integers(0, 2), amounts), max_size=25)


def _run(capacity, rows, eps, kernel):
    rank = np.array([r for r, _ in rows], dtype=np.int64)
    dem = np.array([d for _, d in rows], dtype=np.float64)
    out = np.zeros(len(rows))
    kernel.cascade(capacity, dem, rank, np.array(eps), out)
    return rank, dem, out


@given(st.floats(1.0, 500.0), entries, st.lists(st.floats(0.0, 0.9), min_size=3, max_size=3))
@settings(max_examples=300)
def test_cascade_properties(capacity, rows, eps):
    rank, dem, out = _run(capacity, rows, eps, kernels.active)
    tol = 1e-9 * capacity
    assert out.sum() <= capacity + tol
    assert np.all(out <= dem) and np.all(out >= 0)
    for r in range(3):
        a, d = out[rank == r], dem[rank == r]
        unmet = a < d - tol
        if unmet.any():
            assert a.max() <= a[unmet].min() + tol
    # lower slices exceed their floor share only when everything above is satisfied
    for r in range(1, 3):
        above = rank < r
        if out[above].sum() < dem[above].sum() - tol:
            assert out[rank >= r].sum() <= capacity * max(eps[:r]) + tol


@given(st.floats(1.0, 500.0), entries)
def test_work_conservation(capacity, rows):
    rank, dem, out = _run(capacity, rows, [0.0] * 3, kernels.active)
    assert out.sum() == pytest.approx(min(capacity, dem.sum()), rel=1e-12, abs=1e-9)


@given(st.integers(1, 60), st.lists(st.tuples(st.integers(0, 1), st.integers(0, 30)), max_size=8),
       st.sampled_from([Fraction(0), Fraction(1, 4), Fraction(3, 100)]))
def test_cascade_matches_exact_oracle(capacity, rows, eps):
    rank, dem, out = _run(float(capacity), rows, [float(eps), 0.0, 0.0], kernels.active)
    groups = [[Fraction(d) for r, d in rows if r == k] for k in range(2)]
    expected = cascade_oracle(capacity, groups, [eps, 0])
    for k in range(2):
        assert out[rank == k] == pytest.approx([float(v) for v in expected[k]], abs=1e-9)


@given(st.lists(st.floats(0.0, 50.0), min_size=1, max_size=12), st.floats(0.1, 5.0))
def test_quantize_properties(allocs, quantum):
    alloc = np.array(allocs)
    demand = alloc + 3.0
    q = quantize_arrays(alloc, demand, np.arange(len(allocs)), quantum)
    assert q.sum() <= alloc.sum() + 1e-9
    assert np.all(q <= demand + 1e-9)
    ratio = q / quantum
    assert np.allclose(ratio, np.round(ratio), atol=1e-6)


@pytest.mark.skipif(kernels.compiled_kernels is None, reason="compiled kernels not built")
@given(st.floats(1.0, 500.0), entries, st.lists(st.floats(0.0, 0.9), min_size=3, max_size=3))
@settings(max_examples=300)
def test_backends_bit_identical(capacity, rows, eps):
    _, _, a = _run(capacity, rows, eps, kernels.python_kernels)
    _, _, b = _run(capacity, rows, eps, kernels.compiled_kernels)
    assert a.tobytes() == b.tobytes()


def test_kernel_selection():
    assert kernels.get("python") is kernels.python_kernels
    assert "python" in kernels.available()
    with pytest.raises(ValueError):
        kernels.get("fortran")
