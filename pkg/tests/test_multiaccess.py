import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import average_power
from resbeam.errors import CapacityExceededError, InfeasiblePlanError
from resbeam.multiaccess import (Demand, allocate_fdma, allocate_tdma, plan_to_json,
                                 write_fdma_csv, write_tdma_csv)

demand_sets = st.lists(st.tuples(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0, 1),
                                 st.floats(0.01, 20)), min_size=1, max_size=12)


def _demands(raw):
    return [Demand(f"mt{i}", pr, rq) for i, (pr, rq, _, _) in enumerate(raw)]


def test_single_occupant():
    plan = allocate_tdma([Demand("a", 1, 1)], 1e-3, 1e-4, [(0.8, 10.0)])
    assert plan.slots == [("a", 1e-3)]
    assert plan.avg_powers[0] == pytest.approx((1 - 0.1) * 0.8 * 10.0, rel=1e-15)


def test_symmetric_pair():
    plan = allocate_tdma([Demand("a", 1, 2), Demand("b", 1, 2)], 1.0, 0.1, [(0.9, 5.0)] * 2)
    assert plan.slots[0][1] == plan.slots[1][1]
    assert plan.avg_powers[0] == plan.avg_powers[1]


def test_three_links_against_formula():
    T_f = 1.0
    T_res = 0.1 * T_f / 3
    etas = (0.9, 0.8, 0.7)
    plan = allocate_tdma([Demand(str(i), 1, 1) for i in range(3)], T_f, T_res,
                         [(e, 20.0) for e in etas])
    for (_, t), e, p in zip(plan.slots, etas, plan.avg_powers):
        assert p == pytest.approx(average_power(t, T_res, T_f, e, 20.0), rel=1e-12, abs=0)


def test_short_slot_delivers_nothing():
    plan = allocate_tdma([Demand("a", 1, 1), Demand("b", 1, 1000)], 1.0, 0.01, [(0.9, 1.0)] * 2)
    assert plan.slots[0][1] < 0.01 and plan.avg_powers[0] == 0.0


def test_tdma_errors():
    with pytest.raises(InfeasiblePlanError):
        allocate_tdma([Demand("a", 1, 0)], 1.0, 0.1, [(1, 1)])
    with pytest.raises(InfeasiblePlanError):
        allocate_tdma([Demand("a", 1, 1)], 0.1, 0.1, [(1, 1)])
    with pytest.raises(InfeasiblePlanError):
        allocate_tdma([], 1.0, 0.1, [])


@settings(max_examples=200)
@given(demand_sets, st.floats(1e-6, 10), st.floats(0, 0.99))
def test_tdma_frame_budget_and_formula(raw, T_f, res_frac):
    T_res = res_frac * T_f
    links = [(eta, P) for _, _, eta, P in raw]
    plan = allocate_tdma(_demands(raw), T_f, T_res, links)
    assert math.fsum(t for _, t in plan.slots) <= T_f
    for (_, t), (eta, P), p in zip(plan.slots, links, plan.avg_powers):
        assert p == pytest.approx(max(0.0, average_power(t, T_res, T_f, eta, P)), rel=1e-12, abs=0)


@settings(max_examples=100)
@given(demand_sets, st.data())
def test_raising_priority_never_shrinks_slot(raw, data):
    i = data.draw(st.integers(0, len(raw) - 1))
    boost = data.draw(st.floats(1.0, 10.0))
    before = allocate_tdma(_demands(raw), 1.0, 0.0, [(1, 1)] * len(raw))
    raised = list(raw)
    pr, rq, e, P = raised[i]
    raised[i] = (pr * boost, rq, e, P)
    after = allocate_tdma(_demands(raised), 1.0, 0.0, [(1, 1)] * len(raw))
    assert after.slots[i][1] >= before.slots[i][1] * (1 - 1e-12)


def test_custom_policy_is_clipped():
    plan = allocate_tdma([Demand("a", 1, 1), Demand("b", 1, 1)], 1.0, 0.0, [(1, 1)] * 2,
                         policy=lambda d, T_f: [0.9 * T_f, 0.9 * T_f])
    assert math.fsum(t for _, t in plan.slots) <= 1.0
    assert plan.slots[0][1] == pytest.approx(0.5)


def test_fdma_examples():
    assert allocate_fdma(20.0, [("b0", 1.0)]).bands[0][2] == 20.0
    assert [b[2] for b in allocate_fdma(20.0, [(i, 1.0) for i in range(4)]).bands] == [5.0] * 4
    split = [b[2] for b in allocate_fdma(1.0, [("x", 3.0), ("y", 1.0)]).bands]
    assert split == pytest.approx([0.75, 0.25], rel=1e-15)


def test_fdma_errors():
    with pytest.raises(CapacityExceededError):
        allocate_fdma(1.0, [(i, 1.0) for i in range(5)])
    with pytest.raises(InfeasiblePlanError):
        allocate_fdma(1.0, [("a", 0.0)])


@given(st.floats(1e-3, 1e3), st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=4))
def test_fdma_power_budget(P_total, dem):
    plan = allocate_fdma(P_total, [(i, d) for i, d in enumerate(dem)])
    assert math.fsum(b[2] for b in plan.bands) == pytest.approx(P_total, rel=1e-12)
    assert all(b[2] >= 0 for b in plan.bands)


def test_exports(tmp_path):
    t = allocate_tdma([Demand("a", 1, 1)], 1.0, 0.1, [(0.5, 2.0)])
    f = allocate_fdma(4.0, [("b0", 1.0), ("b1", 3.0)], band_frequencies=[29.75e9, 30.25e9])
    write_tdma_csv(t, tmp_path / "t.csv")
    write_fdma_csv(f, tmp_path / "f.csv")
    assert (tmp_path / "t.csv").read_text().splitlines()[1] == \
        "a,1.00000000000e+00,9.00000000000e-01"
    assert (tmp_path / "f.csv").read_text().splitlines()[2].startswith("b1,3.02500000000e+10,")
    assert json.loads(plan_to_json(f))["P_total"] == 4.0
