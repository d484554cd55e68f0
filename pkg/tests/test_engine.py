import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from casinject import engine
from casinject import synthetic as syn
from casinject.attacker import AttackerSite, AttackStrategy, SiteSelector
from casinject.cas_core import AdvisoryKind, Sense
from casinject.geometry import FT_PER_NM
from casinject.engine import AttackedTrajectory, ResponseModel, ReturnBehavior, RunMetrics

DESCENT = syn.head_on_descent("d", 10000, 4000, 200)
LEVEL = syn.overflight("l", 8000, 200)
HIT = AttackStrategy(0.3, 24.0, SiteSelector.MID)

strategies = st.builds(
    AttackStrategy,
    crossing_point=st.floats(0, 1),
    vrate=st.floats(-84, 84),
    site=st.sampled_from(list(SiteSelector)),
)


@pytest.mark.parametrize(
    "metrics, expected",
    [((0, 0, 0, 0, 0), 0), ((10, 5, 3, 3, 2), 70), ((30, 10, 5, 5, 0), 100)],
)
def test_cost_examples(metrics, expected):
    assert engine.cost(RunMetrics(*metrics)) == expected


@given(st.lists(st.integers(0, 10_000), min_size=5, max_size=5), st.integers(0, 4))
def test_cost_linear_increments(vals, which):
    m = RunMetrics(*vals)
    bumped = list(vals)
    bumped[which] += 1
    assert engine.cost(RunMetrics(*bumped)) - engine.cost(m) == (1, 2, 5, 5, 10)[which]


def test_unreachable_run_is_clean():
    high = syn.overflight("h", 8000, 150)
    far = AttackerSite(60 * FT_PER_NM, 0.0)
    m, attacked = engine.run(high, HIT, site=far)
    assert engine.cost(m) == 0 and m == RunMetrics()
    np.testing.assert_array_equal(attacked.alt, high.alt)
    assert attacked.timeline() == [["none", 150]]


def test_head_on_descent_fixture():
    m, attacked = engine.run(DESCENT, HIT)
    assert m.l_RA >= 5
    assert m.t_VR > 0
    assert m.max_abs_deviation > 0
    assert len(attacked.alt) == len(DESCENT)


def _ra_steps(attacked, sense):
    return sum(1 for a in attacked.advisories[:-1] if a.kind is AdvisoryKind.RA and a.sense is sense)


def test_level_climb_ra_holds_new_level():
    # search a few strategies for a single climb RA that ends before the run does
    for cp in np.linspace(0, 1, 21):
        for v in (-40.0, -26.0, -10.0, 10.0, 26.0, 40.0):
            m, attacked = engine.run(LEVEL, AttackStrategy(float(cp), v, SiteSelector.MID))
            if m.ra_episodes == 1 and attacked.advisories[-1].kind is not AdvisoryKind.RA:
                d = _ra_steps(attacked, Sense.CLIMB)
                if d and not _ra_steps(attacked, Sense.DESCEND):
                    assert attacked.alt[-1] == pytest.approx(LEVEL.alt[-1] + 25.0 * d)
                    return
    pytest.fail("no single climb RA found on the level fixture")


def test_descent_resumes_planned_rate():
    m, attacked = engine.run(DESCENT, HIT)
    last_ra = max(i for i, a in enumerate(attacked.advisories) if a.kind is AdvisoryKind.RA)
    planned = np.diff(DESCENT.alt)
    flown = np.diff(attacked.alt)
    np.testing.assert_allclose(flown[last_ra + 1:], planned[last_ra + 1:])


def test_hold_new_level_override():
    resp = ResponseModel(return_behavior=ReturnBehavior.HOLD_NEW_LEVEL)
    _, attacked = engine.run(DESCENT, HIT, resp)
    last_ra = max(i for i, a in enumerate(attacked.advisories) if a.kind is AdvisoryKind.RA)
    assert np.all(np.diff(attacked.alt)[last_ra + 1:] == 0)


def test_rate_follows_ra_next_step():
    _, attacked = engine.run(DESCENT, HIT)
    flown = np.diff(attacked.alt)
    for i, adv in enumerate(attacked.advisories[:-1]):
        if adv.kind is AdvisoryKind.RA:
            assert flown[i] == adv.target_vrate


def test_response_delay_shifts_manoeuvre():
    _, now = engine.run(DESCENT, HIT)
    _, late = engine.run(DESCENT, HIT, ResponseModel(response_delay=5))
    first = next(i for i, a in enumerate(late.advisories) if a.kind is AdvisoryKind.RA)
    np.testing.assert_allclose(np.diff(late.alt)[: first + 5], np.diff(DESCENT.alt)[: first + 5])
    assert not np.array_equal(now.alt, late.alt)


def test_response_model_validation():
    with pytest.raises(ValueError):
        ResponseModel(ra_follow_vrate=0)
    with pytest.raises(ValueError):
        ResponseModel(response_delay=-1)


@pytest.mark.parametrize(
    "dev, expected",
    [
        ([0, 0, 0], (0.0, 0.0)),
        ([0, 100, 300, 500, 500], (500.0, 500.0)),
        ([0, -200, -500, -800], (800.0, -800.0)),
        ([0, 300, -400, 100], (400.0, -400.0)),
    ],
)
def test_deviation_stats(dev, expected):
    orig = np.full(len(dev), 8000.0)
    attacked = AttackedTrajectory(orig, orig + np.array(dev, float))
    assert engine.deviation_stats(attacked) == expected


@settings(max_examples=60, deadline=None)
@given(s=strategies)
def test_metric_invariants(s):
    for traj in (DESCENT, LEVEL):
        m, attacked = engine.run(traj, s)
        n = len(traj)
        assert m.l_RA <= m.t_RA <= n
        assert m.t_VR <= m.t_RA
        assert max(m.t_PA, m.t_TA) <= n
        assert len(attacked.alt) == n
        assert m.max_abs_deviation == pytest.approx(np.max(np.abs(attacked.deviation)))
        assert sum(c for _, c in attacked.timeline()) == n


@settings(max_examples=40, deadline=None)
@given(s=strategies)
def test_run_deterministic(s):
    a = engine.run(DESCENT, s)
    b = engine.run(DESCENT, s)
    assert a[0] == b[0]
    np.testing.assert_array_equal(a[1].alt, b[1].alt)
    assert a[1].advisories == b[1].advisories


@settings(max_examples=40, deadline=None)
@given(s=strategies, which=st.sampled_from(["d", "l", "c"]))
def test_reach_mask_is_exact(monkeypatch_module, s, which):
    traj = {"d": DESCENT, "l": LEVEL, "c": syn.climb_out("c", 4000, 11000, 170, heading_deg=250)}[which]
    masked = engine.run(traj, s)
    with monkeypatch_module.context() as mp:
        mp.setattr(engine, "_reach_mask", lambda t, site, rate: np.ones(len(t), bool))
        full = engine.run(traj, s)
    assert masked[0] == full[0]
    assert masked[1].advisories == full[1].advisories


@pytest.fixture(scope="module")
def monkeypatch_module():
    mp = pytest.MonkeyPatch()
    yield mp
    mp.undo()


def test_run_to_dict():
    m, attacked = engine.run(DESCENT, HIT)
    d = engine.run_to_dict("d", HIT, m, attacked)
    assert d["cost"] == engine.cost(m)
    assert d["strategy"] == HIT.to_dict()
    assert sum(c for _, c in d["timeline"]) == len(DESCENT)
