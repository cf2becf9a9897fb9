"""Fitness terms, composition variants, and whole-organism evaluation."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from foragerlab import fitness as fit
from foragerlab import task
from foragerlab.physics import params
from foragerlab.physics.world import SpawnOverlap
from tests.conftest import KinematicStub, TeleportStub, UnstableStub


# -- per-target approach product ---------------------------------------------------

def test_w_s_examples():
    assert fit.w_s([]) == 1.0
    assert fit.w_s([0.1, 0.1]) == pytest.approx(1.21, abs=1e-12)
    assert fit.w_s([0.5]) == pytest.approx(1.5, abs=1e-12)


def test_w_s_clamps_catastrophic_retreat():
    assert fit.w_s([-5.0]) == pytest.approx(0.01, abs=1e-12)
    assert fit.w_s([-5.0, -5.0]) == pytest.approx(0.0001, abs=1e-12)


def test_w_s_fixed_sum_maximized_by_constant_sequence():
    even = fit.w_s([0.1, 0.1])
    assert fit.w_s([0.15, 0.05]) < even
    assert fit.w_s([0.2, 0.0]) < even


@given(st.lists(st.floats(-0.4, 0.4), min_size=2, max_size=12),
       st.floats(0.01, 0.5))
@settings(max_examples=300, deadline=None)
def test_w_s_am_gm(perturbation, total):
    """Fixed step count and fixed total approach: constant wins."""
    n = len(perturbation)
    mean_p = sum(perturbation) / n
    deltas = [total / n + (p - mean_p) for p in perturbation]
    assert fit.w_s(deltas) <= fit.w_s([total / n] * n) + 1e-9


def test_w_s_halved_examples():
    assert fit.w_s_halved([0.2], 1) == pytest.approx(1.1, abs=1e-12)
    assert fit.w_s_halved([0.2], 2) == pytest.approx(1.05, abs=1e-12)
    assert fit.w_s_halved([0.2], 30) == pytest.approx(1.0, abs=1e-6)
    assert fit.w_s_halved([], 1) == 1.0


# -- locomotion term ------------------------------------------------------------------

def test_w_l_examples():
    assert fit.w_l((0, 0, 0), (0.5, 0, 0.3)) == pytest.approx(50.0)
    assert fit.w_l((0, 0, 0), (2.3, 0, 0)) == 100.0
    assert fit.w_l((1, 2, 0.1), (1, 2, 0.1)) == 0.0


def test_w_l_ignores_vertical_motion():
    assert fit.w_l((0, 0, 0), (0, 0, 5.0)) == 0.0
    assert fit.w_l((0, 0, 0.2), (0.3, 0.4, 1.7)) == pytest.approx(50.0)


# -- reach bonus -------------------------------------------------------------------------

def test_w_r_zero_cases():
    assert fit.w_r(0, 1000) == 0.0
    assert fit.w_r(3, 0) == 0.0


def test_w_r_exponential_approximation():
    # S=1, T=3000 sits within 2% of e^10; S=2 within 10% of 2e20
    assert abs(fit.w_r(1, 3000) - math.e ** 10) / math.e ** 10 < 0.02
    assert abs(fit.w_r(2, 3000) - 2 * math.e ** 20) / (2 * math.e ** 20) < 0.10
    assert abs(fit.w_r(2, 100_000) - 2 * math.e ** 20) / (2 * math.e ** 20) < 0.01


def test_w_r_against_high_precision():
    import mpmath

    mpmath.mp.dps = 50
    for s, t in [(1, 3000), (2, 3000), (3, 1768), (5, 12345), (9, 1001)]:
        exact = mpmath.mpf(s) * (1 + mpmath.mpf(10 * s) / t) ** t
        assert fit.w_r(s, t) == pytest.approx(float(exact), rel=1e-9), (s, t)


def test_w_r_monotone_in_sources():
    for t in (1000, 3000, 50_000):
        values = [fit.w_r(s, t) for s in range(6)]
        assert all(b > a for a, b in zip(values, values[1:]))


# -- composition ------------------------------------------------------------------------------

def test_compose_no_movement_is_zero():
    assert fit.compose("A", [], (0, 0, 0), (0, 0, 0), 0, 1500) == 0.0


def test_compose_variant_b_skips_first_target():
    series = [[0.5, 0.5, 0.5]]  # only target 1 approached
    p0, pf = (0, 0, 0), (0.7, 0, 0)
    b = fit.compose("B", series, p0, pf, 0, 1500)
    assert b == pytest.approx(fit.w_l(p0, pf))  # product term collapses to w_l * 1


def test_compose_variant_b_equals_a_when_first_series_empty():
    series = [[], [0.1, 0.2], [0.05]]
    p0, pf = (0, 0, 0), (0.4, 0.3, 0)
    a = fit.compose("A", series, p0, pf, 2, 900)
    b = fit.compose("B", series, p0, pf, 2, 900)
    assert a == b


def test_compose_variant_c_counts_sources():
    assert fit.compose("C", [[0.1]] * 7, (0, 0, 0), (9, 9, 0), 7, 100) == 7.0
    assert fit.compose("C", [], (0, 0, 0), (0, 0, 0), 0, 100) == 0.0


def test_compose_unknown_variant():
    with pytest.raises(ValueError):
        fit.compose("D", [], (0, 0, 0), (0, 0, 0), 0, 100)


def test_compose_reaching_dominates_shaping():
    # equal approach products, same total time, one more target reached:
    # the bonus must dominate any shaping difference
    series = [[0.06] * 100]
    p0, pf = (0, 0, 0), (6.0, 0, 0)
    one = fit.compose("A", series, p0, pf, 1, 3000)
    two = fit.compose("A", series, p0, pf, 2, 3000)
    assert two > one * 100


def test_compose_halves_by_target_ordinal():
    p0, pf = (0, 0, 0), (2.0, 0, 0)
    series = [[0.2], [0.2]]
    got = fit.compose("A", series, p0, pf, 2, 10_000)
    want = 100.0 * (1 + 0.2 / 2) * (1 + 0.2 / 4) + fit.w_r(2, 10_000)
    assert got == pytest.approx(want, rel=1e-12)


# -- geometric mean ---------------------------------------------------------------------------------

def test_w_bar_examples():
    assert fit.w_bar([1, 1, 1, 16]) == pytest.approx(2.0, rel=1e-12)
    assert fit.w_bar([7.3]) == pytest.approx(7.3, rel=1e-12)
    assert fit.w_bar([4.0, 0.0, 9.0]) == 0.0
    assert fit.w_bar([]) == 0.0


def test_w_bar_permutation_invariant():
    a = fit.w_bar([3.0, 5.0, 11.0, 0.5])
    b = fit.w_bar([11.0, 0.5, 3.0, 5.0])
    assert a == pytest.approx(b, rel=1e-12)


@given(st.lists(st.floats(0.01, 100.0), min_size=1, max_size=8),
       st.floats(0.1, 10.0))
@settings(max_examples=200, deadline=None)
def test_w_bar_scale_consistent(ws, c):
    assert fit.w_bar([c * w for w in ws]) == pytest.approx(
        c * fit.w_bar(ws), rel=1e-9)


def test_approach_deltas_sign():
    # positive when the organism gets closer
    assert fit.approach_deltas([10.0, 9.5, 9.4]) == pytest.approx([0.5, 0.1])
    assert fit.approach_deltas([5.0]) == []


# -- whole evaluation ---------------------------------------------------------------------------------

def _plan(**kw):
    spec = task.PlanSpec(**{"directions": 1, "noise_p": 0.0, "seq_len": 3,
                            "timer": 30.0, **kw})
    return task.make_plan(spec, 0)


def test_evaluate_invalid_scores_zero_without_simulation(valid_organism):
    import foragerlab.genome as gen

    single = gen.Genome(
        blocks=[gen.BlockGene(parent=-1, dims=[0.4, 0.3, 0.2],
                              joint_anchor=[0.5, 0.5], joint_axis=[0, 0, 1],
                              joint_limits=[-1.0, 1.0], max_torque=10.0)],
        neurons=[gen.NeuronGene("Constant", [0.0, 0, 0],
                                [gen.InputGene("const", 0, 0.0)] * 3)],
        wiring=[])
    organism = gen.develop(single)

    def exploding_factory(*a, **k):
        raise AssertionError("must not simulate an invalid organism")

    bd = fit.evaluate(organism, _plan(), world_factory=exploding_factory)
    assert bd.w_bar == 0.0
    assert not bd.valid
    assert "OnlyOneBlock" in bd.reasons
    assert bd.sources_total == 0


def test_evaluate_spawn_overlap_scores_zero(valid_organism):
    def overlapping_factory(*a, **k):
        raise SpawnOverlap("probe")

    bd = fit.evaluate(valid_organism, _plan(), world_factory=overlapping_factory)
    assert bd.w_bar == 0.0
    assert not bd.valid
    assert "InitialInterpenetration" in bd.reasons


def test_evaluate_unstable_zeroes_and_flags(valid_organism):
    bd = fit.evaluate(valid_organism, _plan(), world_factory=UnstableStub)
    assert bd.w_bar == 0.0
    assert bd.unstable
    assert "Unstable" in bd.reasons


def test_evaluate_kinematic_closed_form(valid_organism):
    """Constant-speed walker: every term has a pencil-and-paper value."""
    bd = fit.evaluate(valid_organism, _plan(), world_factory=KinematicStub)
    assert bd.valid and not bd.unstable
    assert bd.sources_total == 3
    assert len(bd.steps) == 1
    step = bd.steps[0]

    pace = 3.0 * params.DT                      # 0.06 m per step
    n_absorb = 134                              # first step with d <= 2 from 10
    assert step.sources_reached == 3
    total = 3 * n_absorb + (1500 - n_absorb)    # timer runs out after the last
    assert step.steps == total

    shaped = 100.0
    for s in (1, 2, 3):
        shaped *= (1.0 + pace / 2 ** s) ** n_absorb
    want = shaped + fit.w_r(3, total)
    assert step.w == pytest.approx(want, rel=1e-9)
    assert bd.w_bar == pytest.approx(want, rel=1e-9)


def test_evaluate_teleport_reach_bonus_exact(valid_organism):
    # timer of 59.96 s: 2998 steps, so each episode totals exactly 3000
    bd = fit.evaluate(valid_organism, _plan(timer=59.96),
                      world_factory=TeleportStub)
    for step in bd.steps:
        assert step.steps == 3000
        assert step.w_r == pytest.approx(fit.w_r(3, 3000), rel=1e-12)
        assert step.w_r == pytest.approx(3 * (1 + 30 / 3000) ** 3000, rel=1e-9)


def test_evaluate_variant_c_sums_sources(valid_organism):
    bd = fit.evaluate(valid_organism, _plan(directions=4, variant="C"),
                      world_factory=KinematicStub)
    assert bd.w_bar == 12.0
    assert bd.sources_total == 12


def test_evaluate_deterministic(valid_organism):
    a = fit.evaluate(valid_organism, _plan(directions=2),
                     world_factory=KinematicStub)
    b = fit.evaluate(valid_organism, _plan(directions=2),
                     world_factory=KinematicStub)
    assert a.to_dict() == b.to_dict()


def test_breakdown_serialization_shape(valid_organism):
    bd = fit.evaluate(valid_organism, _plan(directions=2),
                      world_factory=KinematicStub)
    d = bd.to_dict()
    assert set(d) == {"w_bar", "sources_total", "valid", "unstable",
                      "reasons", "steps"}
    assert len(d["steps"]) == 2
    for s in d["steps"]:
        assert set(s) == {"w", "w_l", "w_r", "w_s", "sources_reached", "steps"}
        assert len(s["w_s"]) == 3


def test_evaluate_geometric_mean_over_steps(valid_organism):
    bd = fit.evaluate(valid_organism, _plan(directions=4),
                      world_factory=KinematicStub)
    per_step = [s.w for s in bd.steps]
    assert bd.w_bar == pytest.approx(fit.w_bar(per_step), rel=1e-12)


def test_evaluate_genome_matches_evaluate(valid_genome, valid_organism):
    a = fit.evaluate_genome(valid_genome, _plan(), world_factory=KinematicStub)
    b = fit.evaluate(valid_organism, _plan(), world_factory=KinematicStub)
    assert a.to_dict() == b.to_dict()


def test_degenerate_development_scores_zero(monkeypatch, valid_genome):
    import foragerlab.genome as gen

    def refuse(genome):
        raise gen.Degenerate("probe")

    monkeypatch.setattr(fit, "develop", refuse)
    bd = fit.evaluate_genome(valid_genome, _plan(), world_factory=KinematicStub)
    assert bd.w_bar == 0.0
    assert not bd.valid
    assert bd.reasons == ["probe"]
