import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from causalfalsify.stl import (
    Always,
    And,
    Atom,
    Eventually,
    Interval,
    Not,
    Or,
    ParseError,
    Trace,
    TraceTooShort,
    Until,
    boolean_sat,
    format_formula,
    horizon,
    parse_formula,
    robustness,
)

from randgen import random_formula, random_trace


def x_lt(name, c):
    return Atom({name: -1.0}, c, strict=True)


# --- brute-force reference semantics: direct recursion over grid indices ---

def _grid(iv, i, n, dt):
    ks = []
    for k in range(i, n):
        t = (k - i) * dt
        if t < iv.lo - 1e-9:
            continue
        if iv.hi is not None and t > iv.hi + 1e-9:
            break
        ks.append(k)
    return ks


def ref_rob(f, tr, i=0):
    n, dt = tr.n, tr.dt
    if isinstance(f, Atom):
        return f.constant + sum(c * tr.variables[v][i] for v, c in f.coefficients)
    if isinstance(f, Not):
        return -ref_rob(f.arg, tr, i)
    if isinstance(f, Or):
        return max(ref_rob(f.left, tr, i), ref_rob(f.right, tr, i))
    if isinstance(f, And):
        return min(ref_rob(f.left, tr, i), ref_rob(f.right, tr, i))
    if isinstance(f, Eventually):
        return max((ref_rob(f.arg, tr, k) for k in _grid(f.interval, i, n, dt)), default=-math.inf)
    if isinstance(f, Always):
        return min((ref_rob(f.arg, tr, k) for k in _grid(f.interval, i, n, dt)), default=math.inf)
    if isinstance(f, Until):
        best = -math.inf
        for k in _grid(f.interval, i, n, dt):
            inner = min(ref_rob(f.left, tr, j) for j in range(i, k + 1))
            best = max(best, min(ref_rob(f.right, tr, k), inner))
        return best
    raise TypeError(f)


def ref_sat(f, tr, i=0):
    n, dt = tr.n, tr.dt
    if isinstance(f, Atom):
        g = f.constant + sum(c * tr.variables[v][i] for v, c in f.coefficients)
        return g > 0 if f.strict else g >= 0
    if isinstance(f, Not):
        return not ref_sat(f.arg, tr, i)
    if isinstance(f, Or):
        return ref_sat(f.left, tr, i) or ref_sat(f.right, tr, i)
    if isinstance(f, And):
        return ref_sat(f.left, tr, i) and ref_sat(f.right, tr, i)
    if isinstance(f, Eventually):
        return any(ref_sat(f.arg, tr, k) for k in _grid(f.interval, i, n, dt))
    if isinstance(f, Always):
        return all(ref_sat(f.arg, tr, k) for k in _grid(f.interval, i, n, dt))
    if isinstance(f, Until):
        return any(
            ref_sat(f.right, tr, k) and all(ref_sat(f.left, tr, j) for j in range(i, k + 1))
            for k in _grid(f.interval, i, n, dt)
        )
    raise TypeError(f)


def counter_trace(inputs):
    # Example pseudocode, transcribed independently of the systems module.
    cnt, out = 0, []
    for v in inputs:
        cnt = cnt + 1 if abs(v) < 0.2 else 0
        out.append(cnt)
    return Trace(1.0, {"cnt": out})


# --- parser ---

def test_parse_always_or():
    f = parse_formula("G[0,10](x1 < 0.99 || x2 < 0.99)")
    assert f == Always(Interval(0, 10), Or(x_lt("x1", 0.99), x_lt("x2", 0.99)))


def test_parse_counter_spec():
    f = parse_formula("G[5,5](cnt <= 5)")
    assert f == Always(Interval(5, 5), Atom({"cnt": -1.0}, 5.0, strict=False))


@pytest.mark.parametrize(
    "text, expected",
    [
        ("x > 1", Atom({"x": 1.0}, -1.0, True)),
        ("x >= 1", Atom({"x": 1.0}, -1.0, False)),
        ("2*x - y < 3", Atom({"x": -2.0, "y": 1.0}, 3.0, True)),
        ("x*0.5 + 1 <= y", Atom({"x": -0.5, "y": 1.0}, -1.0, False)),
        ("-x > -2.5e1", Atom({"x": -1.0}, 25.0, True)),
        ("F x > 0", Eventually(Interval(0, None), Atom({"x": 1.0}, 0.0, True))),
        ("G[2,inf] x > 0", Always(Interval(2, None), Atom({"x": 1.0}, 0.0, True))),
        ("x > 0 U[1,2] y > 0", Until(Interval(1, 2), Atom({"x": 1.0}), Atom({"y": 1.0}))),
        ("!!x > 0", Not(Not(Atom({"x": 1.0})))),
    ],
)
def test_parse_table(text, expected):
    assert parse_formula(text) == expected


def test_precedence_and_binds_tighter_and_left_assoc():
    a, b, c, d = (Atom({v: 1.0}) for v in "abcd")
    assert parse_formula("a > 0 || b > 0 && c > 0 || d > 0") == Or(Or(a, And(b, c)), d)


def test_whitespace_and_newlines_insignificant():
    assert parse_formula("G [ 0 , 1 ]\n ( x>0 )") == parse_formula("G[0,1](x > 0)")


@pytest.mark.parametrize(
    "text, line, col",
    [
        ("G[0,3", 1, 6),
        ("x == 2", 1, 3),
        ("x > 0 &&\n  y & 1", 2, 5),
        ("G[3,1](x > 0)", 1, 2),
        ("G[-1,1](x > 0)", 1, 2),
        ("(x > 0", 1, 7),
        ("x > 0 y", 1, 7),
        ("G < 3", 1, 3),
    ],
)
def test_parse_errors_carry_position(text, line, col):
    with pytest.raises(ParseError) as err:
        parse_formula(text)
    assert (err.value.line, err.value.column) == (line, col)


def test_unknown_operator_named():
    with pytest.raises(ParseError, match="unknown operator '=='"):
        parse_formula("x == 2")


@pytest.mark.parametrize(
    "text",
    [
        "G[0,10](x1 < 0.99 || x2 < 0.99)",
        "G[5,5](cnt <= 5)",
        "F[0.5,1.5] !(a > 1e-7 && b <= -3*c) U c >= 0.1 + 0.2",
        "G (v < 120 && w < 4780)",
        "x > 0 U[0,2] F[1,3] y > 0",
    ],
)
def test_parse_print_parse(text):
    f = parse_formula(text)
    assert parse_formula(format_formula(f)) == f


def test_round_trip_random_formulas():
    rng = np.random.default_rng(7)
    for _ in range(300):
        f = random_formula(rng, depth=4, dt=0.25)
        assert parse_formula(format_formula(f)) == f


# --- horizon ---

def test_horizon_examples():
    a = Atom({"x": 1.0})
    assert horizon(a) == 0
    assert horizon(Always(Interval(0, 10), a)) == 10
    assert horizon(Until(Interval(0, 2), a, Eventually(Interval(1, 3), a))) == 5
    assert horizon(Always(Interval(0, None), Eventually(Interval(0, 2), a))) == 2


# --- robustness / boolean semantics ---

def test_atom_robustness_at_time_zero():
    tr = Trace(1.0, {"x": [0.0, 5.0]})
    assert robustness(parse_formula("x < 0.99"), tr) == 0.99
    assert boolean_sat(parse_formula("x < 0.99"), tr)


def test_counter_all_zero_inputs_violates():
    tr = counter_trace([0.0] * 6)
    assert list(tr.variables["cnt"]) == [1, 2, 3, 4, 5, 6]
    req = parse_formula("G[5,5](cnt <= 5)")
    assert robustness(req, tr) == -1
    assert not boolean_sat(req, tr)


def test_sine_spec_matches_direct_grid_evaluation():
    dt = 0.02
    t = np.arange(501) * dt
    omegas = (1.1, 1.2, 1.3, 1.4)
    phases = (0.0, 0.0, 0.0, 0.0)
    tr = Trace(dt, {f"x{k + 1}": np.sin(w * t + p) for k, (w, p) in enumerate(zip(omegas, phases))})
    req = parse_formula("G[0,10](x1 < 0.99 || x2 < 0.99 || x3 < 0.99 || x4 < 0.99)")
    direct = min(
        max(0.99 - math.sin(w * tk + p) for w, p in zip(omegas, phases)) for tk in t
    )
    assert robustness(req, tr) == pytest.approx(direct, abs=1e-12)


def test_not_flips_boolean_on_random_traces():
    rng = np.random.default_rng(3)
    f = parse_formula("G[0,3](a > 0 || F[1,2] b < 1) U[0,4] c >= 0")
    for _ in range(100):
        tr = random_trace(rng, n=12, integer=False)
        assert boolean_sat(Not(f), tr) == (not boolean_sat(f, tr))


def test_trace_too_short():
    with pytest.raises(TraceTooShort):
        robustness(parse_formula("G[0,10] x > 0"), Trace(1.0, {"x": np.zeros(5)}))
    with pytest.raises(TraceTooShort):
        boolean_sat(parse_formula("F[0,10] x > 0"), Trace(1.0, {"x": np.zeros(5)}))


def test_unbounded_operator_runs_to_trace_end():
    tr = Trace(0.5, {"x": [1, 1, 1, -1]})
    assert robustness(parse_formula("G x > 0"), tr) == -1
    assert robustness(parse_formula("F x < 0"), tr) == 1


def test_singular_interval_allowed():
    tr = Trace(1.0, {"x": [0, 7, 0]})
    assert robustness(parse_formula("G[1,1] x > 0"), tr) == 7


def test_nonstrict_boundary():
    tr = Trace(1.0, {"x": [2.0]})
    assert boolean_sat(parse_formula("x <= 2"), tr)
    assert not boolean_sat(parse_formula("x < 2"), tr)
    assert robustness(parse_formula("x <= 2"), tr) == robustness(parse_formula("x < 2"), tr) == 0


def test_matches_brute_force_reference():
    rng = np.random.default_rng(11)
    for _ in range(300):
        f = random_formula(rng, depth=3)
        tr = random_trace(rng, n=18)
        if horizon(f) > tr.duration:
            continue
        assert robustness(f, tr) == ref_rob(f, tr)
        assert boolean_sat(f, tr) == ref_sat(f, tr)


def test_sign_coherence():
    rng = np.random.default_rng(5)
    checked = 0
    for _ in range(400):
        f = random_formula(rng, depth=3)
        tr = random_trace(rng, n=30)
        r, s = robustness(f, tr), boolean_sat(f, tr)
        if r > 0:
            assert s
        elif r < 0:
            assert not s
        checked += 1
    assert checked == 400


def test_semantic_identities():
    rng = np.random.default_rng(9)
    for _ in range(200):
        f = random_formula(rng, depth=3)
        tr = random_trace(rng, n=30, integer=False)
        iv = Interval(float(rng.integers(0, 3)), float(rng.integers(3, 6)))
        assert robustness(Not(Not(f)), tr) == robustness(f, tr)
        assert robustness(Eventually(iv, f), tr) == -robustness(Always(iv, Not(f)), tr)


def test_monotone_in_positive_variables():
    rng = np.random.default_rng(13)
    for _ in range(200):
        f = random_formula(rng, depth=3, negation_free=True)
        tr = random_trace(rng, n=30, integer=False)
        bump = {k: v + rng.uniform(0, 2, size=v.shape) for k, v in tr.variables.items()}
        assert robustness(f, Trace(tr.dt, bump)) >= robustness(f, tr)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=8, max_size=8), st.integers(0, 3), st.integers(0, 4))
def test_until_with_true_left_is_eventually(xs, lo, width):
    tr = Trace(1.0, {"a": xs})
    iv = Interval(lo, lo + width)
    top = Atom({}, 1e300)  # robustness far above any signal value
    phi = Atom({"a": 1.0})
    assert robustness(Until(iv, top, phi), tr) == robustness(Eventually(iv, phi), tr)


def test_trace_validation():
    with pytest.raises(ValueError):
        Trace(0.0, {"x": [1]})
    with pytest.raises(ValueError):
        Trace(1.0, {"x": [1, 2], "y": [1]})
    with pytest.raises(ValueError):
        Trace(1.0, {"x": [1, math.nan]})
