import math

import numpy as np
import pytest

from gnepoly.fileio import ParseError
from gnepoly.model import (EQ, INEQ, GnepProblem, PlayerProblem, StrategyTuple,
                           feasibility_violation, make_space, problem_from_text,
                           problem_to_text, validate)
from gnepoly.polynomials import Polynomial, VariableSpace, poly_dot


def two_player_game():
    sp = make_space([3, 3])
    x1 = [Polynomial.variable(sp, "x[1]", j) for j in range(3)]
    x2 = [Polynomial.variable(sp, "x[2]", j) for j in range(3)]
    f1 = sum(((a - b) ** 2 for a, b in zip(x1, x2)), Polynomial.zero(sp))
    f2 = sum((b ** 4 for b in x2), Polynomial.zero(sp)) \
        - sum(x2, Polynomial.zero(sp)) * (x1[0] * x1[1] * x1[2])
    p1 = PlayerProblem.from_kinds(0, 3, f1,
                                  [poly_dot(x2, x1) - 1, x1[0], x1[1], x1[2]],
                                  [EQ, INEQ, INEQ, INEQ])
    p2 = PlayerProblem.from_kinds(1, 3, f2,
                                  [poly_dot(x1, x1) - poly_dot(x2, x2)], [INEQ])
    return GnepProblem((p1, p2), sp)


def test_validate_clean():
    assert validate(two_player_game()) == []


def test_validate_duplicate_label():
    prob = two_player_game()
    p1 = prob.players[0]
    bad = PlayerProblem(0, 3, p1.objective, p1.constraints,
                        eq_set=frozenset({0, 1}), ineq_set=frozenset({1, 2, 3}))
    diags = validate(GnepProblem((bad, prob.players[1]), prob.space))
    assert len(diags) == 1 and "both eq and ineq" in diags[0]


def test_validate_missing_label():
    prob = two_player_game()
    p1 = prob.players[0]
    bad = PlayerProblem(0, 3, p1.objective, p1.constraints,
                        eq_set=frozenset({0}), ineq_set=frozenset({1, 2}))
    diags = validate(GnepProblem((bad, prob.players[1]), prob.space))
    assert len(diags) == 1 and "no eq/ineq label" in diags[0]


def test_validate_foreign_space():
    prob = two_player_game()
    other = make_space([3, 3])
    alien = VariableSpace([("x[1]", 3), ("x[2]", 3), ("extra", 1)])
    f = Polynomial.variable(alien, "extra", 0)
    bad = PlayerProblem.from_kinds(0, 3, f, list(prob.players[0].constraints),
                                   [EQ, INEQ, INEQ, INEQ])
    diags = validate(GnepProblem((bad, prob.players[1]), other))
    assert any("objective" in d for d in diags)


def test_strategy_tuple_partition():
    u = StrategyTuple(np.arange(6.0), (3, 3))
    assert np.allclose(u.player(1), [3.0, 4.0, 5.0])
    with pytest.raises(ValueError):
        StrategyTuple(np.arange(5.0), (3, 3))


def test_feasibility_violation_equilibrium():
    prob = two_player_game()
    u1 = 2 ** (1 / 3) / math.sqrt(3)
    u2 = 108 ** (-1 / 6)
    xi = feasibility_violation(prob, [u1] * 3 + [u2] * 3)
    assert xi <= 1e-4
    # and the rounded four-digit display values stay within the same band
    xi4 = feasibility_violation(prob, [0.7274] * 3 + [0.4582] * 3)
    assert xi4 <= 1e-3


def test_feasibility_violation_interior_ball():
    sp = make_space([2])
    x = [Polynomial.variable(sp, "x[1]", j) for j in range(2)]
    g = 1 - x[0] * x[0] - x[1] * x[1]
    p = PlayerProblem.from_kinds(0, 2, x[0], [g], [INEQ])
    prob = GnepProblem((p,), sp)
    assert feasibility_violation(prob, [0.0, 0.0]) == pytest.approx(-1.0)


def test_feasibility_violation_definition():
    sp = make_space([1])
    x = Polynomial.variable(sp, "x[1]", 0)
    p = PlayerProblem.from_kinds(0, 1, x, [x - 1, x + 5], [EQ, INEQ])
    prob = GnepProblem((p,), sp)
    # equality violated by 0.3, inequality slack
    assert feasibility_violation(prob, [1.3]) == pytest.approx(0.3)


def test_feasibility_monotone_in_constraints():
    sp = make_space([1])
    x = Polynomial.variable(sp, "x[1]", 0)
    base = PlayerProblem.from_kinds(0, 1, x, [x + 1], [INEQ])
    more = PlayerProblem.from_kinds(0, 1, x, [x + 1, -x], [INEQ, INEQ])
    rng = np.random.default_rng(0)
    for _ in range(20):
        pt = rng.uniform(-2, 2, 1)
        a = feasibility_violation(GnepProblem((base,), sp), pt)
        b = feasibility_violation(GnepProblem((more,), sp), pt)
        assert b >= a - 1e-12


def test_feasible_points_have_small_deficits():
    prob = two_player_game()
    rng = np.random.default_rng(3)
    found = 0
    for _ in range(200):
        x1 = rng.uniform(0, 1.5, 3)
        x2 = rng.uniform(-1, 1, 3)
        denom = x2 @ x1
        if abs(denom) < 1e-3:
            continue
        x2 = x2 / denom  # enforce the equality
        u = np.concatenate([x1, x2])
        if feasibility_violation(prob, u) <= 0:
            found += 1
            for p in prob.players:
                for j in sorted(p.ineq_set):
                    assert p.constraints[j].eval(u) >= -1e-12
    assert found > 0


def test_problem_text_round_trip():
    prob = two_player_game()
    text = problem_to_text(prob)
    again = problem_from_text(text)
    assert again.num_players == 2
    assert again.players[0].eq_set == frozenset({0})
    assert again.players[0].ineq_set == frozenset({1, 2, 3})
    for p, q in zip(prob.players, again.players):
        assert (p.objective - q.objective).max_abs_coeff() < 1e-12
        for g, h in zip(p.constraints, q.constraints):
            assert (g - h).max_abs_coeff() < 1e-12


def test_problem_text_errors():
    with pytest.raises(ParseError):
        problem_from_text("")
    with pytest.raises(ParseError):
        problem_from_text("n_players = 1\nplayers[1].dim = 1\n")
    bad_kind = (
        "players[1].dim = 1\n"
        'players[1].objective = "1*x[1][1]"\n'
        'players[1].constraints[1].expr = "1*x[1][1]"\n'
        "players[1].constraints[1].kind = maybe\n")
    with pytest.raises(ParseError):
        problem_from_text(bad_kind)
