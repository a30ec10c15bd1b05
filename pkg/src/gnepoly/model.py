"""GNEP instances: players, constraints, validation, feasibility violation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fileio import collect_indexed, format_keyvalues, format_polynomial, parse_keyvalues, \
    parse_polynomial, ParseError
from .polynomials import Polynomial, VariableSpace

EQ = "eq"
INEQ = "ineq"


@dataclass(frozen=True)
class PlayerProblem:
    """One player's objective and constraints over the shared x-space.

    Constraint j belongs to exactly one of ``eq_set`` / ``ineq_set``
    (0-based indices into ``constraints``); ``validate`` reports violations
    instead of raising.
    """

    index: int                      # 0-based player number
    dim: int
    objective: Polynomial
    constraints: tuple[Polynomial, ...]
    eq_set: frozenset[int]
    ineq_set: frozenset[int]

    @classmethod
    def from_kinds(cls, index, dim, objective, constraints, kinds) -> "PlayerProblem":
        eq = frozenset(j for j, k in enumerate(kinds) if k == EQ)
        ineq = frozenset(j for j, k in enumerate(kinds) if k == INEQ)
        return cls(index, dim, objective, tuple(constraints), eq, ineq)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    def kind(self, j: int) -> str:
        return EQ if j in self.eq_set else INEQ


@dataclass(frozen=True)
class GnepProblem:
    players: tuple[PlayerProblem, ...]
    space: VariableSpace
    convexity_asserted: bool = True

    @property
    def num_players(self) -> int:
        return len(self.players)

    @property
    def total_dim(self) -> int:
        return sum(p.dim for p in self.players)

    def block_name(self, i: int) -> str:
        return f"x[{i + 1}]"


@dataclass(frozen=True)
class StrategyTuple:
    """A joint strategy vector partitioned per player."""

    x: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).ravel())
        if self.x.shape[0] != sum(self.dims):
            raise ValueError(f"strategy length {self.x.shape[0]} != sum of dims {self.dims}")

    def player(self, i: int) -> np.ndarray:
        off = sum(self.dims[:i])
        return self.x[off:off + self.dims[i]]


def make_space(dims, param_counts=None) -> VariableSpace:
    """x-blocks for the given player dims, then w-blocks for players with
    parameters (param_counts[i] > 0)."""
    blocks = [(f"x[{i + 1}]", d) for i, d in enumerate(dims)]
    if param_counts:
        for i, s in enumerate(param_counts):
            if s > 0:
                blocks.append((f"w[{i + 1}]", s))
    return VariableSpace(blocks)


def validate(problem: GnepProblem) -> list[str]:
    """Structural diagnostics; empty list means the instance is well formed."""
    diags: list[str] = []
    dims = [p.dim for p in problem.players]
    expect = make_space(dims)
    if tuple(problem.space.blocks[:len(dims)]) != expect.blocks:
        diags.append(f"player blocks {problem.space.blocks[:len(dims)]} do not tile "
                     f"the x-space as {expect.blocks}")
    for i, p in enumerate(problem.players):
        if p.index != i:
            diags.append(f"player {i + 1}: index field is {p.index}")
        if p.dim < 1:
            diags.append(f"player {i + 1}: dimension {p.dim} < 1")
        m = p.num_constraints
        overlap = p.eq_set & p.ineq_set
        if overlap:
            diags.append(f"player {i + 1}: constraints {sorted(j + 1 for j in overlap)} "
                         f"labeled both eq and ineq")
        missing = set(range(m)) - (p.eq_set | p.ineq_set)
        if missing:
            diags.append(f"player {i + 1}: constraints {sorted(j + 1 for j in missing)} "
                         f"have no eq/ineq label")
        out_of_range = [j for j in (p.eq_set | p.ineq_set) if not 0 <= j < m]
        if out_of_range:
            diags.append(f"player {i + 1}: labels {sorted(j + 1 for j in out_of_range)} "
                         f"out of range for {m} constraints")
        if p.objective.space != problem.space:
            diags.append(f"player {i + 1}: objective not in the problem's variable space")
        for j, g in enumerate(p.constraints):
            if g.space != problem.space:
                diags.append(f"player {i + 1}: constraint {j + 1} not in the problem's "
                             f"variable space")
    return diags


def feasibility_violation(problem: GnepProblem, u) -> float:
    """max over players of (inequality deficit, equality magnitude) at u.

    Nonpositive means feasible.  Returns -inf for a fully unconstrained
    problem.
    """
    if isinstance(u, StrategyTuple):
        pt = u.x
    else:
        pt = np.asarray(u, dtype=float).ravel()
    full = np.zeros(problem.space.total_dim)
    full[:pt.shape[0]] = pt
    worst = -math.inf
    for p in problem.players:
        for j, g in enumerate(p.constraints):
            v = g.eval(full)
            worst = max(worst, abs(v) if j in p.eq_set else -v)
    return worst


# -- problem files ------------------------------------------------------------

def problem_to_text(problem: GnepProblem) -> str:
    items: dict[str, object] = {"n_players": problem.num_players}
    for i, p in enumerate(problem.players, start=1):
        items[f"players[{i}].dim"] = p.dim
        items[f"players[{i}].objective"] = format_polynomial(p.objective)
        for j, g in enumerate(p.constraints, start=1):
            items[f"players[{i}].constraints[{j}].expr"] = format_polynomial(g)
            items[f"players[{i}].constraints[{j}].kind"] = p.kind(j - 1)
    return format_keyvalues(items)


def problem_from_text(text: str, source: str = "<problem>") -> GnepProblem:
    items = parse_keyvalues(text, source)
    player_items = collect_indexed(items, "players")
    n = items.get("n_players", len(player_items))
    if not player_items or n != len(player_items):
        raise ParseError(f"{source}: n_players = {n} but found {len(player_items)} players")
    dims = []
    for i, pi in enumerate(player_items, start=1):
        d = pi.get("dim")
        if not isinstance(d, int) or d < 1:
            raise ParseError(f"{source}: players[{i}].dim missing or invalid")
        dims.append(d)
    space = make_space(dims)
    players = []
    for i, pi in enumerate(player_items, start=1):
        if "objective" not in pi:
            raise ParseError(f"{source}: players[{i}].objective missing")
        try:
            objective = parse_polynomial(str(pi["objective"]), space)
        except ParseError as exc:
            raise ParseError(f"{source}: players[{i}].objective: {exc}") from None
        cons, kinds = [], []
        for j, ci in enumerate(collect_indexed(pi, "constraints"), start=1):
            if "expr" not in ci or "kind" not in ci:
                raise ParseError(f"{source}: players[{i}].constraints[{j}] needs expr and kind")
            kind = str(ci["kind"])
            if kind not in (EQ, INEQ):
                raise ParseError(f"{source}: players[{i}].constraints[{j}].kind must be "
                                 f"eq or ineq, got {kind!r}")
            try:
                cons.append(parse_polynomial(str(ci["expr"]), space))
            except ParseError as exc:
                raise ParseError(f"{source}: players[{i}].constraints[{j}].expr: {exc}") from None
            kinds.append(kind)
        players.append(PlayerProblem.from_kinds(i - 1, dims[i - 1], objective, cons, kinds))
    return GnepProblem(tuple(players), space)


def load_problem(path) -> GnepProblem:
    with open(path, "r") as fh:
        return problem_from_text(fh.read(), source=str(path))
