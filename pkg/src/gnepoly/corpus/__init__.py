"""Bundled example games mirroring the multiplier choices used to study them.

Every entry maps to a problem file plus a run manifest in ``data/``.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

_ENTRIES = {
    "ex1.4": "two players coupled by an inner-product equality; polynomial "
             "and rational multipliers; unique equilibrium",
    "ex6.1ii": "the same game with a sign-twisted first objective; no "
               "equilibrium exists",
    "ex6.2(A.8)": "three-player chain with vanishing denominators; needs an "
                  "exclusion restart",
    "ex6.3": "ball and slab constraints, rational multipliers",
    "ex6.4": "shared ball constraint, rational multipliers",
    "ex6.5": "hand-built parametric multipliers, one parameter per player",
    "ex6.6": "multipliers found by the certificate search (degree 2, v = 0)",
    "ex6.7i": "three players, mixed rational and polynomial multipliers",
    "ex6.7ii": "the same game with a sign flip; no equilibrium exists",
    "ex6.8(A.3)": "quadratic objectives over boxes with linear coupling; box "
                  "template multipliers",
    "ex6.9-market-N3": "consumer / producer / market economy, market "
                       "simplex-eliminated",
}

_FILES = {
    "ex6.2(A.8)": "ex6.2-A.8",
    "ex6.8(A.3)": "ex6.8-A.3",
}


def corpus_list() -> list[str]:
    """Bundled example identifiers in display order."""
    return list(_ENTRIES)


def corpus_description(entry: str) -> str:
    return _ENTRIES[entry]


def corpus_manifest_path(entry: str) -> Path:
    """Filesystem path of the entry's run manifest."""
    if entry not in _ENTRIES:
        raise KeyError(f"unknown corpus entry {entry!r}; "
                       f"known: {', '.join(_ENTRIES)}")
    stem = _FILES.get(entry, entry)
    base = resources.files(__package__) / "data" / f"{stem}.manifest"
    return Path(str(base))
