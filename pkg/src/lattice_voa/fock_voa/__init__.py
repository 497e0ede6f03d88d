"""Exact model of lattice vertex algebras and their genus-g trace functions."""

from __future__ import annotations

from fractions import Fraction

from ..lattice_core import Lattice
from .model import FockState, LatticeVOA, StateVector, colored_partitions, voa_model
from .traces import (
    EXPANSION_ORDER,
    LaurentWindow,
    casimir_zero_trace,
    change_dual_basis,
    default_term_cap,
    dual_bases,
    genus0_oracle,
    phi_block,
)

__all__ = [
    "EXPANSION_ORDER",
    "FockState",
    "LatticeVOA",
    "LaurentWindow",
    "StateVector",
    "casimir_zero_trace",
    "change_dual_basis",
    "colored_partitions",
    "conformal_vector",
    "default_term_cap",
    "dual_bases",
    "genus0_oracle",
    "graded_basis",
    "homogeneous_weight",
    "invariant_form",
    "mode_action",
    "phi_block",
    "voa_model",
]


def graded_basis(l: Lattice, n: int) -> list[FockState]:
    """Monomial basis of V_n: lattice vectors of norm 2(n-h) times colored partitions of h."""
    return list(voa_model(l).graded_basis(n))


def homogeneous_weight(l: Lattice, v: dict) -> int | None:
    """Common weight of all terms, None for the zero vector; raises if mixed."""
    model = voa_model(l)
    weights = {model.weight(s) for s in v}
    if len(weights) > 1:
        raise ValueError(f"state is not homogeneous (weights {sorted(weights)})")
    return weights.pop() if weights else None


def _as_state(v) -> dict:
    if isinstance(v, FockState):
        return {v: 1}
    return v


def invariant_form(l: Lattice, u, v) -> Fraction | int:
    """Invariant bilinear form: Fock pairing with h(m)^T = h(-m), e^a paired with e^{-a}.

    Normalized so the vacuum has norm 1.
    """
    u, v = _as_state(u), _as_state(v)
    wu, wv = homogeneous_weight(l, u), homogeneous_weight(l, v)
    if wu is None or wv is None or wu != wv:
        return 0
    return voa_model(l).form(u, v)


def mode_action(l: Lattice, u, p: int, b, trunc: int | None = None) -> StateVector:
    """u_p b, exactly.  Raises TruncationError if the output weight exceeds ``trunc``."""
    u, b = _as_state(u), _as_state(b)
    homogeneous_weight(l, b)
    return voa_model(l).mode_action(u, p, b, trunc)


def conformal_vector(l: Lattice) -> StateVector:
    return voa_model(l).conformal_vector()
