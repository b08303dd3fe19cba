"""Composite Gauss-Legendre quadrature on finite intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

__all__ = ["QuadratureRule", "DEFAULT_RULE", "integrate", "interval_nodes"]


@lru_cache(maxsize=32)
def _reference(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes per panel and the widest panel allowed.

    An interval of length ``L`` is split into ``ceil(L / panel_width)``
    equal panels, each carrying ``nodes`` points.
    """

    nodes: int = 64
    panel_width: float = 0.25

    def __post_init__(self):
        if self.nodes < 1:
            raise ValueError("nodes must be positive")
        if not self.panel_width > 0:
            raise ValueError("panel_width must be positive")

    def doubled(self):
        """The same rule with twice the nodes per panel."""
        return replace(self, nodes=2 * self.nodes)

    def panels(self, length):
        return max(1, math.ceil(abs(length) / self.panel_width - 1e-12))


DEFAULT_RULE = QuadratureRule()


def interval_nodes(a, b, rule=DEFAULT_RULE):
    """Nodes and weights on ``[a, b]``; weights sum to ``b - a``.

    ``a`` and ``b`` may be arrays of equal shape ``S``; the returned arrays then
    have shape ``S + (K,)`` with ``K`` the total node count.  All intervals share
    the panel count of the longest one, which keeps the output rectangular.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    length = b - a
    n_pan = rule.panels(np.max(np.abs(length)) if length.size else 0.0)
    x, w = _reference(rule.nodes)
    # reference panel [-1, 1] mapped onto panel j of n_pan equal panels of [0, 1]
    j = np.arange(n_pan)[:, None]
    unit_x = ((j + (x[None, :] + 1) / 2) / n_pan).reshape(-1)
    unit_w = np.tile(w / (2 * n_pan), n_pan)
    nodes = a[..., None] + length[..., None] * unit_x
    weights = length[..., None] * unit_w
    return nodes, weights


def integrate(f, a, b, rule=DEFAULT_RULE):
    """Approximate ``int_a^b f(x) dx``; ``f`` must be vectorised.

    ``f`` receives an array of nodes of shape ``S + (K,)`` and must return
    values of shape ``S + (K,) + E`` for some trailing shape ``E``.
    """
    nodes, weights = interval_nodes(a, b, rule)
    vals = np.asarray(f(nodes), dtype=float)
    extra = vals.ndim - nodes.ndim
    w = weights.reshape(weights.shape + (1,) * extra)
    return np.sum(vals * w, axis=nodes.ndim - 1)
