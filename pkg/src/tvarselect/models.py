"""Time-varying AR model specifications, the simulation catalog and path simulation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import InvalidConfigError, SimulationDivergedError

__all__ = [
    "Constant",
    "TvarSpec",
    "CATALOG",
    "MOTIVATING_EXAMPLE",
    "get_model",
    "simulate_tvar",
    "burn_in_length",
    "splitmix64",
    "is_time_invariant",
]

CoeffFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Constant:
    """A constant coefficient function that broadcasts over ``u``."""

    value: float

    def __call__(self, u):
        return np.full(np.shape(u), float(self.value))

    def __repr__(self):
        return f"Constant({self.value!r})"


@dataclass(frozen=True)
class TvarSpec:
    """tvAR(p) model ``X_t = sum_j a_j(t/T) X_{t-j} + sigma(t/T) Z_t``.

    Coefficient functions must be vectorised over a numpy array of rescaled
    times and, to be usable by the parallel experiment runner, picklable.
    """

    coeff_fns: tuple
    sigma_fn: CoeffFn = Constant(1.0)
    label: str = "custom"
    order: int = field(init=False)

    def __post_init__(self):
        fns = tuple(self.coeff_fns)
        if len(fns) < 1:
            raise InvalidConfigError("a tvAR spec needs at least one coefficient function")
        object.__setattr__(self, "coeff_fns", fns)
        object.__setattr__(self, "order", len(fns))
        probe = np.linspace(0.0, 1.0, 33)
        if np.any(np.asarray(self.sigma_fn(probe)) < 0):
            raise InvalidConfigError(f"{self.label}: sigma(u) must be non-negative on [0, 1]")

    @property
    def p(self):
        return self.order

    def coefficients(self, u):
        """Coefficient matrix of shape ``(len(u), p)``."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return np.column_stack([np.broadcast_to(f(u), u.shape) for f in self.coeff_fns])

    def sigma(self, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return np.broadcast_to(np.asarray(self.sigma_fn(u), dtype=float), u.shape)


# Catalog coefficient functions live at module level so that specs pickle.

def _periodic1(u):
    return 0.8 + 0.19 * np.sin(4 * np.pi * u)


def _periodic2(u):
    return 0.3 + 0.19 * np.sin(4 * np.pi * u)


def _increasing1(u):
    return 0.8 + 0.19 * u


def _increasing2(u):
    return 0.5 + 0.19 * u


def _increasing3(u):
    return 0.9 + 0.09 * u


def _increasing4(u):
    return 0.5 + 0.09 * u


def _increasing5(u):
    return 0.5 + 0.49 * u


def _increasing6(u):
    return 0.5 + 0.4 * u


def _decreasing1(u):
    return 0.99 - 0.49 * u


def _decreasing2(u):
    return 0.5 - u


def _hetero_sigma(u):
    return 5 - 16 * np.abs(u - 0.5) ** 2


def _mdl11_a1(u):
    return 1.8 * np.cos(1.5 - np.cos(4 * np.pi * u))


def _motivating_a1(u):
    return 0.15 + 0.15 * u


def _motivating_a2(u):
    return 0.25 - 0.15 * u


def _build_catalog():
    specs = [
        TvarSpec((_periodic1,), label="periodic1"),
        TvarSpec((_periodic2,), label="periodic2"),
        TvarSpec((_increasing2,), label="increasing2"),
        TvarSpec((_increasing4,), label="increasing4"),
        TvarSpec((_increasing1,), label="increasing1"),
        TvarSpec((_increasing3,), label="increasing3"),
        TvarSpec((_increasing5,), label="increasing5"),
        TvarSpec((_increasing6,), label="increasing6"),
        TvarSpec((Constant(-0.6),), label="stationaryAR"),
        TvarSpec((Constant(0.0),), label="indepNonHetero"),
        TvarSpec((Constant(0.0),), sigma_fn=_hetero_sigma, label="indepHetero"),
        TvarSpec((_mdl11_a1, Constant(-0.81)), label="mdl11"),
        TvarSpec((Constant(1.0), Constant(-0.81)), label="mdl12"),
        TvarSpec((_decreasing1,), label="decreasing1"),
        TvarSpec((_decreasing2,), label="decreasing2"),
    ]
    return {s.label: s for s in specs}


CATALOG = _build_catalog()

#: tvAR(2) example with a_1(u) = 0.15 + 0.15u and a_2(u) = 0.25 - 0.15u.
MOTIVATING_EXAMPLE = TvarSpec((_motivating_a1, _motivating_a2), label="motivating")


def get_model(label):
    if label == MOTIVATING_EXAMPLE.label:
        return MOTIVATING_EXAMPLE
    try:
        return CATALOG[label]
    except KeyError:
        known = ", ".join(sorted(CATALOG))
        raise InvalidConfigError(f"unknown model {label!r}; known: {known}") from None


def is_time_invariant(spec, n_probe=257):
    """True when every coefficient and sigma are constant on a probe grid."""
    u = np.linspace(0.0, 1.0, n_probe)
    a = spec.coefficients(u)
    s = spec.sigma(u)
    return bool(np.all(np.ptp(a, axis=0) == 0) and np.ptp(s) == 0)


def burn_in_length(p):
    return max(200, 10 * p)


_MASK64 = (1 << 64) - 1


def splitmix64(base, index=0):
    """SplitMix64 finaliser applied to ``base`` advanced ``index + 1`` steps.

    Gives independent, order-free seeds for replication ``index``.
    """
    z = (int(base) + (int(index) + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def standard_normal_noise(rng, size):
    return rng.standard_normal(size)


def simulate_tvar(spec: TvarSpec, T: int, seed: int, noise=standard_normal_noise):
    """Simulate ``X_1, ..., X_T`` from ``spec`` with rescaled time ``t/T``.

    The innovations ``Z_1..Z_T`` are the first ``T`` draws of
    ``numpy.random.default_rng(seed)``; the presample of
    ``burn_in_length(p)`` steps (coefficients frozen at ``u = 0``, zero
    initial state) draws afterwards and is discarded.

    Raises
    ------
    SimulationDivergedError
        If the path becomes non-finite; ``index`` is the 1-based time of the
        first offending value (non-positive indices are in the presample).
    """
    T = int(T)
    if T < 1:
        raise InvalidConfigError(f"T must be positive, got {T}")
    # divergence is detected after the fact, so overflow warnings are noise
    with np.errstate(over="ignore", invalid="ignore"):
        return _simulate(spec, T, seed, noise)


def _simulate(spec, T, seed, noise):
    p = spec.order
    rng = np.random.default_rng(seed)
    z = np.asarray(noise(rng, T), dtype=float)
    n_burn = burn_in_length(p)
    z_burn = np.asarray(noise(rng, n_burn), dtype=float)

    u = np.clip(np.arange(1, T + 1) / T, 0.0, 1.0)
    coef = spec.coefficients(u)
    sig = spec.sigma(u)
    coef0 = spec.coefficients(np.zeros(1))[0]
    sig0 = float(spec.sigma(np.zeros(1))[0])

    # presample, oldest first; state holds the last p values, newest first
    state = [0.0] * p
    burn = np.empty(n_burn)
    a0 = [float(c) for c in coef0]
    for i in range(n_burn):
        v = sig0 * z_burn[i]
        for j in range(p):
            v += a0[j] * state[j]
        state = [v] + state[:-1]
        burn[i] = v
    if not np.all(np.isfinite(burn)):
        bad = int(np.argmin(np.isfinite(burn)))
        raise SimulationDivergedError(bad - n_burn + 1)

    out = np.empty(T)
    innov = (sig * z).tolist()
    if p == 1:
        a = coef[:, 0].tolist()
        prev = state[0]
        for t in range(T):
            prev = a[t] * prev + innov[t]
            out[t] = prev
    else:
        rows = coef.tolist()
        for t in range(T):
            v = innov[t]
            row = rows[t]
            for j in range(p):
                v += row[j] * state[j]
            state = [v] + state[:-1]
            out[t] = v
    finite = np.isfinite(out)
    if not finite.all():
        raise SimulationDivergedError(int(np.argmin(finite)) + 1)
    out.setflags(write=False)
    return out
