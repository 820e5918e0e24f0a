"""Relative information (KL divergence) and Shannon entropy.

Zero probabilities are handled by explicit masking, never by evaluating
``log(0)``.  An infinite divergence is a legitimate return value.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError, ValidationError

NORMALIZATION_TOL = 1e-9


class ProbDist:
    """Probability distribution on a finite set.

    The input must already sum to 1 within ``1e-9``; it is then rescaled so
    the stored weights sum to 1 as closely as floating point allows.
    Inputs farther from the simplex are rejected instead of being silently
    normalized (use :func:`relinfo.evogame.normalize` for populations).
    """

    __slots__ = ("_w",)

    def __init__(self, weights):
        w = np.array(weights, dtype=float)
        if isinstance(weights, ProbDist):
            w = weights.weights.copy()
        if w.ndim != 1 or w.size == 0:
            raise ValidationError("distribution must be a non-empty 1-D vector")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValidationError("distribution weights must be finite and nonnegative")
        total = w.sum()
        if total == 0:
            raise ValidationError("distribution is all zeros")
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"weights sum to {total!r}, not 1")
        w = w / total
        w.flags.writeable = False
        self._w = w

    @property
    def weights(self) -> np.ndarray:
        return self._w

    def __array__(self, dtype=None, copy=None):
        return self._w if dtype is None else self._w.astype(dtype)

    def __len__(self):
        return self._w.size

    def __iter__(self):
        return iter(self._w)

    def __eq__(self, other):
        if not isinstance(other, ProbDist):
            return NotImplemented
        return np.array_equal(self._w, other._w)

    def __hash__(self):
        return hash(self._w.tobytes())

    def __repr__(self):
        return f"ProbDist({np.array2string(self._w, separator=', ')})"

    @classmethod
    def uniform(cls, n: int) -> "ProbDist":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def vertex(cls, n: int, i: int) -> "ProbDist":
        w = np.zeros(n)
        w[i] = 1.0
        return cls(w)


class Population:
    """Nonnegative, finite, unnormalized vector of species counts."""

    __slots__ = ("_c",)

    def __init__(self, counts):
        c = np.array(counts, dtype=float)
        if c.ndim != 1:
            raise ValidationError("population must be a 1-D vector")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise ValidationError("population counts must be finite and nonnegative")
        c.flags.writeable = False
        self._c = c

    @property
    def counts(self) -> np.ndarray:
        return self._c

    def __array__(self, dtype=None, copy=None):
        return self._c if dtype is None else self._c.astype(dtype)

    def __len__(self):
        return self._c.size

    def __eq__(self, other):
        if not isinstance(other, Population):
            return NotImplemented
        return np.array_equal(self._c, other._c)

    def __hash__(self):
        return hash(self._c.tobytes())

    def __repr__(self):
        return f"Population({np.array2string(self._c, separator=', ')})"


def _pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def divergence_terms(P, Q) -> np.ndarray:
    """Per-component ``P ln(P/Q) - (P - Q)`` with the 0 ln 0 = 0 convention.

    Each term is nonnegative by convexity; rounding noise below zero is
    clipped.  A component with ``P > 0`` and ``Q = 0`` gives ``+inf``.
    """
    P, Q = _pair(P, Q)
    out = np.empty_like(P)
    zero_p = P == 0
    zero_q = (Q == 0) & ~zero_p
    regular = ~zero_p & ~zero_q
    out[zero_p] = Q[zero_p]
    out[zero_q] = np.inf
    p, q = P[regular], Q[regular]
    out[regular] = p * (np.log(p) - np.log(q)) - (p - q)
    return np.maximum(out, 0.0)


def relative_info_array(p, q) -> float:
    """Unvalidated kernel of :func:`relative_information` for trajectory monitors."""
    return float(np.sum(divergence_terms(p, q)))


def relative_information(p, q) -> float:
    """Information of ``p`` relative to ``q``: ``sum_i p_i ln(p_i / q_i)``.

    Returns ``+inf`` when ``p`` puts mass where ``q`` has none.

    >>> relative_information([1, 0], [0.5, 0.5])  # doctest: +ELLIPSIS
    0.693147...
    """
    p = ProbDist(p).weights
    q = ProbDist(q).weights
    # for normalized inputs the -(p - q) terms sum to zero; keeping them makes
    # every summand nonnegative and rounding-safe
    return relative_info_array(p, q)


def shannon_entropy(p) -> float:
    """``-sum_i p_i ln p_i`` with ``0 ln 0 = 0``; lies in ``[0, ln n]``."""
    w = ProbDist(p).weights
    nz = w[w > 0]
    return float(max(0.0, -np.sum(nz * np.log(nz))))


def population_relative_information(P, Q) -> float:
    """Relative information for unnormalized populations.

    ``sum_i P_i ln(P_i / Q_i) - (P_i - Q_i)``.  Agrees exactly with
    :func:`relative_information` on probability vectors and is nonnegative
    for arbitrary populations.
    """
    P = Population(P).counts
    Q = Population(Q).counts
    return relative_info_array(P, Q)
