"""Lotka-Volterra and replicator dynamics, plus equilibrium checks for
symmetric two-player games (Nash, dominance, Maynard Smith and Thomas ESS).

Fitness models come in two flavours.  A *linear* model is a payoff matrix
``A`` and fitness ``f(p) = A p`` evaluated on the normalized distribution.
A *general* model wraps any callable; it is evaluated on raw populations by
:func:`lotka_volterra_field` and directly on the field's argument by
:func:`replicator_field`.

Dominance, ``q.Ap >= p.Ap`` for every mixed ``p``, asks for the minimum of an
indefinite quadratic over the simplex.  :func:`is_dominant` solves it exactly
by enumerating the stationary points of the slack on every face of the
simplex (feasible up to ``max_exact_dim`` strategies) and otherwise falls
back to concavity or to randomized falsification.
"""

from __future__ import annotations

import enum
import io
import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegeneratePopulationError, ParseError, ShapeError, ValidationError
from .infodiv import ProbDist, relative_info_array

DEFAULT_TOL = 1e-9
DEFAULT_SAMPLES = 10_000
DEFAULT_SEED = 20160210


@dataclass(frozen=True, eq=False)
class GameMatrix:
    """Square, finite payoff matrix; ``entries[i, j]`` pays strategy i against j."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValidationError("payoff matrix must be square and non-empty")
        if not np.all(np.isfinite(a)):
            raise ValidationError("payoff matrix has non-finite entries")
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, GameMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())


class FitnessModel:
    """Fitness function ``f`` mapping a state vector to per-species fitness."""

    def __init__(self, func: Callable[[np.ndarray], np.ndarray] | None = None, n: int | None = None,
                 matrix=None):
        if (func is None) == (matrix is None):
            raise ValidationError("give exactly one of func or matrix")
        self.matrix = None if matrix is None else _as_matrix(matrix)
        if self.matrix is not None:
            n = self.matrix.shape[0]
        elif n is None or n < 1:
            raise ValidationError("general fitness models need dimension n >= 1")
        self.func = func
        self.n = int(n)

    @classmethod
    def linear(cls, A) -> "FitnessModel":
        return cls(matrix=A)

    @property
    def is_linear(self) -> bool:
        return self.matrix is not None

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ShapeError(f"expected state of length {self.n}, got {x.shape}")
        if self.is_linear:
            total = x.sum()
            return self.matrix @ (x / total if total > 0 else x)
        f = np.asarray(self.func(x), dtype=float)
        if f.shape != (self.n,):
            raise ShapeError(f"fitness returned shape {f.shape}, expected ({self.n},)")
        return f

    def __repr__(self):
        kind = "linear" if self.is_linear else "general"
        return f"FitnessModel({kind}, n={self.n})"


def _as_matrix(A) -> np.ndarray:
    if isinstance(A, GameMatrix):
        return A.entries
    return GameMatrix(A).entries


def _as_model(model) -> FitnessModel:
    if isinstance(model, FitnessModel):
        return model
    if callable(model) and not isinstance(model, (np.ndarray, GameMatrix)):
        raise ValidationError("wrap general fitness callables in FitnessModel(func, n)")
    return FitnessModel.linear(model)


def _vec(x, n=None) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or (n is not None and v.size != n):
        raise ShapeError(f"expected vector of length {n}, got shape {v.shape}")
    return v


# --------------------------------------------------------------------------
# dynamics


def lotka_volterra_field(model):
    """Field ``P -> (f_1(P) P_1, ..., f_n(P) P_n)`` on raw populations."""
    model = _as_model(model)

    def fieldfn(t, P):
        return model(P) * P

    return fieldfn


def replicator_field(model):
    """Field ``p -> (f_i - <f>) p_i`` on the simplex.

    Fitness and its mean are taken at ``p / sum(p)``.  On the simplex this
    is the plain replicator field; off it, the total ``sum(p)`` is left
    unchanged, so integration error cannot be amplified away from the
    simplex when the mean fitness is negative.
    """
    model = _as_model(model)
    if model.is_linear:
        A = model.matrix

        def fieldfn(t, p):
            total = p.sum()
            f = A @ p / total
            return (f - f @ p / total) * p

        return fieldfn

    def fieldfn(t, p):
        total = p.sum()
        f = model(p / total)
        return (f - f @ p / total) * p

    return fieldfn


def batched_replicator_field(A, batch: int):
    """Replicator field for ``batch`` independent copies stacked end to end.

    Handy for integrating many initial conditions in one call; the state is
    the concatenation of ``batch`` distributions of length ``n``.
    """
    A = _as_matrix(A)
    n = A.shape[0]

    def fieldfn(t, x):
        p = x.reshape(batch, n)
        total = p.sum(axis=1, keepdims=True)
        f = p @ A.T / total
        return ((f - np.sum(f * p, axis=1, keepdims=True) / total) * p).ravel()

    return fieldfn


def mean_fitness(model, p) -> float:
    model = _as_model(model)
    p = _vec(p, model.n)
    return float(model(p) @ p)


def normalize(P) -> ProbDist:
    """Population fractions ``P_i / sum_j P_j``."""
    P = _vec(P)
    if np.any(P < 0) or not np.all(np.isfinite(P)):
        raise ValidationError("population must be finite and nonnegative")
    total = P.sum()
    if total <= 0:
        raise DegeneratePopulationError("total population is zero")
    return ProbDist(P / total)


def relative_info_rate(q, p, model) -> float:
    """Time derivative of ``I(q, p(t))`` under the replicator flow: ``f(p).(p - q)``."""
    model = _as_model(model)
    q = _vec(q, model.n)
    p = _vec(p, model.n)
    return float(model(p) @ (p - q))


def info_to_learn(q):
    """Monitor ``p -> I(q, p)``: information the population has left to learn."""
    q = np.asarray(q, dtype=float)
    return lambda p: relative_info_array(q, p)


# --------------------------------------------------------------------------
# verdicts


class Status(enum.IntEnum):
    FAILS = 0
    INCONCLUSIVE = 1
    HOLDS = 2

    def __str__(self):
        return self.name.lower()


@dataclass(frozen=True, eq=False)
class StrategyVerdict:
    """Outcome of an equilibrium check.

    ``margin`` is the worst slack of the tested inequality found by the
    check; ``witness`` is a mixed strategy violating it when ``status`` is
    ``FAILS``.
    """

    status: Status
    margin: float
    witness: np.ndarray | None = None
    exact: bool = True
    detail: str = ""

    def __post_init__(self):
        if self.status == Status.FAILS and self.witness is None:
            raise ValidationError("a failing verdict needs a witness")

    @property
    def holds(self) -> bool:
        return self.status == Status.HOLDS

    def to_dict(self) -> dict:
        return {
            "status": str(self.status),
            "margin": self.margin,
            "witness": None if self.witness is None else [float(v) for v in self.witness],
            "exact": self.exact,
            "detail": self.detail,
        }


def _prep(q, A):
    A = _as_matrix(A)
    q = ProbDist(q).weights
    if q.size != A.shape[0]:
        raise ShapeError(f"strategy has length {q.size}, matrix is {A.shape[0]}x{A.shape[0]}")
    return q, A


def is_symmetric_nash(q, A, tol: float = DEFAULT_TOL) -> StrategyVerdict:
    """Check ``q.Aq >= p.Aq`` for all mixed ``p``.

    Linear in ``p``, so checking the pure strategies is exact.
    """
    q, A = _prep(q, A)
    Aq = A @ q
    slack = q @ Aq - Aq
    i = int(np.argmin(slack))
    margin = float(slack[i])
    if margin < -tol:
        w = np.zeros_like(q)
        w[i] = 1.0
        return StrategyVerdict(Status.FAILS, margin, w, detail=f"pure strategy {i} does better")
    return StrategyVerdict(Status.HOLDS, margin)


def dominance_slack(q, A, p) -> float:
    """``q.Ap - p.Ap``; nonnegative everywhere iff ``q`` is dominant."""
    A = np.asarray(A, dtype=float)
    p = np.asarray(p, dtype=float)
    Ap = A @ p
    return float(q @ Ap - p @ Ap)


def _edge_minimum(c, B, i, j):
    """Minimize ``g(p) = c.p - p.Bp`` on the segment from e_i to e_j.

    With ``p = (1-s) e_i + s e_j`` the slack is a quadratic in ``s``; the
    minimum over [0, 1] is at an endpoint or at the vertex of the parabola.
    """
    g0 = c[i] - B[i, i]
    g1 = c[j] - B[j, j]
    # g(s) = g0 + (g1 - g0 - a) s + a s^2 with a = -(B_ii - 2 B_ij + B_jj)
    a = -(B[i, i] - 2 * B[i, j] + B[j, j])
    b = g1 - g0 - a
    best_s, best = (0.0, g0) if g0 <= g1 else (1.0, g1)
    if a > 0:
        s = -b / (2 * a)
        if 0 < s < 1:
            val = g0 + b * s + a * s * s
            if val < best:
                best_s, best = s, val
    return best_s, best


def _face_stationary(c, B, support):
    """Stationary point of ``c.p - p.Bp`` on the affine hull of a face, if unique."""
    k = len(support)
    idx = np.array(support)
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = 2 * B[np.ix_(idx, idx)]
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    rhs = np.append(c[idx], 1.0)
    if np.linalg.cond(K) > 1e12:
        # singular: any minimum in the relative interior is matched on the face boundary
        return None
    sol = np.linalg.solve(K, rhs)
    return sol[:k]


def _concave_on_simplex(B, tol) -> bool:
    """True iff ``-p.Bp`` is concave along the simplex, i.e. B is PSD on sum-zero vectors."""
    n = B.shape[0]
    if n == 1:
        return True
    # orthonormal basis of {v : sum v = 0}
    basis = np.linalg.qr(np.eye(n) - 1.0 / n, mode="reduced")[0][:, : n - 1]
    eig = np.linalg.eigvalsh(basis.T @ B @ basis)
    return bool(eig.min() >= -tol)


def is_dominant(
    q,
    A,
    tol: float = DEFAULT_TOL,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    max_exact_dim: int = 10,
) -> StrategyVerdict:
    """Check that ``q`` is a dominant mixed strategy: ``q.Ap >= p.Ap`` for all ``p``.

    The slack ``g(p) = q.Ap - p.Ap`` is checked at every pure strategy, in
    closed form along every edge, at the stationary point of every higher
    face (when ``n <= max_exact_dim``) and at ``samples`` Dirichlet draws.
    A quadratic attains its minimum over a polytope at a stationary point of
    some face, so the face sweep makes the check exact.  Without it the
    verdict is exact only for ``n <= 2`` or when ``g`` is concave; otherwise
    the result is ``INCONCLUSIVE`` unless a violation turns up.
    """
    q, A = _prep(q, A)
    n = q.size
    c = A.T @ q
    B = 0.5 * (A + A.T)

    best_val = np.inf
    best_p = None

    def consider(p, val):
        nonlocal best_val, best_p
        if val < best_val:
            best_val, best_p = val, p

    for i in range(n):
        consider(np.eye(n)[i], c[i] - B[i, i])
    for i, j in itertools.combinations(range(n), 2):
        s, val = _edge_minimum(c, B, i, j)
        p = np.zeros(n)
        p[i], p[j] = 1 - s, s
        consider(p, val)

    exact = n <= 2 or _concave_on_simplex(B, tol)
    if not exact and n <= max_exact_dim:
        for k in range(3, n + 1):
            for support in itertools.combinations(range(n), k):
                x = _face_stationary(c, B, support)
                if x is None or np.any(x < 0):
                    continue
                p = np.zeros(n)
                p[list(support)] = x
                consider(p, dominance_slack(q, A, p))
        exact = True

    if samples > 0 and n > 1:
        rng = np.random.default_rng(seed)
        draws = rng.dirichlet(np.ones(n), size=samples)
        AP = draws @ A.T
        vals = AP @ q - np.sum(draws * AP, axis=1)
        j = int(np.argmin(vals))
        consider(draws[j], float(vals[j]))

    margin = float(best_val)
    if margin < -tol:
        return StrategyVerdict(Status.FAILS, margin, best_p, exact=True,
                               detail="found p with q.Ap < p.Ap")
    if exact:
        return StrategyVerdict(Status.HOLDS, margin, exact=True)
    return StrategyVerdict(Status.INCONCLUSIVE, margin, exact=False,
                           detail="no violation sampled; global check not certified")


def _tangent_basis(support, n):
    """Orthonormal basis of sum-zero vectors supported on ``support``."""
    k = len(support)
    if k < 2:
        return np.zeros((n, 0))
    local = np.linalg.qr(np.eye(k) - 1.0 / k, mode="reduced")[0][:, : k - 1]
    basis = np.zeros((n, k - 1))
    basis[list(support)] = local
    return basis


def _ess_witness(q, v, support_mask):
    """Point ``q + s v`` as far along ``v`` as the face allows."""
    neg = v < 0
    s = np.min(q[neg] / -v[neg]) if np.any(neg) else 1.0
    p = np.clip(q + s * v, 0.0, None)
    p[~support_mask] = 0.0
    return p / p.sum()


def is_ess(
    q,
    A,
    tol: float = DEFAULT_TOL,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> StrategyVerdict:
    """Maynard Smith's evolutionarily stable state.

    Requires the Nash condition ``q.Aq >= p.Aq`` and, for every ``p != q``
    with ``p.Aq = q.Aq``, the strict inequality ``q.Ap > p.Ap``.

    Those ``p`` form the face spanned by the best replies to ``q``; on it
    the slack equals ``-(p-q).B(p-q)`` with ``B`` the symmetric part of
    ``A``, so strictness is measured by the curvature
    ``-(v.Bv)/|v|^2`` along directions ``v = p - q``; the margin reported
    is the least curvature found.
    """
    q, A = _prep(q, A)
    n = q.size
    nash = is_symmetric_nash(q, A, tol)
    if nash.status == Status.FAILS:
        return StrategyVerdict(Status.FAILS, nash.margin, nash.witness,
                               detail="not a symmetric Nash equilibrium")
    Aq = A @ q
    value = q @ Aq
    E = np.flatnonzero(Aq >= value - tol)
    in_E = np.zeros(n, dtype=bool)
    in_E[E] = True
    support = np.flatnonzero(q > 0)
    B = 0.5 * (A + A.T)

    if len(E) == 1:
        others = np.delete(value - Aq, E)
        gap = float(others.min()) if others.size else np.inf
        return StrategyVerdict(Status.HOLDS, gap, detail="strict Nash equilibrium")

    def curvature(v):
        return float(-(v @ B @ v) / (v @ v))

    if np.all(in_E[support]) and len(support) == len(E):
        # q interior to the best-reply face: exact eigenvalue test
        T = _tangent_basis(E, n)
        eig, vecs = np.linalg.eigh(T.T @ B @ T)
        margin = float(-eig.max())
        if margin > tol:
            return StrategyVerdict(Status.HOLDS, margin)
        v = T @ vecs[:, -1]
        return StrategyVerdict(Status.FAILS, margin, _ess_witness(q, v, in_E),
                               detail="invader does as well against itself")

    # q on the boundary of the best-reply face
    worst, worst_p = np.inf, None
    candidates = [np.eye(n)[j] for j in E]
    for i, j in itertools.combinations(E, 2):
        ei, ej = np.eye(n)[i], np.eye(n)[j]
        candidates.extend((1 - s) * ei + s * ej for s in np.linspace(0.05, 0.95, 19))
    if samples > 0:
        rng = np.random.default_rng(seed)
        draws = np.zeros((samples, n))
        draws[:, E] = rng.dirichlet(np.ones(len(E)), size=samples)
        candidates.extend(draws)
    for p in candidates:
        v = p - q
        if v @ v < 1e-24:
            continue
        cv = curvature(v)
        if cv < worst:
            worst, worst_p = cv, p
    margin = float(worst)
    if margin <= tol:
        return StrategyVerdict(Status.FAILS, margin, worst_p,
                               detail="invader does as well against itself")
    # one-dimensional face: the only direction is toward the other vertex
    if len(E) == 2:
        return StrategyVerdict(Status.HOLDS, margin)
    return StrategyVerdict(Status.INCONCLUSIVE, margin, exact=False,
                           detail="best-reply face has dimension >= 2; condition sampled")


def is_thomas_ess(
    q,
    A,
    tol: float = DEFAULT_TOL,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> StrategyVerdict:
    """Thomas's evolutionarily stable strategy: Nash and dominant."""
    nash = is_symmetric_nash(q, A, tol)
    dom = is_dominant(q, A, tol, samples, seed)
    status = min(nash.status, dom.status)
    if nash.status == Status.FAILS:
        return nash
    if dom.status == Status.FAILS:
        return dom
    return StrategyVerdict(status, min(nash.margin, dom.margin), exact=dom.exact,
                           detail=dom.detail)


def witness_violates(check: str, q, A, verdict: StrategyVerdict, tol: float = DEFAULT_TOL) -> bool:
    """Re-evaluate a failing verdict's witness against the raw condition."""
    A = _as_matrix(A)
    q = np.asarray(q, dtype=float)
    p = np.asarray(verdict.witness, dtype=float)
    if check == "nash":
        return bool(p @ A @ q - q @ A @ q > tol)
    if check == "dominant":
        return bool(dominance_slack(q, A, p) < -tol)
    raise ValueError(f"unknown check {check!r}")


# --------------------------------------------------------------------------
# text format


def parse_game_matrix(text: str) -> GameMatrix:
    """Read ``n`` followed by ``n`` rows of ``n`` reals; ``#`` starts a comment."""
    rows: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split("#", 1)[0]
        if line.strip():
            rows.append((lineno, line.split()))
    if not rows:
        raise ParseError("empty matrix file", 1)
    lineno, first = rows[0]
    if len(first) != 1:
        raise ParseError("first line must hold the dimension n", lineno)
    try:
        n = int(first[0])
    except ValueError:
        raise ParseError(f"bad dimension {first[0]!r}", lineno) from None
    if n < 1:
        raise ParseError("dimension must be >= 1", lineno)
    body = rows[1:]
    if len(body) != n:
        at = body[n][0] if len(body) > n else (body[-1][0] + 1 if body else lineno + 1)
        raise ParseError(f"expected {n} rows, found {len(body)}", at)
    entries = np.empty((n, n))
    for i, (lineno, toks) in enumerate(body):
        if len(toks) != n:
            raise ParseError(f"expected {n} entries, found {len(toks)}", lineno)
        for j, tok in enumerate(toks):
            try:
                entries[i, j] = float(tok)
            except ValueError:
                raise ParseError(f"bad number {tok!r}", lineno) from None
    try:
        return GameMatrix(entries)
    except ValidationError as exc:
        raise ParseError(str(exc), body[0][0]) from None


def format_game_matrix(A) -> str:
    """Inverse of :func:`parse_game_matrix`; floats use shortest round-trip repr."""
    A = _as_matrix(A)
    lines = [str(A.shape[0])]
    lines.extend(" ".join(repr(float(v)) for v in row) for row in A)
    return "\n".join(lines) + "\n"
