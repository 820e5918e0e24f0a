"""Continuous-time Markov processes on a finite state set.

Covers the Hamiltonian (infinitesimal stochastic generator), the master
equation ``p' = H p``, propagators ``exp(t H)``, steady states (one per
terminal strongly connected component) and the Boltzmann / free-energy
bookkeeping built on a chosen steady state.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InfiniteEnergyError, ParseError, ShapeError, ValidationError
from .infodiv import ProbDist, relative_info_array, shannon_entropy
from .numcore import matrix_exp, nullspace

STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class MarkovProcess:
    """States plus rate-labelled transitions ``(source, target, rate)``.

    Parallel transitions between the same pair of states are allowed and
    their rates add up in the Hamiltonian.
    """

    states: tuple[str, ...]
    transitions: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        states = tuple(str(s) for s in self.states)
        if len(set(states)) != len(states):
            raise ValidationError("state names must be distinct")
        n = len(states)
        clean = []
        for src, tgt, rate in self.transitions:
            src, tgt, rate = int(src), int(tgt), float(rate)
            if not (0 <= src < n and 0 <= tgt < n):
                raise ValidationError(f"transition {src}->{tgt} refers to a missing state")
            if src == tgt:
                raise ValidationError(f"self-loop at state {states[src]!r}")
            if not (rate > 0 and np.isfinite(rate)):
                raise ValidationError(f"rate {rate!r} must be positive and finite")
            clean.append((src, tgt, rate))
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "transitions", tuple(clean))

    @property
    def n(self) -> int:
        return len(self.states)

    @classmethod
    def from_rates(cls, states: Sequence[str], rates: dict) -> "MarkovProcess":
        """Build from ``{(source_name, target_name): rate}``."""
        index = {s: i for i, s in enumerate(states)}
        return cls(tuple(states), tuple((index[a], index[b], r) for (a, b), r in rates.items()))

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n), dtype=bool)
        for src, tgt, _ in self.transitions:
            adj[src, tgt] = True
        return adj


def hamiltonian(M: MarkovProcess) -> np.ndarray:
    """``H[i, j]`` = total rate from j to i; diagonal = minus total outflow."""
    H = np.zeros((M.n, M.n))
    for src, tgt, rate in M.transitions:
        H[tgt, src] += rate
        H[src, src] -= rate
    return H


def check_infinitesimal_stochastic(H, tol: float = STOCHASTIC_TOL) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ShapeError("Hamiltonian must be square")
    off = H[~np.eye(H.shape[0], dtype=bool)]
    if np.any(off < 0):
        raise ValidationError("off-diagonal entries must be nonnegative")
    scale = max(1.0, float(np.abs(H).max(initial=0.0)))
    if np.any(np.abs(H.sum(axis=0)) > tol * scale):
        raise ValidationError("columns must sum to zero")
    return H


def master_field(H):
    """Field ``p -> H p``.  ``H`` may also be a callable ``t -> H(t)``."""
    if callable(H):
        return lambda t, p: np.asarray(H(t)) @ p
    H = np.asarray(H, dtype=float)
    return lambda t, p: H @ p


def batched_master_field(H, batch: int):
    """Master equation for ``batch`` stacked distributions (one flat state)."""
    H = np.asarray(H, dtype=float)
    n = H.shape[0]
    return lambda t, x: (x.reshape(batch, n) @ H.T).ravel()


def propagator(H, t: float) -> np.ndarray:
    """Stochastic matrix ``G(t, 0) = exp(t H)``; tiny negative entries are clamped to 0."""
    if t < 0:
        raise ValidationError("propagator needs t >= 0")
    G = matrix_exp(H, t)
    return np.where(G < 0, 0.0, G)


def terminal_components(adj) -> list[np.ndarray]:
    """Strongly connected components with no edge leaving them, sorted by first state."""
    adj = np.asarray(adj, dtype=bool)
    n = adj.shape[0]
    if n == 0:
        return []
    ncomp, labels = connected_components(csr_matrix(adj), directed=True, connection="strong")
    leaves = np.zeros(ncomp, dtype=bool)
    leaves[:] = True
    src, tgt = np.nonzero(adj)
    leaves[labels[src][labels[src] != labels[tgt]]] = False
    comps = [np.flatnonzero(labels == c) for c in range(ncomp) if leaves[c]]
    return sorted(comps, key=lambda c: c[0])


def steady_states(M: MarkovProcess, tol: float = 1e-10) -> list[ProbDist]:
    """One steady state per terminal strongly connected component.

    Each is supported on its component and found from the nullspace of the
    Hamiltonian restricted to it.  Together they span all steady states.
    """
    H = hamiltonian(M)
    result = []
    for comp in terminal_components(M.adjacency()):
        sub = H[np.ix_(comp, comp)]
        basis = nullspace(sub, 1e-12)
        if basis.shape[0] != 1:
            raise ValidationError("irreducible component without a unique steady state")
        v = basis[0]
        v = v * np.sign(v.sum())
        v = np.clip(v, 0.0, None)
        q = np.zeros(M.n)
        q[comp] = v / v.sum()
        resid = np.max(np.abs(H @ q))
        if resid >= tol * max(1.0, np.abs(H).max()):
            raise ValidationError(f"steady state residual {resid:.3g} exceeds tolerance")
        result.append(ProbDist(q))
    return result


@dataclass(frozen=True, eq=False)
class EnergyModel:
    """Energies ``E_i`` at inverse temperature ``beta`` with partition function ``Z``.

    Boltzmann's constant is set to 1, so ``T = 1 / beta``.
    """

    beta: float
    energies: np.ndarray
    partition: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValidationError("beta must be positive")
        E = np.array(self.energies, dtype=float)
        if not np.all(np.isfinite(E)):
            raise ValidationError("energies must be finite")
        E.flags.writeable = False
        object.__setattr__(self, "energies", E)
        Z = float(np.sum(np.exp(-self.beta * E)))
        if abs(Z - self.partition) > 1e-12 * Z:
            raise ValidationError(f"partition {self.partition!r} != sum exp(-beta E) = {Z!r}")

    @classmethod
    def from_energies(cls, energies, beta: float = 1.0) -> "EnergyModel":
        E = np.asarray(energies, dtype=float)
        return cls(beta, E, float(np.sum(np.exp(-beta * E))))

    @property
    def temperature(self) -> float:
        return 1.0 / self.beta

    def __len__(self):
        return self.energies.size


def partition_function(energies, beta: float) -> float:
    return float(np.sum(np.exp(-beta * np.asarray(energies, dtype=float))))


def energies_from_steady_state(q, beta: float = 1.0, ground_state: int | None = None,
                               names: Sequence[str] | None = None) -> EnergyModel:
    """Energies making ``q`` a Boltzmann distribution, with ``E[ground_state] = 0``.

    ``E_i = -ln(q_i / q_ground) / beta``.  The ground state defaults to the
    most probable state.
    """
    q = ProbDist(q).weights
    if not beta > 0:
        raise ValidationError("beta must be positive")
    zero = np.flatnonzero(q == 0)
    if zero.size:
        i = int(zero[0])
        raise InfiniteEnergyError(names[i] if names else i)
    g = int(np.argmax(q)) if ground_state is None else int(ground_state)
    if not 0 <= g < q.size:
        raise ShapeError(f"ground state {g} out of range")
    E = -np.log(q / q[g]) / beta
    E[g] = 0.0
    return EnergyModel.from_energies(E, beta)


def boltzmann_distribution(energies, beta: float = 1.0) -> ProbDist:
    """``exp(-beta E_i) / Z``, shifted by the lowest energy to avoid overflow."""
    E = np.asarray(energies, dtype=float)
    if not np.all(np.isfinite(E)):
        raise ValidationError("energies must be finite")
    w = np.exp(-beta * (E - E.min()))
    return ProbDist(w / w.sum())


def expected_energy(p, model: EnergyModel) -> float:
    p = np.asarray(p, dtype=float)
    if p.size != model.energies.size:
        raise ShapeError("distribution and energies differ in length")
    return float(p @ model.energies)


def free_energy(p, model: EnergyModel) -> float:
    """``<E>_p - T S(p)``."""
    return expected_energy(p, model) - model.temperature * shannon_entropy(p)


def free_energy_monitor(model: EnergyModel) -> Callable[[np.ndarray], float]:
    """Unvalidated free energy for trajectory states (tolerates tiny drift off the simplex)."""
    E = model.energies
    T = model.temperature

    def F(p):
        nz = p > 0
        return float(p @ E + T * np.sum(p[nz] * np.log(p[nz])))

    return F


def relative_info_monitor(q):
    q = np.asarray(q, dtype=float)
    return lambda p: relative_info_array(p, q)


# --------------------------------------------------------------------------
# text format

_ARROW = re.compile(r"^\s*(\S+)\s*->\s*(\S+)\s*:\s*(\S+)\s*$")


def parse_markov(text: str) -> MarkovProcess:
    """Parse ``states: a b c`` followed by ``a -> b : rate`` lines."""
    states: list[str] | None = None
    transitions = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split("#", 1)[0].rstrip("\n")
        if not line.strip():
            continue
        stripped = line.strip()
        col = line.index(stripped[0]) + 1
        if stripped.startswith("states:"):
            if states is not None:
                raise ParseError("duplicate states line", lineno, col)
            states = stripped[len("states:"):].split()
            if len(set(states)) != len(states):
                raise ParseError("duplicate state name", lineno, col)
            continue
        m = _ARROW.match(line)
        if m is None:
            raise ParseError("expected 'source -> target : rate'", lineno, col)
        if states is None:
            raise ParseError("transition before 'states:' line", lineno, col)
        index = {s: i for i, s in enumerate(states)}
        src, tgt, rate_tok = m.groups()
        for name, pos in ((src, m.start(1)), (tgt, m.start(2))):
            if name not in index:
                raise ParseError(f"unknown state {name!r}", lineno, pos + 1)
        try:
            rate = float(rate_tok)
        except ValueError:
            raise ParseError(f"bad rate {rate_tok!r}", lineno, m.start(3) + 1) from None
        if not (rate > 0 and np.isfinite(rate)):
            raise ParseError(f"rate must be positive, got {rate_tok}", lineno, m.start(3) + 1)
        if src == tgt:
            raise ParseError("self-loop", lineno, m.start(2) + 1)
        transitions.append((index[src], index[tgt], rate))
    if states is None:
        raise ParseError("missing 'states:' line", 1)
    return MarkovProcess(tuple(states), tuple(transitions))


def format_markov(M: MarkovProcess) -> str:
    lines = ["states: " + " ".join(M.states)]
    lines.extend(f"{M.states[s]} -> {M.states[t]} : {r!r}" for s, t, r in M.transitions)
    return "\n".join(lines) + "\n"
