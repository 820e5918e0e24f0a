"""Reaction networks with mass-action rate equations.

A network has species, complexes (natural-number vectors over species) and
reactions between complexes with positive rate constants.  This module
parses and writes a small line-oriented text format, builds the rate
equation, checks complex balance, finds conservation laws and embeds
single-species networks as Markov processes.
"""

from __future__ import annotations

import io
import re
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    NoEquilibriumError,
    NotMarkovNetworkError,
    ParseError,
    ShapeError,
    ValidationError,
)
from .infodiv import relative_info_array
from .markov import MarkovProcess
from .numcore import IntegratorConfig, integrate, nullspace

Complex = tuple[int, ...]


@dataclass(frozen=True)
class StoichiometricData:
    """Source, target and net stoichiometry, one row per reaction."""

    source: np.ndarray
    target: np.ndarray
    net: np.ndarray


@dataclass(frozen=True)
class ReactionNetwork:
    """Species, complexes and reactions ``(source complex, target complex, rate)``.

    Complexes are stored in order of first use by the reactions, so two
    networks listing the same reactions in the same order compare equal.
    """

    species: tuple[str, ...]
    complexes: tuple[Complex, ...]
    reactions: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        species = tuple(str(s) for s in self.species)
        if len(set(species)) != len(species):
            raise ValidationError("species names must be distinct")
        k = len(species)
        complexes = [tuple(int(c) for c in cx) for cx in self.complexes]
        for cx in complexes:
            if len(cx) != k or any(c < 0 for c in cx):
                raise ValidationError(f"complex {cx} is not a vector of naturals of length {k}")
        if len(set(complexes)) != len(complexes):
            raise ValidationError("complexes must be distinct")
        order: dict[int, int] = {}
        reactions = []
        for src, tgt, rate in self.reactions:
            src, tgt, rate = int(src), int(tgt), float(rate)
            if not (0 <= src < len(complexes) and 0 <= tgt < len(complexes)):
                raise ValidationError("reaction refers to a missing complex")
            if src == tgt:
                raise ValidationError(f"reaction with identical source and target {complexes[src]}")
            if not (rate > 0 and np.isfinite(rate)):
                raise ValidationError(f"rate {rate!r} must be positive and finite")
            for c in (src, tgt):
                order.setdefault(c, len(order))
            reactions.append((src, tgt, rate))
        if len(order) != len(complexes):
            raise ValidationError("every complex must take part in a reaction")
        canon = [None] * len(complexes)
        for old, new in order.items():
            canon[new] = complexes[old]
        reactions = [(order[s], order[t], r) for s, t, r in reactions]
        object.__setattr__(self, "species", species)
        object.__setattr__(self, "complexes", tuple(canon))
        object.__setattr__(self, "reactions", tuple(reactions))

    @classmethod
    def from_reactions(cls, species: Sequence[str], reactions) -> "ReactionNetwork":
        """Build from ``[(source_vector, target_vector, rate), ...]``."""
        complexes: dict[Complex, int] = {}
        idx = []
        for src, tgt, rate in reactions:
            pair = []
            for cx in (src, tgt):
                cx = tuple(int(c) for c in cx)
                pair.append(complexes.setdefault(cx, len(complexes)))
            idx.append((pair[0], pair[1], rate))
        return cls(tuple(species), tuple(complexes), tuple(idx))

    @property
    def k(self) -> int:
        return len(self.species)

    def stoichiometry(self) -> StoichiometricData:
        k = self.k
        src = np.array([self.complexes[s] for s, _, _ in self.reactions], dtype=int).reshape(-1, k)
        tgt = np.array([self.complexes[t] for _, t, _ in self.reactions], dtype=int).reshape(-1, k)
        return StoichiometricData(src, tgt, tgt - src)

    @property
    def rates(self) -> np.ndarray:
        return np.array([r for _, _, r in self.reactions], dtype=float)

    def complex_label(self, i: int) -> str:
        return format_complex(self.complexes[i], self.species)


def _monomials(P, source):
    # 0 ** 0 == 1 in numpy, which gives births a constant flux
    return np.prod(np.power(P[None, :], source), axis=1)


def reaction_fluxes(N: ReactionNetwork, P) -> np.ndarray:
    """``r(tau) P^{s(tau)}`` for each reaction."""
    P = np.asarray(P, dtype=float)
    if P.shape != (N.k,):
        raise ShapeError(f"expected population of length {N.k}")
    return N.rates * _monomials(P, N.stoichiometry().source)


def rate_field(N: ReactionNetwork):
    """Mass-action field ``P -> sum_tau r(tau) (t(tau) - s(tau)) P^{s(tau)}``."""
    st = N.stoichiometry()
    source = st.source.astype(float)
    weighted_net = (st.net * N.rates[:, None]).T  # k x |T|

    def fieldfn(t, P):
        return weighted_net @ np.prod(np.power(P[None, :], source), axis=1)

    return fieldfn


def rate_jacobian(N: ReactionNetwork, P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    st = N.stoichiometry()
    src = st.source
    dflux = np.zeros((len(N.reactions), N.k))
    for i in range(N.k):
        active = src[:, i] > 0
        if not np.any(active):
            continue
        lowered = src[active].copy()
        lowered[:, i] -= 1
        dflux[active, i] = N.rates[active] * src[active, i] * np.prod(np.power(P, lowered), axis=1)
    return st.net.T @ dflux


def rate_polynomials(N: ReactionNetwork, rates=None) -> dict[str, dict[Complex, object]]:
    """Rate equation as ``{species: {monomial exponents: coefficient}}``.

    ``rates`` may replace the numeric rate constants with any objects that
    support ``+`` and ``*`` (symbolic variables, for instance), which makes
    the result coefficient-exact.
    """
    rates = list(N.rates) if rates is None else list(rates)
    if len(rates) != len(N.reactions):
        raise ShapeError("one rate per reaction required")
    out: dict[str, dict[Complex, object]] = {s: {} for s in N.species}
    for (src, tgt, _), r in zip(N.reactions, rates):
        s, t = N.complexes[src], N.complexes[tgt]
        for i, name in enumerate(N.species):
            change = t[i] - s[i]
            if change == 0:
                continue
            terms = out[name]
            terms[s] = terms[s] + change * r if s in terms else change * r
    return out


@dataclass(frozen=True, eq=False)
class BalanceReport:
    """Per-complex residual, production minus consumption, at the tested point.

    ``balanced`` iff every ``|residual| <= tolerance * scale`` where
    ``scale`` is the largest per-complex throughput, floored at 1.
    """

    balanced: bool
    residuals: np.ndarray
    tolerance: float
    scale: float
    field_residual: float

    def to_dict(self, labels=None) -> dict:
        res = [float(r) for r in self.residuals]
        return {
            "balanced": self.balanced,
            "residuals": dict(zip(labels, res)) if labels else res,
            "tolerance": self.tolerance,
            "scale": self.scale,
            "field_residual": self.field_residual,
        }


def complex_throughput(N: ReactionNetwork, Q) -> tuple[np.ndarray, np.ndarray]:
    """Outflow and inflow of every complex at population ``Q``."""
    flux = reaction_fluxes(N, Q)
    m = len(N.complexes)
    out = np.zeros(m)
    inflow = np.zeros(m)
    for (src, tgt, _), f in zip(N.reactions, flux):
        out[src] += f
        inflow[tgt] += f
    return out, inflow


def is_complex_balanced(N: ReactionNetwork, Q, tol: float = 1e-9) -> BalanceReport:
    """Check that each complex is produced at the rate it is consumed."""
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (N.k,):
        raise ShapeError(f"expected population of length {N.k}")
    if np.any(Q < 0) or not np.all(np.isfinite(Q)):
        raise ValidationError("population must be finite and nonnegative")
    out, inflow = complex_throughput(N, Q)
    residuals = inflow - out
    scale = max(1.0, float(np.max(np.maximum(out, inflow), initial=0.0)))
    balanced = bool(np.all(np.abs(residuals) <= tol * scale))
    field = rate_field(N)(0.0, Q)
    field_residual = float(np.max(np.abs(field), initial=0.0))
    if balanced:
        # a complex balanced point is a steady state
        mass = np.array(N.complexes, dtype=float).reshape(-1, N.k).sum(axis=0)
        bound = max(1.0, float(mass.max(initial=0.0))) * tol * scale * (1 + 1e-6)
        assert field_residual <= max(bound, N.k * tol * scale), field_residual
    return BalanceReport(balanced, residuals, tol, scale, field_residual)


def conservation_laws(N: ReactionNetwork, tol: float = 1e-10) -> np.ndarray:
    """Basis of vectors ``c`` with ``c . (t(tau) - s(tau)) = 0`` for every reaction.

    Rows are returned in reduced row echelon form, scaled so the leading
    entry is 1; integer-valued laws such as ``E + I`` come out exactly.
    """
    net = N.stoichiometry().net.astype(float)
    basis = nullspace(net if net.size else np.zeros((0, N.k)), tol)
    if basis.shape[0] == 0:
        return basis
    R = _rref(basis, 1e-9)
    return np.where(np.abs(R - np.round(R)) < 1e-9, np.round(R), R) + 0.0


def _rref(M, tol):
    A = np.array(M, dtype=float)
    rows, cols = A.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        pivot = r + int(np.argmax(np.abs(A[r:, c])))
        if abs(A[pivot, c]) < tol:
            continue
        A[[r, pivot]] = A[[pivot, r]]
        A[r] /= A[r, c]
        for i in range(rows):
            if i != r:
                A[i] -= A[i, c] * A[r]
        r += 1
    return A[:r]


def format_conservation_law(c, species) -> str:
    terms = []
    for coef, name in zip(c, species):
        if coef == 0:
            continue
        mag = abs(coef)
        body = name if mag == 1 else f"{float(mag):g}*{name}"
        sign = "-" if coef < 0 else "+"
        terms.append((sign, body))
    if not terms:
        return "0"
    text = ("-" if terms[0][0] == "-" else "") + terms[0][1]
    for sign, body in terms[1:]:
        text += f"{sign}{body}"
    return text


def to_markov(N: ReactionNetwork) -> MarkovProcess:
    """View a network whose complexes are all single species as a Markov process."""
    state_of = []
    for i, cx in enumerate(N.complexes):
        nz = [j for j, c in enumerate(cx) if c]
        if len(nz) != 1 or cx[nz[0]] != 1:
            raise NotMarkovNetworkError(N.complex_label(i))
        state_of.append(nz[0])
    return MarkovProcess(
        N.species, tuple((state_of[s], state_of[t], r) for s, t, r in N.reactions)
    )


def population_info_monitor(Q):
    Q = np.asarray(Q, dtype=float)
    return lambda P: relative_info_array(P, Q)


def find_equilibrium(
    N: ReactionNetwork,
    P0,
    horizon: float = 100.0,
    config: IntegratorConfig | None = None,
    max_newton: int = 100,
) -> np.ndarray:
    """Steady state reached from ``P0``: integrate, then polish with Newton.

    Newton steps are taken within the stoichiometric class of the integrated
    end point (conservation laws are appended as extra equations) and are
    damped to keep the populations nonnegative.  The result is a steady
    state; whether it is complex balanced must be checked separately.
    """
    P0 = np.asarray(P0, dtype=float)
    if P0.shape != (N.k,) or np.any(P0 < 0):
        raise ValidationError("P0 must be a nonnegative population of matching length")
    fieldfn = rate_field(N)

    def small(P, F):
        return np.max(np.abs(F), initial=0.0) < 1e-10 * (1 + np.max(np.abs(P), initial=0.0))

    if small(P0, fieldfn(0.0, P0)):
        return P0.copy()
    cfg = config or IntegratorConfig(state_floor=1e-300)
    P = integrate(fieldfn, P0, horizon, cfg).final
    C = conservation_laws(N)
    target = C @ P
    for _ in range(max_newton):
        F = fieldfn(0.0, P)
        if small(P, F):
            return P
        G = np.concatenate([F, C @ P - target])
        J = np.vstack([rate_jacobian(N, P), C])
        step = np.linalg.lstsq(J, -G, rcond=None)[0]
        lam = 1.0
        norm0 = np.linalg.norm(G)
        while lam > 1e-8:
            trial = np.maximum(P + lam * step, 0.0)
            Gt = np.concatenate([fieldfn(0.0, trial), C @ trial - target])
            if np.linalg.norm(Gt) < norm0 or lam < 1e-6:
                break
            lam *= 0.5
        P = trial
    F = fieldfn(0.0, P)
    if small(P, F):
        return P
    raise NoEquilibriumError(P, float(np.max(np.abs(F))))


# --------------------------------------------------------------------------
# text format

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT = re.compile(r"[0-9]+")
_WS = re.compile(r"[ \t]*")


class _Scanner:
    def __init__(self, line, lineno):
        self.line = line
        self.lineno = lineno
        self.pos = 0

    def skip(self):
        self.pos = _WS.match(self.line, self.pos).end()

    def error(self, msg, pos=None):
        raise ParseError(msg, self.lineno, (self.pos if pos is None else pos) + 1)

    def peek(self, s):
        self.skip()
        return self.line.startswith(s, self.pos)

    def expect(self, s):
        if not self.peek(s):
            self.error(f"expected {s!r}")
        self.pos += len(s)

    def complex(self) -> dict[str, int]:
        self.skip()
        start = self.pos
        m = _INT.match(self.line, self.pos)
        if m and m.group() == "0" and not _NAME.match(self.line, m.end()):
            after = _WS.match(self.line, m.end()).end()
            if not _NAME.match(self.line, after):
                self.pos = m.end()
                return {}
        terms: dict[str, int] = {}
        while True:
            self.skip()
            tstart = self.pos
            coef = 1
            m = _INT.match(self.line, self.pos)
            if m:
                coef = int(m.group())
                if coef < 1:
                    self.error("coefficient must be >= 1", tstart)
                self.pos = m.end()
                self.skip()
            m = _NAME.match(self.line, self.pos)
            if not m:
                self.error("expected species name")
            name = m.group()
            self.pos = m.end()
            terms[name] = terms.get(name, 0) + coef
            if not self.peek("+"):
                break
            self.pos += 1
        if self.pos == start:
            self.error("empty complex")
        return terms


def parse_network(text: str) -> ReactionNetwork:
    """Parse the line-oriented reaction format.

    Each non-comment line is ``complex -> complex : rate`` where a complex is
    ``0`` or ``[n] Species + ...``.  An optional ``species: A B C`` line
    fixes the species order; otherwise species are ordered by first
    appearance.  Duplicate reactions produce a warning and are kept.
    """
    declared: list[str] | None = None
    seen: list[str] = []
    raw_reactions = []
    keys = set()
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split("#", 1)[0].rstrip("\r\n")
        if not line.strip():
            continue
        sc = _Scanner(line, lineno)
        if line.strip().startswith("species:"):
            if declared is not None or raw_reactions:
                sc.error("'species:' must come once, before any reaction", line.index("s"))
            declared = line.split(":", 1)[1].split()
            for name in declared:
                if not _NAME.fullmatch(name):
                    sc.error(f"bad species name {name!r}", line.index(name))
            if len(set(declared)) != len(declared):
                sc.error("duplicate species name", line.index("s"))
            seen.extend(declared)
            continue
        src = sc.complex()
        sc.expect("->")
        tgt = sc.complex()
        sc.expect(":")
        sc.skip()
        rstart = sc.pos
        tok = line[rstart:].strip()
        try:
            rate = float(tok)
        except ValueError:
            sc.error(f"bad rate {tok!r}", rstart)
        if not (rate > 0 and np.isfinite(rate)):
            sc.error(f"rate must be positive, got {tok}", rstart)
        for name in list(src) + list(tgt):
            if name not in seen:
                if declared is not None:
                    sc.error(f"species {name!r} not declared", line.index(name))
                seen.append(name)
        if src == tgt:
            sc.error("source and target complexes are identical", 0)
        key = (tuple(sorted(src.items())), tuple(sorted(tgt.items())), rate)
        if key in keys:
            warnings.warn(f"line {lineno}: duplicate reaction kept", stacklevel=2)
        keys.add(key)
        raw_reactions.append((src, tgt, rate))
    species = tuple(seen)

    def vec(terms):
        return tuple(terms.get(s, 0) for s in species)

    return ReactionNetwork.from_reactions(
        species, [(vec(s), vec(t), r) for s, t, r in raw_reactions]
    )


def format_complex(cx: Complex, species: Sequence[str]) -> str:
    terms = [name if c == 1 else f"{c} {name}" for c, name in zip(cx, species) if c]
    return " + ".join(terms) if terms else "0"


def format_network(N: ReactionNetwork) -> str:
    """Serialize with an explicit ``species:`` line; rates use shortest repr."""
    lines = ["species: " + " ".join(N.species)]
    for s, t, r in N.reactions:
        lines.append(
            f"{format_complex(N.complexes[s], N.species)} -> "
            f"{format_complex(N.complexes[t], N.species)} : {r!r}"
        )
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# models from the literature


def michaelis_menten(alpha=1.0, beta=1.0, gamma=1.0) -> ReactionNetwork:
    """Enzyme E binds substrate S into I, which releases E and product P."""
    return parse_network(
        f"species: E S I P\nE + S -> I : {alpha!r}\nI -> E + S : {beta!r}\nI -> E + P : {gamma!r}\n"
    )


def hiv_model(alpha=1.0, beta=1.0, gamma=1.0, delta=1.0, epsilon=1.0, zeta=1.0) -> ReactionNetwork:
    """Healthy cells H, infected cells I and virions V."""
    return parse_network(
        "species: H I V\n"
        f"0 -> H : {alpha!r}\n"
        f"H -> 0 : {beta!r}\n"
        f"H + V -> I : {gamma!r}\n"
        f"I -> I + V : {delta!r}\n"
        f"I -> 0 : {epsilon!r}\n"
        f"V -> 0 : {zeta!r}\n"
    )


def predator_prey(alpha=1.0, beta=1.0, gamma=1.0) -> ReactionNetwork:
    """Rabbits R and wolves W as a reaction network."""
    return parse_network(
        f"species: R W\nR -> 2 R : {alpha!r}\nR + W -> 2 W : {beta!r}\nW -> 0 : {gamma!r}\n"
    )
