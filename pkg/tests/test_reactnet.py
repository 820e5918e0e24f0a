import math
import warnings

import numpy as np
import pytest
import sympy

from relinfo.errors import NoEquilibriumError, NotMarkovNetworkError, ParseError, ShapeError, ValidationError
from relinfo.infodiv import population_relative_information
from relinfo.markov import batched_master_field, hamiltonian, master_field, steady_states
from relinfo.numcore import integrate, is_nonincreasing
from relinfo.reactnet import (
    ReactionNetwork,
    conservation_laws,
    find_equilibrium,
    format_conservation_law,
    format_network,
    hiv_model,
    is_complex_balanced,
    michaelis_menten,
    parse_network,
    population_info_monitor,
    predator_prey,
    rate_field,
    rate_jacobian,
    rate_polynomials,
    reaction_fluxes,
    to_markov,
)

AB = "A -> B : 1.0\nB -> A : 2.0\n"
CYCLE = "A -> B : 1.0\nB -> C : 2.0\nC -> A : 3.0\n"


def loop_field(N, P):
    # mass action written out reaction by reaction
    out = [0.0] * N.k
    for s, t, r in N.reactions:
        src, tgt = N.complexes[s], N.complexes[t]
        mono = 1.0
        for i in range(N.k):
            mono *= P[i] ** src[i]
        for i in range(N.k):
            out[i] += r * (tgt[i] - src[i]) * mono
    return out


def random_markov_network(rng, k):
    names = [f"X{i}" for i in range(k)]
    eye = np.eye(k, dtype=int)
    reactions = [(eye[i], eye[(i + 1) % k], rng.uniform(0.05, 2.0)) for i in range(k)]
    reactions += [(eye[i], eye[j], rng.uniform(0.05, 2.0)) for i in range(k) for j in range(k)
                  if i != j and j != (i + 1) % k and rng.random() < 0.4]
    return ReactionNetwork.from_reactions(names, reactions)


# ------------------------------------------------------------------ parser


def test_parse_binding_reaction():
    N = parse_network("E + S -> I : 0.5\n")
    assert N.species == ("E", "S", "I")
    assert N.complexes == ((1, 1, 0), (0, 0, 1))
    assert N.reactions == ((0, 1, 0.5),)


def test_parse_empty_source():
    N = parse_network("0 -> H : 1.0\n")
    assert N.species == ("H",)
    assert N.complexes[N.reactions[0][0]] == (0,)


def test_parse_coefficient():
    N = parse_network("2 W -> W : 0.1\n")
    st = N.stoichiometry()
    assert st.source.tolist() == [[2]]
    assert st.net.tolist() == [[-1]]
    assert np.array_equal(st.net, st.target - st.source)


def test_parse_demo_models(models):
    mm = parse_network((models / "mm.rn").read_text())
    assert mm.species == ("E", "S", "I", "P")
    assert len(mm.reactions) == 3 and len(mm.complexes) == 3
    hiv = parse_network((models / "hiv.rn").read_text())
    assert hiv.species == ("H", "V", "I")
    assert len(hiv.reactions) == 6


def test_species_directive_fixes_order():
    N = parse_network("species: P I S E\nE + S -> I : 1\n")
    assert N.species == ("P", "I", "S", "E")
    assert N.complexes[0] == (0, 0, 1, 1)


def test_duplicate_reaction_warns_and_is_kept():
    with pytest.warns(UserWarning, match="line 2"):
        N = parse_network("A -> B : 1\nA -> B : 1\n")
    assert len(N.reactions) == 2
    f = rate_field(N)(0.0, np.array([1.0, 0.0]))
    assert f.tolist() == [-2.0, 2.0]


def test_parallel_reactions_with_different_rates_do_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        N = parse_network("A -> B : 1\nA -> B : 2\n")
    assert len(N.reactions) == 2


@pytest.mark.parametrize("text, line, column", [
    ("A -> B\n", 1, 7),
    ("A B -> C : 1\n", 1, 3),
    ("A -> B : 0\n", 1, 10),
    ("A -> B : -2\n", 1, 10),
    ("A -> B : fast\n", 1, 10),
    ("A -> B : 1\n+ A -> B : 1\n", 2, 1),
    ("A -> B : 1\n\n  A -> 3 : 1\n", 3, 10),
    ("A -> A : 1\n", 1, 1),
    ("0 B -> A : 1\n", 1, 1),
    ("species: A\nA -> B : 1\n", 2, 6),
    ("A -> B : 1\nspecies: A B\n", 2, 1),
    ("A => B : 1\n", 1, 3),
])
def test_parse_errors_carry_position(text, line, column):
    with pytest.raises(ParseError) as info:
        parse_network(text)
    assert (info.value.line, info.value.column) == (line, column)


def test_round_trip(models, rng):
    for path in sorted(models.glob("*.rn")):
        N = parse_network(path.read_text())
        assert parse_network(format_network(N)) == N
    for _ in range(20):
        N = random_markov_network(rng, int(rng.integers(2, 6)))
        text = format_network(N)
        assert parse_network(text) == N
        assert format_network(parse_network(text)) == text


def test_network_validation():
    with pytest.raises(ValidationError):
        ReactionNetwork(("A",), ((1,), (0,)), ((0, 1, 0.0),))
    with pytest.raises(ValidationError):
        ReactionNetwork(("A",), ((1,), (1,)), ((0, 1, 1.0),))
    with pytest.raises(ValidationError):
        ReactionNetwork(("A",), ((1,), (0,), (2,)), ((0, 1, 1.0),))
    with pytest.raises(ValidationError):
        ReactionNetwork(("A",), ((-1,), (0,)), ((0, 1, 1.0),))


# ------------------------------------------------------------- rate field


def test_michaelis_menten_rate_equation(rng):
    a, b, g = 0.5, 0.3, 0.1
    field = rate_field(michaelis_menten(a, b, g))
    for _ in range(20):
        E, S, I, P = rng.uniform(0, 5, size=4)
        expected = [-a * E * S + b * I + g * I,
                    -a * E * S + b * I,
                    a * E * S - b * I - g * I,
                    g * I]
        np.testing.assert_allclose(field(0.0, np.array([E, S, I, P])), expected, rtol=1e-13, atol=1e-14)


def test_hiv_rate_equation(rng):
    a, b, g, d, e, z = 10.0, 0.1, 0.01, 5.0, 0.5, 3.0
    field = rate_field(hiv_model(a, b, g, d, e, z))
    for _ in range(20):
        H, I, V = rng.uniform(0, 50, size=3)
        expected = [a - b * H - g * H * V, g * H * V - e * I, -g * H * V + d * I - z * V]
        np.testing.assert_allclose(field(0.0, np.array([H, I, V])), expected, rtol=1e-13, atol=1e-12)


def test_predator_prey_rate_equation(rng):
    a, b, g = 1.0, 0.5, 0.8
    field = rate_field(predator_prey(a, b, g))
    for _ in range(20):
        R, W = rng.uniform(0, 5, size=2)
        expected = [a * R - b * R * W, b * R * W - g * W]
        np.testing.assert_allclose(field(0.0, np.array([R, W])), expected, rtol=1e-13, atol=1e-14)


def test_zero_to_the_zero_is_one():
    N = parse_network("0 -> A : 2.5\nA -> 0 : 1\n")
    np.testing.assert_array_equal(rate_field(N)(0.0, np.zeros(1)), [2.5])


def test_rate_field_matches_loop_oracle(models, rng):
    for path in sorted(models.glob("*.rn")):
        N = parse_network(path.read_text())
        for _ in range(10):
            P = rng.uniform(0, 3, size=N.k)
            np.testing.assert_allclose(rate_field(N)(0.0, P), loop_field(N, P), rtol=1e-13, atol=1e-13)


def test_symbolic_rate_polynomials():
    a, b, g, d, e, z = sympy.symbols("alpha beta gamma delta epsilon zeta", positive=True)
    H, I, V = sympy.symbols("H I V")
    N = hiv_model()
    polys = rate_polynomials(N, [a, b, g, d, e, z])
    sym = {name: sum(c * H ** m[0] * I ** m[1] * V ** m[2] for m, c in polys[name].items())
           for name in N.species}
    assert sympy.expand(sym["H"] - (a - b * H - g * H * V)) == 0
    assert sympy.expand(sym["I"] - (g * H * V - e * I)) == 0
    assert sympy.expand(sym["V"] - (-g * H * V + d * I - z * V)) == 0


def test_jacobian_matches_finite_differences(models, rng):
    for path in sorted(models.glob("*.rn")):
        N = parse_network(path.read_text())
        P = rng.uniform(0.5, 3, size=N.k)
        f = rate_field(N)
        h = 1e-6
        fd = np.column_stack([(f(0.0, P + h * ei) - f(0.0, P - h * ei)) / (2 * h)
                              for ei in np.eye(N.k)])
        np.testing.assert_allclose(rate_jacobian(N, P), fd, rtol=1e-6, atol=1e-6)


def test_fluxes_shape_check():
    with pytest.raises(ShapeError):
        reaction_fluxes(parse_network(AB), [1.0])


# ---------------------------------------------------------------- balance


def test_ab_balanced_at_two_one():
    rep = is_complex_balanced(parse_network(AB), [2.0, 1.0])
    assert rep.balanced
    assert np.all(rep.residuals == 0.0)


def test_ab_residual_at_one_one():
    N = parse_network(AB)
    rep = is_complex_balanced(N, [1.0, 1.0])
    assert not rep.balanced
    a_index = N.complexes.index((1, 0))
    # production of A (beta Q_B = 2) minus consumption (alpha Q_A = 1)
    assert rep.residuals[a_index] == pytest.approx(1.0)
    assert rep.to_dict([N.complex_label(i) for i in range(2)])["residuals"]["A"] == 1.0


def test_michaelis_menten_balanced_at_zero():
    rep = is_complex_balanced(michaelis_menten(0.5, 0.3, 0.1), np.zeros(4))
    assert rep.balanced and rep.scale == 1.0


def test_cycle_balanced_point():
    N = parse_network(CYCLE)
    # flux around the cycle is equal when Q_A : Q_B : Q_C = 1 : 1/2 : 1/3
    assert is_complex_balanced(N, [6.0, 3.0, 2.0]).balanced
    assert not is_complex_balanced(N, [1.0, 1.0, 1.0]).balanced


def test_balance_rejects_bad_population():
    N = parse_network(AB)
    with pytest.raises(ValidationError):
        is_complex_balanced(N, [-1.0, 1.0])
    with pytest.raises(ShapeError):
        is_complex_balanced(N, [1.0])


def test_single_species_steady_state_is_balanced():
    N = parse_network("A -> B : 1\nB -> A : 1\nB -> C : 1\nC -> B : 1\nA -> C : 1\nC -> A : 2\n")
    P = find_equilibrium(N, np.array([1.0, 1.0, 1.0]))
    assert np.max(np.abs(rate_field(N)(0.0, P))) < 1e-9
    assert is_complex_balanced(N, P).balanced


def test_steady_but_not_complex_balanced():
    # complex 2A is consumed but never produced, so no positive point balances it
    N = parse_network("A -> B : 1\nB -> A : 1\n2 A -> A + B : 1\n")
    P = find_equilibrium(N, np.array([1.0, 1.0]))
    assert np.all(P > 0.1)
    assert np.max(np.abs(rate_field(N)(0.0, P))) < 1e-9
    rep = is_complex_balanced(N, P)
    assert not rep.balanced
    assert rep.residuals[N.complexes.index((2, 0))] == pytest.approx(-P[0] ** 2)


# ---------------------------------------------------------- equilibrium


def test_find_equilibrium_ab():
    P = find_equilibrium(parse_network(AB), np.array([3.0, 0.0]))
    np.testing.assert_allclose(P, [2.0, 1.0], atol=1e-9)


def test_find_equilibrium_zero_network():
    N = ReactionNetwork(("A", "B"), (), ())
    P0 = np.array([0.3, 4.0])
    assert np.array_equal(find_equilibrium(N, P0), P0)


def test_find_equilibrium_agrees_with_markov(rng):
    for _ in range(10):
        N = random_markov_network(rng, int(rng.integers(2, 6)))
        P0 = rng.dirichlet(np.ones(N.k))
        P = find_equilibrium(N, P0)
        (q,) = steady_states(to_markov(N))
        np.testing.assert_allclose(P, q.weights, atol=1e-8)


def test_find_equilibrium_mm_conserves():
    N = michaelis_menten(0.5, 0.3, 0.1)
    P0 = np.array([1.0, 2.0, 0.0, 0.0])
    P = find_equilibrium(N, P0, horizon=500.0)
    C = conservation_laws(N)
    np.testing.assert_allclose(C @ P, C @ P0, atol=1e-8)


def test_find_equilibrium_reports_failure():
    # a constant birth has no steady state anywhere
    N = parse_network("0 -> A : 1\n")
    with pytest.raises(NoEquilibriumError) as info:
        find_equilibrium(N, np.array([1.0]), horizon=1.0, max_newton=3)
    assert info.value.residual == pytest.approx(1.0)


def test_find_equilibrium_validates_p0():
    with pytest.raises(ValidationError):
        find_equilibrium(parse_network(AB), np.array([-1.0, 1.0]))


# ------------------------------------------------------------- embedding


def test_to_markov_ab():
    M = to_markov(parse_network(AB))
    assert M.states == ("A", "B")
    assert M.transitions == ((0, 1, 1.0), (1, 0, 2.0))


def test_to_markov_rejects_binding():
    with pytest.raises(NotMarkovNetworkError) as info:
        to_markov(michaelis_menten())
    assert "E + S" in str(info.value)


def test_to_markov_rejects_empty_and_doubled_complexes():
    with pytest.raises(NotMarkovNetworkError):
        to_markov(parse_network("0 -> A : 1\n"))
    with pytest.raises(NotMarkovNetworkError):
        to_markov(parse_network("2 A -> B : 1\n"))


def test_cycle_embedding_agrees(rng):
    N = parse_network(CYCLE)
    M = to_markov(N)
    assert M.n == 3
    H = hamiltonian(M)
    f, g = rate_field(N), master_field(H)
    for _ in range(100):
        P = rng.uniform(0, 10, size=3)
        assert np.max(np.abs(f(0.0, P) - g(0.0, P))) < 1e-12


# --------------------------------------------------------- conservation


def test_michaelis_menten_conservation_laws():
    C = conservation_laws(michaelis_menten())
    np.testing.assert_array_equal(C, [[1, 0, 1, 0], [0, 1, 1, 1]])
    assert [format_conservation_law(c, ("E", "S", "I", "P")) for c in C] == ["E+I", "S+I+P"]


def test_zero_network_conserves_everything():
    C = conservation_laws(ReactionNetwork(("A", "B", "C"), (), ()))
    np.testing.assert_array_equal(C, np.eye(3))


def test_ab_conserves_total():
    np.testing.assert_array_equal(conservation_laws(parse_network(AB)), [[1, 1]])


def test_predator_prey_and_hiv_have_no_laws():
    assert conservation_laws(predator_prey()).shape == (0, 2)
    assert conservation_laws(hiv_model()).shape == (0, 3)


def test_conservation_along_trajectories(rng):
    N = michaelis_menten(0.5, 0.3, 0.1)
    C = conservation_laws(N)
    for _ in range(5):
        P0 = rng.uniform(0, 3, size=4)
        traj = integrate(rate_field(N), P0, 50.0)
        drift = np.abs(traj.states @ C.T - C @ P0)
        assert np.all(drift < 1e-6 * (1 + np.abs(C @ P0)))
        assert traj.states.min() >= -1e-9


def test_format_conservation_law_signs():
    assert format_conservation_law([1, -2, 0], ["A", "B", "C"]) == "A-2*B"
    assert format_conservation_law([-1, 0.5], ["A", "B"]) == "-A+0.5*B"
    assert format_conservation_law([0, 0], ["A", "B"]) == "0"


# ------------------------------------------------------- monotonicity


@pytest.mark.parametrize("text, Q", [(AB, [2.0, 1.0]), (CYCLE, [6.0, 3.0, 2.0])])
def test_feinberg_monotonicity(text, Q, rng):
    N = parse_network(text)
    Q = np.array(Q)
    assert is_complex_balanced(N, Q).balanced
    for _ in range(10):
        P0 = rng.uniform(0.01, 10, size=N.k)
        traj = integrate(rate_field(N), P0, 10.0, monitors={"I": population_info_monitor(Q)})
        assert is_nonincreasing(traj.channels["I"], 1e-6)


def test_linear_case_both_evolving(rng):
    N = random_markov_network(rng, 4)
    H = hamiltonian(to_markov(N))
    P0, Q0 = rng.uniform(0.1, 5, size=(2, 4))
    traj = integrate(batched_master_field(H, 2), np.concatenate([P0, Q0]), 10.0)
    I = [population_relative_information(np.maximum(x[:4], 0), np.maximum(x[4:], 0))
         for x in traj.states]
    assert is_nonincreasing(I, 1e-6)


def test_scalar_lemma(rng):
    x, y = rng.uniform(0, 10, size=(2, 100_000))
    x, y = np.maximum(x, 1e-300), np.maximum(y, 1e-300)
    assert np.all((np.log(x) - np.log(y)) * y <= x - y)


def test_lemma_equality_case():
    assert (math.log(2.0) - math.log(2.0)) * 2.0 == 2.0 - 2.0
