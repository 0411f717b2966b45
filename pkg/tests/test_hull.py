import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import dense, hull_qp_active_set, random_family
from tuckerhull.errors import DimensionMismatchError
from tuckerhull.factored import FactoredOperator
from tuckerhull.hull import (STEP_SAFETY, SimplexWeights, accelerated_projected_gradient,
                            build_hull, hull_from_coeffs, hull_membership_distance,
                            largest_eigenvalue, project_onto_hull)
from tuckerhull.simplex import project_simplex
from tuckerhull.subspace import (CoeffMatrix, hosvd_init, project_coeffs, reconstruct,
                                 residual_norm_sq)


def random_hull(rng, L, I, J, scale=1.0):
    return hull_from_coeffs([scale * rng.standard_normal((I, J)) for _ in range(L)])


# -- construction ----------------------------------------------------------------

def test_single_vertex_gram():
    h = hull_from_coeffs([np.array([[1.0, 2.0], [2.0, 0.0]])])
    assert h.gram.shape == (1, 1)
    assert h.gram[0, 0] == pytest.approx(9.0)
    assert h.lipschitz == pytest.approx(9.0, rel=1e-10)


def test_orthogonal_unit_vertices():
    h = hull_from_coeffs([np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])])
    np.testing.assert_array_equal(h.gram, np.eye(2))
    assert h.lipschitz == pytest.approx(1.0, rel=1e-10)


def test_build_hull_gram_matches_dense(rng):
    samples = random_family(rng, 7, 6, 5, 3)
    model = hosvd_init(samples, 3, 2)
    h = build_hull(samples, model)
    E, F = model.E.vectors, model.F.vectors
    proj = [E @ E.T @ dense(S) @ F @ F.T for S in samples]
    G = np.array([[np.sum(a * b) for b in proj] for a in proj])
    np.testing.assert_allclose(h.gram, G, atol=1e-10)
    np.testing.assert_allclose(h.gram, h.gram.T)
    assert np.linalg.eigvalsh(h.gram).min() >= -1e-10
    assert h.lipschitz == pytest.approx(np.linalg.eigvalsh(G).max(), rel=1e-8)
    assert [v.sample_id for v in h.vertices] == list(range(5))


def test_build_hull_rejects_empty(rng):
    model = hosvd_init(random_family(rng, 4, 4, 2, 2), 2, 2)
    with pytest.raises(ValueError):
        build_hull([], model)


def test_duplicate_vertices_allowed():
    g = np.array([[1.0, -1.0]])
    h = hull_from_coeffs([g, g, 2 * g])
    assert h.n_vertices == 3


def test_mixed_vertex_shapes_rejected():
    with pytest.raises(DimensionMismatchError):
        hull_from_coeffs([np.zeros((2, 2)), np.zeros((2, 3))])


def test_tangent_lipschitz(rng):
    for L in range(1, 7):
        h = random_hull(rng, L, 2, 2)
        P = np.eye(L) - 1.0 / L
        ref = np.linalg.eigvalsh(P @ h.gram @ P).max()
        assert h.tangent_lipschitz == pytest.approx(ref, rel=1e-8, abs=1e-12)
        assert h.tangent_lipschitz <= h.lipschitz * (1 + 1e-10)
    # a shared offset inflates the full constant but not the tangent one
    base = [rng.standard_normal((2, 2)) for _ in range(4)]
    shifted = hull_from_coeffs([b + 100.0 for b in base])
    assert shifted.tangent_lipschitz == pytest.approx(hull_from_coeffs(base).tangent_lipschitz,
                                                      rel=1e-6)
    assert shifted.lipschitz > 100 * shifted.tangent_lipschitz


def test_power_iteration_matches_eigvalsh(rng):
    for L in range(1, 9):
        A = rng.standard_normal((L + 2, L))
        G = A.T @ A
        assert largest_eigenvalue(G) == pytest.approx(np.linalg.eigvalsh(G).max(), rel=1e-8)
    assert largest_eigenvalue(np.zeros((3, 3))) == 0.0
    # the all-ones start vector would miss this eigenvector
    assert largest_eigenvalue(np.array([[1.0, -1.0], [-1.0, 1.0]])) == pytest.approx(2.0)


def test_simplex_weights_validation():
    with pytest.raises(ValueError):
        SimplexWeights([0.5, 0.6])
    with pytest.raises(ValueError):
        SimplexWeights([1.1, -0.1])
    w = SimplexWeights([1.0 + 1e-13, -1e-13])
    assert w.lam.min() == 0.0


# -- projection ------------------------------------------------------------------

def test_vertex_is_fixed_point(rng):
    h = random_hull(rng, 4, 2, 3)
    p = project_onto_hull(h.vertices[2], h)
    np.testing.assert_allclose(p.weights.lam, [0, 0, 1, 0], atol=1e-8)
    assert p.objective < 1e-12


def test_antipodal_vertices_symmetric():
    g = np.array([[1.0, 2.0], [-0.5, 0.3]])
    h = hull_from_coeffs([g, -g])
    p = project_onto_hull(np.zeros((2, 2)), h)
    np.testing.assert_allclose(p.weights.lam, [0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(p.coeffs.gamma, 0.0, atol=1e-12)


def test_matches_active_set_oracle(rng):
    for _ in range(60):
        L = int(rng.integers(1, 6))
        I = int(rng.integers(1, 3))
        J = int(rng.integers(1, 6 // I + 1))
        h = random_hull(rng, L, I, J)
        c = rng.standard_normal((I, J)) * rng.uniform(0.1, 3)
        f_star, _ = hull_qp_active_set(h.vertex_matrix(), c)
        p = project_onto_hull(c, h)
        assert p.objective - f_star <= 1e-8
        assert p.objective >= f_star - 1e-10
        assert abs(p.weights.lam.sum() - 1) <= 1e-10 and p.weights.lam.min() >= 0


def test_history_and_best_so_far(rng):
    h = random_hull(rng, 5, 2, 3)
    c = 3 * rng.standard_normal((2, 3))
    p = project_onto_hull(c, h, k_end=200, rel_tol=0.0)
    best = np.minimum.accumulate(p.history)
    assert np.all(np.diff(best) <= 0)
    assert p.objective <= p.history[0]  # never worse than the uniform start
    assert p.iterations == 200 and len(p.history) == 201
    # reported objective is the objective of the returned weights
    lam = p.weights.lam
    val = 0.5 * np.sum((h.vertex_matrix() @ lam - c.ravel()) ** 2)
    assert p.objective == pytest.approx(val, rel=1e-9, abs=1e-14)
    np.testing.assert_allclose(p.coeffs.gamma.ravel(), h.vertex_matrix() @ lam, atol=1e-13)


def test_early_stopping(rng):
    h = random_hull(rng, 3, 2, 2)
    p = project_onto_hull(rng.standard_normal((2, 2)), h, k_end=10_000)
    assert p.iterations < 10_000


def test_k_end_validation(rng):
    with pytest.raises(ValueError):
        project_onto_hull(np.zeros((2, 2)), random_hull(rng, 2, 2, 2), k_end=0)


def test_degenerate_hull():
    h = hull_from_coeffs([np.zeros((2, 2))] * 3)
    p = project_onto_hull(np.ones((2, 2)), h)
    assert p.degenerate
    np.testing.assert_allclose(p.weights.lam, [1 / 3] * 3)
    assert p.objective == pytest.approx(2.0)


def test_target_shape_mismatch(rng):
    with pytest.raises(DimensionMismatchError):
        project_onto_hull(np.zeros((3, 3)), random_hull(rng, 2, 2, 2))


def test_factored_target_needs_model(rng):
    h = random_hull(rng, 2, 2, 2)
    with pytest.raises(ValueError):
        project_onto_hull(FactoredOperator(np.ones(3), np.ones(3)), h)


def test_fista_within_theoretical_bound(rng):
    # f(x_k) - f* <= 2 Lip ||x_0 - x*||^2 / (k + 1)^2 for accelerated projected gradient
    for _ in range(100):
        L = int(rng.integers(2, 8))
        d = int(rng.integers(1, 7))
        V = rng.standard_normal((d, L)) * np.logspace(0, -2, d)[:, None]
        c = rng.standard_normal(d)
        h = hull_from_coeffs([V[:, l].reshape(d, 1) for l in range(L)])
        f_star, lam_star = hull_qp_active_set(V, c)
        k = np.arange(1, 201)
        for step, lip in (("tangent", h.tangent_lipschitz), ("full", h.lipschitz)):
            p = project_onto_hull(c.reshape(d, 1), h, k_end=200, rel_tol=0.0, step=step)
            bound = 2 * STEP_SAFETY * lip * np.sum((1 / L - lam_star) ** 2) / (k + 1) ** 2
            assert np.all(p.history[1:] - f_star <= bound + 1e-12)


def test_reduced_basis_trajectory_matches_dense(rng):
    samples = random_family(rng, 6, 5, 4, 3)
    model = hosvd_init(samples, 3, 3)
    h = build_hull(samples, model)
    target = random_family(rng, 6, 5, 1, 2)[0]
    gram_run = project_onto_hull(target, h, k_end=60, rel_tol=0.0, record_path=True)

    # same iteration, gradient taken with dense projected operators
    E, F = model.E.vectors, model.F.vectors
    M = np.column_stack([(E @ E.T @ dense(S) @ F @ F.T).ravel() for S in samples])
    s = (E @ E.T @ dense(target) @ F @ F.T).ravel()
    step = 1.0 / (STEP_SAFETY * h.tangent_lipschitz)
    _, _, _, path = accelerated_projected_gradient(
        lambda lam: M.T @ (M @ lam - s), lambda lam: 0.5 * np.sum((M @ lam - s) ** 2),
        np.full(4, 0.25), step, k_end=60, rel_tol=0.0, record_path=True)
    np.testing.assert_allclose(gram_run.path, path, atol=1e-10)


def test_nonexpansive(rng):
    for _ in range(30):
        h = random_hull(rng, 4, 2, 2)
        c1, c2 = rng.standard_normal((2, 2, 2)) * 2
        p1 = project_onto_hull(c1, h, k_end=5000, rel_tol=0.0)
        p2 = project_onto_hull(c2, h, k_end=5000, rel_tol=0.0)
        d_proj = np.linalg.norm(p1.coeffs.gamma - p2.coeffs.gamma)
        assert d_proj <= np.linalg.norm(c1 - c2) + 1e-6


def test_full_step_matches_tangent_step(rng):
    for _ in range(20):
        h = random_hull(rng, 4, 2, 2)
        c = 2 * rng.standard_normal((2, 2))
        f_star, _ = hull_qp_active_set(h.vertex_matrix(), c)
        p_full = project_onto_hull(c, h, step="full", k_end=5000)
        assert p_full.objective - f_star <= 1e-8
    with pytest.raises(ValueError):
        project_onto_hull(c, h, step="huge")


def test_coincident_vertices(rng):
    g = rng.standard_normal((2, 3))
    h = hull_from_coeffs([g, g.copy(), g.copy()])
    p = project_onto_hull(np.zeros((2, 3)), h)
    assert not p.degenerate
    np.testing.assert_allclose(p.coeffs.gamma, g)
    assert p.objective == pytest.approx(0.5 * np.sum(g**2))


def test_single_vertex_projection(rng):
    g = rng.standard_normal((2, 2))
    p = project_onto_hull(np.zeros((2, 2)), hull_from_coeffs([g]))
    np.testing.assert_array_equal(p.weights.lam, [1.0])


def test_ill_conditioned_simulated_vertex():
    # simulated vertices share a dominant mean; the plain 1/lipschitz step
    # does not resolve the vertex within the default budget
    from tuckerhull.simgen import FamilyParams, generate_family
    from tuckerhull.subspace import als_fit
    fam = generate_family(FamilyParams(grid=6, K=3, L=8, seed=4))
    h = build_hull(fam, als_fit(fam, 4, 3))
    assert h.lipschitz > 100 * h.tangent_lipschitz
    p = project_onto_hull(fam[5], h)
    np.testing.assert_allclose(p.weights.lam, np.eye(8)[5], atol=1e-8)
    assert p.objective < 1e-12


def test_lam0_option(rng):
    h = random_hull(rng, 3, 1, 2)
    p = project_onto_hull(h.vertices[1], h, lam0=np.array([0.0, 1.0, 0.0]))
    assert p.objective < 1e-20


# -- membership distance -----------------------------------------------------------

def test_distance_zero_at_vertex_and_inside(rng):
    samples = random_family(rng, 8, 7, 4, 2)
    model = hosvd_init(samples, 3, 3)
    h = build_hull(samples, model)
    d = hull_membership_distance(samples[1], h)
    assert d.reduced < 1e-6
    assert d.orthogonal == pytest.approx(np.sqrt(residual_norm_sq(samples[1], model)))

    w = np.array([0.2, 0.5, 0.0, 0.3])
    inside = sum(wi * v.gamma for wi, v in zip(w, h.vertices))
    d = hull_membership_distance(reconstruct(CoeffMatrix(inside), model), h)
    assert d.reduced < 1e-5
    assert d.orthogonal < 1e-10


def test_distance_matches_oracle(rng):
    for _ in range(30):
        h = random_hull(rng, 4, 2, 3)
        c = 3 * rng.standard_normal((2, 3))
        f_star, _ = hull_qp_active_set(h.vertex_matrix(), c)
        d = hull_membership_distance(c, h)
        assert d.reduced == pytest.approx(np.sqrt(2 * f_star), abs=1e-6)
        assert d.orthogonal == 0.0
        assert d.total == pytest.approx(d.reduced)


def test_distance_total_splits(rng):
    samples = random_family(rng, 8, 7, 4, 2)
    model = hosvd_init(samples, 2, 2)
    h = build_hull(samples, model)
    S = random_family(rng, 8, 7, 1, 3)[0]
    d = hull_membership_distance(S, h)
    assert d.total**2 == pytest.approx(d.reduced**2 + residual_norm_sq(S, model), rel=1e-12)


def test_orthogonal_operator_has_zero_coefficients():
    E = np.eye(6)[:, :2]
    F = np.eye(5)[:, :2]
    from tuckerhull.subspace import OrthoBasis, SubspaceModel
    model = SubspaceModel(OrthoBasis(E), OrthoBasis(F, "F"))
    h = hull_from_coeffs([np.eye(2), -np.eye(2)], model)
    S = FactoredOperator(np.eye(6)[:, 4] * 3, np.eye(5)[:, 3])
    d = hull_membership_distance(S, h)
    assert np.allclose(project_coeffs(S, model).gamma, 0)
    assert d.orthogonal == pytest.approx(3.0)
    assert d.reduced == pytest.approx(0.0, abs=1e-12)


# -- properties --------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 3), st.integers(1, 2), st.integers(0, 2**32 - 1))
def test_projection_output_invariants(L, I, J, seed):
    rng = np.random.default_rng(seed)
    h = random_hull(rng, L, I, J)
    c = rng.standard_normal((I, J)) * 2
    p = project_onto_hull(c, h)
    lam = p.weights.lam
    assert lam.min() >= 0 and abs(lam.sum() - 1) <= 1e-10
    uniform = 0.5 * np.sum((h.vertex_matrix().mean(axis=1) - c.ravel()) ** 2)
    assert p.objective <= uniform + 1e-12


def test_apg_generic_loop_on_box():
    # the loop is not tied to the simplex: minimize ||x - t||^2 over [0, 1]^2
    t = np.array([2.0, -1.0])
    x, hist, _, _ = accelerated_projected_gradient(
        lambda x: x - t, lambda x: 0.5 * np.sum((x - t) ** 2), np.array([0.5, 0.5]), 1.0,
        k_end=50, project=lambda z: np.clip(z, 0, 1))
    np.testing.assert_allclose(x, [1.0, 0.0])
