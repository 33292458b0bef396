import numpy as np
import pytest

from mvstab.model import (cosine_model, dawson_model,
                          rescaled_double_well_model)
from mvstab.numerics import dense_spectrum, find_roots
from mvstab.spectrum import (base_spectrum, build_basis, coupling_vectors,
                             dirichlet_matrix, full_generator_matrix,
                             linearized_propagate, secular_function,
                             solve_secular, unstable_mode)
from mvstab.stationary import GridSpec, build_gibbs, stability_indicator

from conftest import SIGMA_C_DAWSON_BETA1


def hermite_normalized(k, z):
    """Probabilists' Hermite polynomial He_k(z)/sqrt(k!)."""
    import math
    c = np.zeros(k + 1)
    c[k] = 1.0
    return np.polynomial.hermite_e.hermeval(z, c) / math.sqrt(math.factorial(k))


class TestBuildBasis:
    def test_p0_is_one(self, cosine_unstable):
        assert np.allclose(cosine_unstable.basis.node_values[0], 1.0)

    def test_gram_identity(self, cosine_unstable):
        b = cosine_unstable.basis
        mu = b.gibbs.rule.weights * b.gibbs.density
        gram = (b.node_values * mu) @ b.node_values.T
        assert np.abs(gram - np.eye(b.degree + 1)).max() < 1e-10

    def test_gaussian_weight_gives_hermite(self, cosine_unstable):
        # closed-form oracle: the orthonormal polynomials of N(mu0, 1)
        # are shifted normalized probabilists' Hermite polynomials,
        # with recurrence alpha_k = mu0 and beta_k = k
        b = cosine_unstable.basis
        mu0 = cosine_unstable.model.beta * cosine_unstable.m_root
        assert np.abs(b.alpha[:20] - mu0).max() < 1e-10
        assert np.abs(b.beta_sq[1:20] - np.arange(1, 20)).max() < 1e-9
        x = b.gibbs.rule.nodes
        for k in (1, 2, 5, 9, 12):
            ref = hermite_normalized(k, x - mu0)
            sgn = np.sign(ref[np.argmax(np.abs(ref))]
                          * b.node_values[k][np.argmax(np.abs(ref))])
            dev = np.abs(sgn * b.node_values[k] - ref)
            assert dev.max() < 1e-10 * max(1.0, np.abs(ref).max())

    def test_derivative_values(self, cosine_unstable):
        # d/dx He_k = k He_{k-1}, so normalized rows obey
        # p_k' = sqrt(k) p_{k-1} for a unit Gaussian weight
        b = cosine_unstable.basis
        for k in (1, 3, 7):
            assert np.abs(b.node_derivs[k]
                          - np.sqrt(k) * b.node_values[k - 1]).max() < 1e-8

    def test_eval_at_matches_node_values(self, dawson_sub):
        b = dawson_sub.basis
        P = b.eval_at(b.gibbs.rule.nodes)
        scale = np.abs(b.node_values).max(axis=1, keepdims=True)
        assert (np.abs(P - b.node_values) / scale).max() < 1e-9

    def test_degree_beyond_quadrature_rejected(self):
        g = build_gibbs(dawson_model(1.0, 0.6), 0.0,
                        GridSpec(panel_degree=40))
        with pytest.raises(ValueError, match="exactness"):
            build_basis(g, 60)


class TestDirichletMatrix:
    def test_row_zero_vanishes(self, dawson_sub):
        assert np.all(dawson_sub.K[0] == 0.0)
        assert np.all(dawson_sub.K[:, 0] == 0.0)

    def test_symmetric_psd(self, dawson_sub):
        K = dawson_sub.K
        assert np.abs(K - K.T).max() == 0.0
        assert np.linalg.eigvalsh(K).min() > -1e-10

    def test_cosine_diagonal_integers(self, cosine_unstable):
        # Hermite eigenrelation oracle: the energy form of the unit
        # Gaussian is diagonal with entries 0, 1, 2, ...  The domain
        # truncation (tail mass ~1e-14) pollutes degrees near the top of
        # the basis, so the comparison covers the converged lower half.
        K = cosine_unstable.K[:21, :21]
        assert np.abs(np.diag(K) - np.arange(21)).max() < 1e-8
        off = K - np.diag(np.diag(K))
        assert np.abs(off).max() < 1e-8


class TestBaseSpectrum:
    def test_zero_mode(self, dawson_sub):
        assert dawson_sub.spectrum.values[0] == 0.0
        assert dawson_sub.spectrum.spectral_gap > 0

    def test_cosine_gap_is_one(self, cosine_unstable):
        assert cosine_unstable.spectrum.values[1] == pytest.approx(1.0, abs=1e-8)

    def test_cosine_integer_ladder(self, cosine_unstable):
        vals = cosine_unstable.spectrum.values[:11]
        assert np.abs(vals - np.arange(11)).max() < 1e-8


class TestCouplingVectors:
    def test_cosine_pairing_closed_form(self, cosine_unstable):
        # the only surviving secular product is <e_1, cos - m> =
        # -e^{-1/2} sin(beta m)
        cu = cosine_unstable
        beta, m0 = cu.model.beta, cu.m_root
        got = cu.coupling.phi_hat[1] * cu.coupling.v_hat[1]
        assert got == pytest.approx(-np.exp(-0.5) * np.sin(beta * m0), abs=1e-8)

    def test_phi_centered(self, dawson_sub):
        assert dawson_sub.coupling.phi_hat[0] == 0.0

    def test_ell_kills_constants(self, dawson_sub):
        assert dawson_sub.coupling.ell[0] == 0.0

    def test_ell_against_direct_quadrature(self, dawson_sub):
        # two-route oracle: ell_j = mu(v' e_j') by direct quadrature
        s = dawson_sub
        mu = s.gibbs.rule.weights * s.gibbs.density
        x = s.gibbs.rule.nodes
        dE = s.spectrum.vectors.T @ s.basis.node_derivs
        direct = dE @ (mu * s.model.c(x))
        assert np.abs(direct - s.coupling.ell).max() < 1e-8

    def test_parseval_covariance(self, dawson_sub):
        s = dawson_sub
        x = s.gibbs.rule.nodes
        phi = s.model.g(x) - s.m_root
        v = s.model.coupling_v(x)
        cov = s.gibbs.moment(phi * v) - s.gibbs.moment(phi) * s.gibbs.moment(v)
        assert np.dot(s.coupling.phi_hat[1:], s.coupling.v_hat[1:]) == \
            pytest.approx(cov, abs=1e-8)

    def test_requires_self_consistent_measure(self):
        mdl = dawson_model(1.0, 0.6)
        g = build_gibbs(mdl, 0.4)
        b = build_basis(g, 30)
        spec = base_spectrum(dirichlet_matrix(g, b))
        with pytest.raises(ValueError, match="not centered"):
            coupling_vectors(g, b, spec)


class TestSecular:
    def test_decay_at_infinity(self, dawson_sub):
        s = dawson_sub
        s_inf = secular_function(s.spectrum, s.coupling, 1e6)
        s_zero = secular_function(s.spectrum, s.coupling, 0.0)
        assert abs(s_inf) < 1e-4 * abs(s_zero)

    def test_matches_stability_indicator(self, dawson_sub):
        s = dawson_sub
        s0 = stability_indicator(s.model, s.m_root)
        assert secular_function(s.spectrum, s.coupling, 0.0) == pytest.approx(
            s0, abs=1e-6)

    def test_cosine_closed_form_curve(self, cosine_unstable):
        cu = cosine_unstable
        beta, m0 = cu.model.beta, cu.m_root
        num = -beta * np.exp(-0.5) * np.sin(beta * m0)
        for lam in (0.0, 0.5, 2.0, 7.3):
            assert secular_function(cu.spectrum, cu.coupling, lam) == \
                pytest.approx(num / (1 + lam), abs=1e-8)

    def test_rejects_negative_argument(self, dawson_sub):
        with pytest.raises(ValueError):
            secular_function(dawson_sub.spectrum, dawson_sub.coupling, -0.5)

    def test_terms_positive_for_gradient_coupling(self, dawson_sub):
        # with v = phi every secular term is a square, so S decreases
        s = dawson_sub
        terms = s.spectrum.values[1:] * s.coupling.v_hat[1:] * s.coupling.phi_hat[1:]
        assert terms.min() > -1e-14
        lams = np.linspace(0, 2, 30)
        vals = [secular_function(s.spectrum, s.coupling, l) for l in lams]
        assert np.all(np.diff(vals) < 0)

    def test_solve_closed_form(self, cosine_unstable):
        cu = cosine_unstable
        beta, m0 = cu.model.beta, cu.m_root
        closed = -1.0 - np.exp(-0.5) * beta * np.sin(beta * m0)
        assert solve_secular(cu.spectrum, cu.coupling) == pytest.approx(
            closed, abs=1e-6)

    def test_absent_above_critical(self, dawson_super):
        assert solve_secular(dawson_super.spectrum, dawson_super.coupling) is None

    @pytest.mark.slow
    @pytest.mark.parametrize("mdl,m0", [
        (dawson_model(1.0, 0.8 * SIGMA_C_DAWSON_BETA1), 0.0),
        (rescaled_double_well_model(1.0, 0.8 * SIGMA_C_DAWSON_BETA1), 0.0),
    ], ids=["dawson", "rescaled"])
    def test_refinement_stability(self, mdl, m0):
        out = {}
        for n in (100, 200):
            g = build_gibbs(mdl, m0, GridSpec(panel_degree=n + 4))
            b = build_basis(g, n)
            spec = base_spectrum(dirichlet_matrix(g, b))
            cp = coupling_vectors(g, b, spec)
            out[n] = (spec.values[1], secular_function(spec, cp, 0.0),
                      solve_secular(spec, cp))
        for a, b_ in zip(out[100], out[200]):
            assert a == pytest.approx(b_, abs=1e-6)

    def test_refinement_stability_cosine(self, cosine_unstable):
        cu = cosine_unstable
        g = build_gibbs(cu.model, cu.m_root, GridSpec(panel_degree=100))
        b = build_basis(g, 80)
        spec = base_spectrum(dirichlet_matrix(g, b))
        cp = coupling_vectors(g, b, spec)
        assert spec.values[1] == pytest.approx(cu.spectrum.values[1], abs=1e-6)
        assert solve_secular(spec, cp) == pytest.approx(
            solve_secular(cu.spectrum, cu.coupling), abs=1e-6)


class TestFullGeneratorMatrix:
    def test_beta_zero_spectrum_unchanged(self):
        mdl = dawson_model(beta=0.0, sigma=0.7)
        g = build_gibbs(mdl, 0.0)
        b = build_basis(g, 30)
        spec = base_spectrum(dirichlet_matrix(g, b))
        cp = coupling_vectors(g, b, spec)
        M = full_generator_matrix(spec, cp)
        vals = np.sort(dense_spectrum(M).values.real)
        assert np.abs(vals - np.sort(-spec.values)).max() < 1e-10

    def test_constant_mode_annihilated(self, dawson_sub):
        M = full_generator_matrix(dawson_sub.spectrum, dawson_sub.coupling)
        e0 = np.zeros(M.shape[0])
        e0[0] = 1.0
        assert np.all(M @ e0 == 0.0)

    def test_dominant_eigenvalue_matches_secular_root(self, dawson_sub):
        M = full_generator_matrix(dawson_sub.spectrum, dawson_sub.coupling)
        lam = solve_secular(dawson_sub.spectrum, dawson_sub.coupling)
        assert dense_spectrum(M).abscissa == pytest.approx(lam, abs=1e-9)

    def test_dimension_mismatch(self, dawson_sub, cosine_unstable):
        with pytest.raises(ValueError, match="mismatch"):
            full_generator_matrix(dawson_sub.spectrum, cosine_unstable.coupling)


class TestUnstableMode:
    def test_pairing_normalization(self, dawson_sub):
        m = dawson_sub.mode
        assert np.dot(dawson_sub.coupling.ell, m.f_star) == pytest.approx(
            1.0, abs=1e-8)

    def test_eigen_residual(self, dawson_sub):
        m = dawson_sub.mode
        M = full_generator_matrix(dawson_sub.spectrum, dawson_sub.coupling)
        r = np.linalg.norm(M @ m.f_star - m.lambda_star * m.f_star)
        assert r <= 1e-8 * np.linalg.norm(m.f_star)

    def test_cosine_fstar_hermite_pattern(self, cosine_unstable):
        # Hermite expansion oracle: the coefficients of cos in the
        # shifted basis are Re(i^k e^{i beta m}) e^{-1/2} / sqrt(k!),
        # so f*_k = beta phi_k / (k + lambda*) follows in closed form
        cu = cosine_unstable
        beta, m0 = cu.model.beta, cu.m_root
        lam = cu.mode.lambda_star
        ks = np.arange(1, 13)
        fact = np.array([float(np.prod(np.arange(1, k + 1))) for k in ks])
        phi = (np.exp(-0.5) / np.sqrt(fact)
               * np.real(1j ** ks * np.exp(1j * beta * m0)))
        expected = beta * phi / (ks + lam)
        got = cu.mode.f_star[1:13]
        sgn = np.sign(got[0] * expected[0])
        assert np.abs(sgn * got - expected).max() < 1e-8

    def test_verdicts(self, dawson_sub, dawson_super):
        assert dawson_sub.mode.verdict == "unstable"
        assert dawson_sub.mode.lambda_star is not None
        assert secular_function(dawson_sub.spectrum, dawson_sub.coupling,
                                0.0) > 1
        assert dawson_super.mode.verdict == "stable-indicator"
        assert dawson_super.mode.lambda_star is None
        assert dawson_super.mode.f_star is None

    def test_dominant_eigenvalue_at_least_secular_root(self, dawson_sub):
        m = dawson_sub.mode
        assert m.lambda0.real >= m.lambda_star - 1e-6
        assert m.abscissa == pytest.approx(m.lambda_star, abs=1e-9)

    def test_simple_dominant_eigenvalue(self, dawson_sub, cosine_unstable):
        for s in (dawson_sub, cosine_unstable):
            assert s.mode.k0 == 1
            assert not s.mode.defective_warning

    def test_adjoint_pairing_nonzero(self, dawson_sub):
        # left/right eigenvectors of a simple eigenvalue cannot be
        # orthogonal
        m = dawson_sub.mode
        pairing = np.vdot(m.adjoint_vec, m.f_star)
        assert abs(pairing) > 1e-6 * np.linalg.norm(m.f_star)

    def test_adjoint_is_left_eigenvector(self, dawson_sub):
        m = dawson_sub.mode
        M = full_generator_matrix(dawson_sub.spectrum, dawson_sub.coupling)
        u = m.adjoint_vec
        assert np.linalg.norm(u @ M - m.lambda0.real * u) < 1e-8


class TestLinearizedPropagate:
    def test_time_zero_identity(self, dawson_sub):
        M = full_generator_matrix(dawson_sub.spectrum, dawson_sub.coupling)
        c = np.sin(np.arange(M.shape[0]))
        assert np.allclose(linearized_propagate(M, c, 0.0), c, atol=1e-14)

    def test_constant_mode_exact(self, dawson_sub):
        M = full_generator_matrix(dawson_sub.spectrum, dawson_sub.coupling)
        e0 = np.zeros(M.shape[0])
        e0[0] = 1.0
        for t in (0.5, 1.0, 5.0):
            assert np.array_equal(linearized_propagate(M, e0, t), e0)

    def test_unstable_mode_growth(self, dawson_sub):
        M = full_generator_matrix(dawson_sub.spectrum, dawson_sub.coupling)
        f = dawson_sub.mode.f_star
        lam = dawson_sub.mode.lambda_star
        for t in (0.5, 1.0, 2.0, 10.0):
            out = linearized_propagate(M, f, t)
            ref = np.exp(lam * t) * f
            assert np.linalg.norm(out - ref) <= 1e-8 * np.linalg.norm(ref)

    def test_overflow_guard(self, cosine_unstable):
        M = full_generator_matrix(cosine_unstable.spectrum,
                                  cosine_unstable.coupling)
        f = cosine_unstable.mode.f_star
        with pytest.raises(OverflowError, match="700"):
            linearized_propagate(M, f, 200.0)

    def test_negative_time_rejected(self, dawson_sub):
        M = full_generator_matrix(dawson_sub.spectrum, dawson_sub.coupling)
        with pytest.raises(ValueError, match="nonnegative"):
            linearized_propagate(M, np.zeros(M.shape[0]), -1.0)
