"""Acceptance suite: one test per criterion, run at the stated tolerances.

Scale: N = 2, Hermite order K = 10.  Initial data occupies |n_i| <= 2
Fourier modes; linear mode-exponential propagation is exact on any embedding
grid, so runs use the smallest grid containing the excited modes (the CLI
defaults expose the full 33^2-mode grid).  Each test prints one line:

    ACCEPTANCE <n> <description>: PASS

(or fails the assert, in which case pytest reports the condition).
"""

import json

import numpy as np
import pytest

from knudsenlab import cli
from knudsenlab.spectral import build_basis, inner_or_norm, random_field, unit_field
from knudsenlab.models import (
    apply_gamma,
    apply_transport,
    assemble_mode_generator,
    constants_ledger,
    gamma_continuum_kernel_defect,
    make_model,
    project_fluid,
    verify_hypotheses,
)
from knudsenlab.hypnorm import (
    build_hk_coefficients,
    dissipation_monitor,
    equivalence_constants,
)
from knudsenlab.evolve import IntegratorConfig, fit_decay_rate, propagate
from knudsenlab.branches import fit_dispersion, mode_spectrum, semigroup_decompose
from knudsenlab.hydro import build_initial_data, convergence_study
from knudsenlab.spectral import TWO_PI, psi_values, zero_field

EPS_GRID_DECAY = (1.0, 0.5, 0.2, 0.1, 0.05)
EPS_GRID_HYDRO = (0.2, 0.1, 0.05, 0.025)
ORDER = 10
DIM = 2


def report(item, description):
    print(f"ACCEPTANCE {item} {description}: PASS")


@pytest.fixture(scope="module")
def basis():
    return build_basis(DIM, ORDER)


@pytest.fixture(scope="module")
def bgk(basis):
    return make_model("hydro_bgk", basis)


@pytest.fixture(scope="module")
def bgkq(basis):
    return make_model("bgk_quadratic", basis)


@pytest.fixture(scope="module")
def consts(bgk):
    return constants_ledger(bgk, k_max=1)


@pytest.fixture(scope="module")
def coeffs_std(consts):
    return build_hk_coefficients(consts, 1)


@pytest.fixture(scope="module")
def coeffs_perp(consts):
    return build_hk_coefficients(consts, 1, "perp")


@pytest.fixture(scope="module")
def decay_runs(bgk, bgkq, consts, coeffs_std, coeffs_perp):
    """Linear and small-data nonlinear trajectories over the eps grid."""
    mx = 4
    runs = {"linear": {}, "nonlinear": {}}
    h_lin = build_initial_data(bgk.basis, mx, "ill_prepared", seed=3,
                               amplitude=0.05, model=bgk)
    h_non = build_initial_data(bgkq.basis, mx, "well_prepared", seed=5,
                               amplitude=0.02, model=bgkq)
    for eps in EPS_GRID_DECAY:
        dt = min(0.01, eps**2 / 4.0)
        runs["linear"][eps] = propagate(
            h_lin, bgk, eps, IntegratorConfig(dt=dt, t_end=2.0), k=1,
            coeffs_std=coeffs_std, coeffs_perp=coeffs_perp)
        cfg = IntegratorConfig(scheme="strang_imex", dt=0.01, t_end=2.0,
                               sample_every=1)
        runs["nonlinear"][eps] = propagate(
            h_non, bgkq, eps, cfg, k=1,
            coeffs_std=coeffs_std, coeffs_perp=coeffs_perp)
    return runs


class TestItem1Hypotheses:
    def test_certification(self, basis):
        tol = 1e-10
        for kind in ("hydro_bgk", "linear_relaxation", "fokker_planck"):
            model = make_model(kind, basis)
            rep = verify_hypotheses(model, tol=tol, k_max=2)
            failing = [c["name"] for c in rep["checks"]
                       if c["required"] and not c["passed"]]
            assert rep["passed"], f"{kind}: {failing}"
        for kind in ("semi_classical", "bgk_quadratic"):
            model = make_model(kind, basis)
            rep = verify_hypotheses(model, tol=tol, k_max=1)
            by_name = {c["name"]: c for c in rep["checks"]}
            assert by_name["Gamma.symmetry"]["value"] <= tol
            assert by_name["H5.kernel_moments"]["value"] <= tol
            if kind == "semi_classical":
                assert by_name["H5.continuum_identity"]["value"] <= tol
        report(1, "hypothesis certification (H1)-(H5) at tol 1e-10")

    def test_gamma_finite_difference_oracle(self, bgkq):
        # relative agreement <= 1e-6 with the nonlinear BGK second derivative
        from numpy.polynomial.hermite_e import hermegauss

        rng = np.random.default_rng(11)
        cg = rng.standard_normal((ORDER + 1, ORDER + 1)) * 0.4
        g = zero_field(bgkq.basis, 0)
        g.coeffs[0, 0] = TWO_PI * cg
        x, w = hermegauss(96)
        V1, V2 = np.meshgrid(x, x, indexing="ij")
        W = np.multiply.outer(w, w)
        mw = np.exp(-(V1**2 + V2**2) / 2.0) / TWO_PI
        m_half = np.sqrt(mw)
        psi = psi_values(ORDER, x)
        gvals = np.einsum("ab,ai,bj->ij", cg, psi, psi)
        lift = W * np.exp((V1**2 + V2**2) / 2.0)

        def bgk_apply(fv):
            rho = np.sum(lift * fv)
            u1 = np.sum(lift * V1 * fv) / rho
            u2 = np.sum(lift * V2 * fv) / rho
            tt = (np.sum(lift * ((V1 - u1)**2 + (V2 - u2)**2) * fv) / rho) / 2.0
            return rho / (TWO_PI * tt) * np.exp(
                -((V1 - u1)**2 + (V2 - u2)**2) / (2 * tt)) - fv

        s = 5e-4
        fd = (bgk_apply(mw + s * m_half * gvals)
              + bgk_apply(mw - s * m_half * gvals)) / (2 * s * s) / m_half
        coef_fd = np.einsum("ij,ai,bj->ab", lift * fd, psi, psi)
        got = (apply_gamma(bgkq, g, g).coeffs[0, 0] / TWO_PI).real
        rel = np.max(np.abs(got - coef_fd)) / np.max(np.abs(coef_fd))
        assert rel <= 1e-6
        report(1, f"Gamma finite-difference oracle agreement ({rel:.2e} rel)")


class TestItem2StructuralIdentities:
    def test_identities(self, bgk):
        rng = np.random.default_rng(12)
        f = random_field(bgk.basis, 2, rng)
        g = random_field(bgk.basis, 2, rng)
        pf = project_fluid(f, bgk)
        ppf = project_fluid(pf, bgk)
        scale = np.sqrt(inner_or_norm(f, kind="L2"))
        assert np.max(np.abs(ppf.coeffs - pf.coeffs)) <= 1e-12 * scale
        sym_gap = abs(inner_or_norm(pf, g, kind="L2")
                      - inner_or_norm(f, project_fluid(g, bgk), kind="L2"))
        assert sym_gap <= 1e-12 * scale * np.sqrt(inner_or_norm(g, kind="L2"))

        th = apply_transport(f)
        assert abs(inner_or_norm(th, f, kind="L2")) <= 1e-12 * scale**2

        eps = 0.3
        A0 = assemble_mode_generator(bgk, (0, 0), eps)
        evals = np.linalg.eigvalsh(A0.real)
        assert np.sum(np.abs(evals) < 1e-10) == bgk.kernel_dim
        An = assemble_mode_generator(bgk, (2, -1), eps)
        assert np.linalg.svd(An, compute_uv=False).min() > 1e-8

        spec0 = mode_spectrum(bgk, (1.0, 0.0), 0.0)
        total = sum(spec0.projectors[j] for j in (-1, 0, 1, 2))
        assert np.max(np.abs(total - bgk.phi.T @ bgk.phi)) <= 1e-10
        report(2, "structural identities (projection, transport, kernel, P0 sum)")


class TestItem3UniformDecay:
    def test_monotone_decay(self, decay_runs):
        for family, runs in decay_runs.items():
            for eps, rec in runs.items():
                hyp2 = rec.norms["HypEps"] ** 2
                assert np.all(np.diff(hyp2) <= 1e-10 * hyp2[0]), (family, eps)
        report(3, "hyp norm monotone nonincreasing over the eps grid")

    def test_tau_band(self, decay_runs):
        for family, runs in decay_runs.items():
            taus = []
            for eps, rec in runs.items():
                tau, _ = fit_decay_rate(rec, "HypEps", (0.8, 2.0))
                taus.append(tau)
            assert min(taus) > 0.05, family
            assert max(taus) / min(taus) <= 4.0, (family, taus)
        report(3, "fitted tau positive, within a factor 2 of a central value")

    def test_perp_decay_and_equivalence(self, decay_runs, bgk, coeffs_perp):
        for family, runs in decay_runs.items():
            for eps, rec in runs.items():
                if eps > coeffs_perp.eps_max:
                    continue
                perp2 = rec.norms["HypPerp"] ** 2
                assert np.all(np.diff(perp2) <= 1e-10 * perp2[0]), (family, eps)
        los, his = [], []
        for eps in EPS_GRID_DECAY:
            lo, hi = equivalence_constants(coeffs_perp, bgk, eps)
            assert lo > 0
            los.append(lo)
            his.append(hi)
        assert (max(los) - min(los)) / min(los) <= 0.05
        assert (max(his) - min(his)) / min(his) <= 0.05
        report(3, "perp-variant decay with eps-independent equivalence (<=5% drift)")


class TestItem4DissipationMonitor:
    def test_zero_violations(self, decay_runs, coeffs_std, consts, bgkq):
        consts_q = constants_ledger(bgkq, k_max=1)
        for family, runs in decay_runs.items():
            cs = consts if family == "linear" else consts_q
            for eps, rec in runs.items():
                repm = dissipation_monitor(rec, coeffs_std, cs)
                assert repm.passed, (family, eps, repm.violations[:3])
        report(4, "Gronwall dissipation bound holds at every interior sample")


@pytest.fixture(scope="module")
def fit(bgk):
    return fit_dispersion(bgk, (1.0, 0.0), np.linspace(0.02, 0.3, 15))


class TestItem5BranchTheory:

    def test_alpha_and_symmetry(self, fit):
        assert abs(fit.alpha[0]) <= 1e-6
        assert abs(fit.alpha[2]) <= 1e-6
        gap = np.max(np.abs(fit.branch_values[1] - np.conj(fit.branch_values[-1])))
        assert gap <= 1e-10
        report(5, "alpha_0 = alpha_2 = 0 (1e-6); conjugate acoustic pair (1e-10)")

    def test_cubic_residual_self_convergence(self, bgk, fit):
        half = fit_dispersion(bgk, (1.0, 0.0), np.linspace(0.02, 0.15, 12))
        quarter = fit_dispersion(bgk, (1.0, 0.0), np.linspace(0.01, 0.075, 12))
        assert np.isfinite(fit.gamma_bound)
        assert half.gamma_bound <= 4.0 * fit.gamma_bound + 1.0
        assert quarter.gamma_bound <= 4.0 * half.gamma_bound + 1.0
        for f in (fit, half, quarter):
            for j, vals in f.branch_values.items():
                gam = vals - (1j * f.alpha[j] * f.zeta_grid
                              - f.beta[j] * f.zeta_grid**2)
                assert np.all(np.abs(gam) <= f.gamma_bound * f.zeta_grid**3 + 1e-12)
        report(5, "cubic residual bound self-convergent under grid halving")

    def test_remainder_gap(self, fit):
        assert fit.sigma >= 0.5
        report(5, f"remainder spectral abscissa <= -sigma (sigma={fit.sigma:.3f})")

    def test_partition_at_t_zero(self, bgk):
        rng = np.random.default_rng(13)
        h = random_field(bgk.basis, 2, rng)
        parts, _ = semigroup_decompose(h, bgk, 0.1, 0.0)
        recon = sum(parts[j].coeffs for j in (-1, 0, 1, 2)) \
            + parts["remainder"].coeffs
        gap = np.max(np.abs(recon - h.coeffs)) / max(np.max(np.abs(h.coeffs)), 1e-300)
        assert gap <= 1e-10
        report(5, "semigroup partition at t = 0 exact to 1e-10")


@pytest.fixture(scope="module")
def ill_study(bgk):
    return convergence_study(bgk, EPS_GRID_HYDRO, "ill_prepared", T=1.0,
                             k=1, mx=6, amplitude=0.05, n_samples=41)


@pytest.fixture(scope="module")
def well_study(bgkq):
    return convergence_study(bgkq, EPS_GRID_HYDRO, "well_prepared", T=1.0,
                             k=1, mx=6, amplitude=0.02, n_samples=41)


class TestItem6HydrodynamicLimit:

    def test_ill_prepared_rates(self, ill_study):
        assert ill_study["slopes"]["err_timeavg"] >= 0.35
        for row in ill_study["rows"]:
            assert row["early_sup"] >= 0.5 * ill_study["acoustic_norm"]
        report(6, "ill-prepared: time-averaged slope >= 0.35; sup retains acoustics")

    def test_well_prepared_rates(self, well_study):
        assert well_study["slopes"]["err_sup"] >= 0.35
        assert well_study["slopes"]["err_timeavg"] >= 0.35
        report(6, "well-prepared (nonlinear): sup-in-time slope >= 0.35")

    def test_limit_invariants(self, bgkq):
        from knudsenlab.hydro import (NSState, extract_moments, leray_project,
                                      ns_solve, transport_coefficients)

        h_in = build_initial_data(bgkq.basis, 6, "ill_prepared", seed=3,
                                  amplitude=0.05, model=bgkq)
        mom = extract_moments(h_in)
        nu, kappa = transport_coefficients(bgkq)
        u0 = leray_project(mom.u_hat, 6)
        theta0 = -0.5 * (mom.rho_hat - mom.theta_hat)
        _, states = ns_solve(NSState(u0, theta0, nu, kappa), 0.5, 0.005)
        for st in states:
            assert st.leray_residual() <= 1e-12
            # Boussinesq holds by construction: rho(t) := -theta(t)
            rho = -st.theta_hat
            assert np.max(np.abs(rho + st.theta_hat)) <= 1e-12
        report(6, "limit solution satisfies Boussinesq and Leray to 1e-12")

    def test_acoustic_averaging_scaling(self, ill_study):
        assert ill_study["slopes"]["acoustic_avg_sq"] >= 1.7
        report(6, "acoustic time-average squared scaling O(eps^2), slope >= 1.7")


class TestItem7Reproducibility:
    CFG = """
[model]
kind = hydro_bgk
order = 10
mx = 16

[epsilon]
grid = 0.5, 0.2

[experiment]
t_end = 0.4
amplitude = 0.05
data = ill_prepared

[runtime]
seed = 9
"""

    def test_byte_identical_and_thread_drift(self, tmp_path):
        cfg = tmp_path / "cfg.ini"
        cfg.write_text(self.CFG)
        outs = [tmp_path / n for n in ("a", "b", "c")]
        assert cli.main(["decay-sweep", "--config", str(cfg),
                         "--output", str(outs[0])]) == 0
        assert cli.main(["decay-sweep", "--config", str(cfg),
                         "--output", str(outs[1])]) == 0
        assert (outs[0] / "decay.csv").read_bytes() \
            == (outs[1] / "decay.csv").read_bytes()
        assert cli.main(["decay-sweep", "--config", str(cfg),
                         "--output", str(outs[2]), "--threads", "2"]) == 0
        a = (outs[0] / "decay.csv").read_text().splitlines()[2:]
        c = (outs[2] / "decay.csv").read_text().splitlines()[2:]
        assert len(a) == len(c)
        for ra, rc in zip(a, c):
            va = np.array([float(x) for x in ra.split(",")])
            vc = np.array([float(x) for x in rc.split(",")])
            assert np.all(np.abs(va - vc) <= 1e-13 * np.maximum(np.abs(va), 1.0))
        result = json.loads((outs[0] / "result.json").read_text())
        assert result["passed"]
        report(7, "identical config+seed byte-identical; threaded drift <= 1e-13")
