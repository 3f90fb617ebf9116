import math

import numpy as np
import pytest

from needlet_lab import (
    PoissonSample,
    coefficient_at,
    coefficient_sd,
    coefficients,
    covariance,
    derive_seed,
    eval_field,
    evaluation_matrix,
    exact_fourth_cumulant,
    expected_functional_moments,
    functional_norm_sq,
    gauss_legendre_sphere,
    normalization_constants,
    reconstruct,
    sample_poisson_field,
)
from conftest import random_unit_vectors

FOUR_PI = 4.0 * math.pi


def _empty_sample(nu_t):
    pts = np.zeros((0, 3))
    return PoissonSample(nu_t=nu_t, seed=0, points=pts)


def _single_point_sample(nu_t, x):
    return PoissonSample(nu_t=nu_t, seed=0, points=np.asarray([x], dtype=float))


def test_empty_sample_gives_zero_field(desk_ws, frame_j4):
    s = _empty_sample(50.0)
    xs = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    assert np.all(eval_field(desk_ws, 4, s, xs) == 0.0)
    assert np.all(coefficients(frame_j4, s) == 0.0)
    assert functional_norm_sq(desk_ws, 4, s) == 0.0
    assert functional_norm_sq(desk_ws, 4, s, kind="sobolev", alpha=1.0) == 0.0


def test_single_point_field_value(desk_ws):
    x = np.array([0.0, 0.0, 1.0])
    nu = 50.0
    s = _single_point_sample(nu, x)
    j = 4
    expected = desk_ws.spectral_sum(j, 2) / (math.sqrt(nu) * math.sqrt(desk_ws.sigma_j_sq(j)))
    assert eval_field(desk_ws, j, s, x)[0] == pytest.approx(expected, rel=1e-12)


def test_zero_intensity_rejected(desk_ws, frame_j4):
    s = _empty_sample(0.0)
    with pytest.raises(ValueError):
        eval_field(desk_ws, 4, s, np.array([0.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        coefficients(frame_j4, s)


def test_monte_carlo_variance_of_field(desk_ws):
    j, nu, reps = 4, 50.0, 4000
    x = np.array([0.0, 0.0, 1.0])
    vals = np.array(
        [eval_field(desk_ws, j, sample_poisson_field(nu, derive_seed(808, r)), x)[0] for r in range(reps)]
    )
    mean = vals.mean()
    var = vals.var(ddof=1)
    c4 = exact_fourth_cumulant(desk_ws, j, nu)
    se_var = math.sqrt((c4 + 2.0) / reps)
    assert abs(mean) <= 3.0 * math.sqrt(1.0 / reps)
    assert abs(var - 1.0) <= 3.0 * se_var


def test_monte_carlo_variance_of_coefficients(desk_ws, frame_j4):
    nu, reps = 50.0, 4000
    k = frame_j4.central_index
    raw = np.empty(reps)
    norm = np.empty(reps)
    for r in range(reps):
        s = sample_poisson_field(nu, derive_seed(909, r))
        raw[r] = coefficient_at(frame_j4, s, k, "raw")
        norm[r] = coefficient_at(frame_j4, s, k, "normalized")
    sd_raw = coefficient_sd(frame_j4, "raw")[k]
    assert sd_raw == pytest.approx(
        math.sqrt(frame_j4.norms_sq[k] / frame_j4.sigma_j_sq), rel=1e-14
    )
    se = math.sqrt(2.0 + exact_fourth_cumulant(desk_ws, 4, nu, frame=frame_j4, k=k, mode="normalized"))
    assert abs(norm.var(ddof=1) - 1.0) <= 3.0 * se / math.sqrt(reps)
    assert abs(raw.var(ddof=1) - sd_raw**2) <= 3.0 * se * sd_raw**2 / math.sqrt(reps)


def test_field_covariance_unit_diagonal(desk_ws):
    rng = np.random.default_rng(17)
    xs = random_unit_vectors(rng, 5)
    cov = covariance(desk_ws, 4, "field_points", points=xs)
    assert np.allclose(np.diag(cov.entries), 1.0, atol=1e-12)
    assert np.allclose(cov.entries, cov.entries.T)
    assert cov.min_eigenvalue() >= -1e-10


def test_coeff_covariance_flavors(desk_ws, frame_j4):
    idx = [10, 200, 400, 700]
    raw = covariance(desk_ws, 4, "coeff_raw", frame=frame_j4, indices=idx)
    nrm = covariance(desk_ws, 4, "coeff_normalized", frame=frame_j4, indices=idx)
    sd = coefficient_sd(frame_j4, "raw")[idx]
    assert np.allclose(np.diag(raw.entries), sd**2, rtol=1e-12)
    assert np.allclose(np.diag(nrm.entries), 1.0, atol=1e-12)
    assert nrm.min_eigenvalue() >= -1e-10


def test_covariance_rejects_duplicates(desk_ws):
    xs = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
    with pytest.raises(ValueError):
        covariance(desk_ws, 4, "field_points", points=xs)


def test_covariance_offdiagonal_decays_in_level(desk_ws):
    # two points at distance Sigma_j^{-1/2} per level: correlation shrinks as j grows
    vals = []
    for j in range(2, 8):
        d = desk_ws.seq.sigma_loc(j) ** -0.5
        xs = np.array([[0.0, 0.0, 1.0], [math.sin(d), 0.0, math.cos(d)]])
        cov = covariance(desk_ws, j, "field_points", points=xs)
        vals.append(abs(float(cov.entries[0, 1])))
    # downward trend despite kernel oscillation
    assert vals[-1] < vals[0] / 2.0
    assert np.polyfit(range(len(vals)), np.log(vals), 1)[0] < 0.0


def test_reconstruction_identity(desk_ws, frame_j4):
    rng = np.random.default_rng(19)
    xs = random_unit_vectors(rng, 20)
    for seed in (1, 2, 3):
        s = sample_poisson_field(60.0, derive_seed(5150, seed))
        beta = coefficients(frame_j4, s, "raw")
        direct = eval_field(desk_ws, 4, s, xs)
        recon = reconstruct(frame_j4, beta, xs)
        rel = np.max(np.abs(recon - direct) / np.maximum(1.0, np.abs(direct)))
        assert rel < 1e-8


def test_reconstruct_zero_coefficients(frame_j4):
    xs = np.array([[0.0, 0.0, 1.0]])
    assert reconstruct(frame_j4, np.zeros(frame_j4.count), xs)[0] == 0.0


def test_evaluation_matrix_bounded_by_sup_norm(desk_ws, frame_j4):
    rng = np.random.default_rng(29)
    xs = random_unit_vectors(rng, 15)
    R = evaluation_matrix(frame_j4, xs)
    assert R.shape == (15, frame_j4.count)
    consts = normalization_constants(desk_ws, frame_j4)
    # sup over k of psi_k(xi_k) scaled to the largest weight bounds every entry
    zeta_inf = consts.zeta["inf"]
    sig = desk_ws.seq.sigma_loc(4)
    lam_max = frame_j4.weights.max()
    lam_k = frame_j4.weights[consts.k]
    bound = zeta_inf * sig * math.sqrt(lam_max / lam_k)
    assert np.max(np.abs(R)) <= bound * (1.0 + 1e-9)


def test_exact_fourth_cumulant_scaling_and_positivity(desk_ws, frame_j4):
    c = exact_fourth_cumulant(desk_ws, 4, 50.0)
    assert c > 0
    assert exact_fourth_cumulant(desk_ws, 4, 100.0) == pytest.approx(c / 2.0, rel=1e-14)
    ck = exact_fourth_cumulant(desk_ws, 4, 50.0, frame=frame_j4, k=3, mode="raw")
    assert ck > 0
    with pytest.raises(ValueError):
        exact_fourth_cumulant(desk_ws, 4, 50.0, rule=gauss_legendre_sphere(10))


def test_fourth_cumulant_rate_bounded_across_levels(desk_ws):
    # exact cum4 * nu / (S_j^4 eps_j^2) stays bounded over desk levels
    seq = desk_ws.seq
    ratios = []
    for j in range(2, 8):
        c = exact_fourth_cumulant(desk_ws, j, 100.0)
        ratios.append(c * 100.0 / (seq.centers[j] ** 4 * seq.shifts[j] ** 2))
    assert max(ratios) < 1.0
    assert ratios[-1] <= ratios[0]  # the theorem rate is an upper envelope


def test_sobolev_route_matches_cubature_route(desk_ws):
    for seed in (5, 6):
        s = sample_poisson_field(25.0, derive_seed(2222, seed))
        via_cubature = functional_norm_sq(desk_ws, 3, s, kind="l2")
        via_pairs = functional_norm_sq(desk_ws, 3, s, kind="sobolev", alpha=0.0)
        assert via_pairs == pytest.approx(via_cubature, rel=1e-8)


def test_functional_moment_identities(desk_ws):
    for j in range(2, 9):
        for nu in (25.0, 50.0, 100.0, 200.0):
            m = expected_functional_moments(desk_ws, j, nu)
            assert m.m2 == pytest.approx(FOUR_PI, rel=1e-14)
            assert m.identity_residual == pytest.approx(FOUR_PI / nu, rel=1e-10)
    alpha = 1.5
    m = expected_functional_moments(desk_ws, 4, 50.0, alpha)
    assert m.m2 > FOUR_PI  # alpha weight increases the energy
    assert m.m4 > m.m2**2
    assert m.hs_sq > 0


def test_monte_carlo_l2_mean(desk_ws):
    j, nu, reps = 3, 25.0, 1500
    rule = gauss_legendre_sphere(2 * int(desk_ws.seq.centers[j + 1]))
    vals = np.array(
        [
            functional_norm_sq(desk_ws, j, sample_poisson_field(nu, derive_seed(3333, r)), rule=rule)
            for r in range(reps)
        ]
    )
    m = expected_functional_moments(desk_ws, j, nu)
    se = math.sqrt((m.m4 - m.m2**2) / reps)
    assert abs(vals.mean() - FOUR_PI) <= 3.0 * se
    se_sq = np.std(vals**2, ddof=1) / math.sqrt(reps)
    assert abs(np.mean(vals**2) - m.m4) <= 4.0 * se_sq


def test_normalization_constants_sane(desk_ws, frame_j5):
    consts = normalization_constants(desk_ws, frame_j5)
    assert consts.sigma_j_sq == pytest.approx(desk_ws.sigma_j_sq(5))
    assert consts.cb > 0 and consts.sigma_bar_sq > 0
    for q in ("2", "3", "4", "inf"):
        assert consts.zeta[q] > 0
    assert consts.norms_sq_min <= consts.norms_sq_max
    # sigma-bar consistency trend: sigma~_k^2/sigma_j^2 vs sigma_bar^2/(S_j^2 eps_j)
    seq = desk_ws.seq
    ratios = []
    for j in (3, 5, 7):
        from needlet_lab import needlet_frame

        fr = needlet_frame(desk_ws, j)
        c = normalization_constants(desk_ws, fr)
        analytic_var = fr.norms_sq[c.k] / fr.sigma_j_sq
        asymptotic_var = c.sigma_bar_sq / (seq.centers[j] ** 2 * seq.shifts[j])
        ratios.append(analytic_var / asymptotic_var)
    assert abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0) or abs(ratios[-1] - 1.0) < 0.05


def test_realization_csv_export(tmp_path, desk_ws):
    from needlet_lab.field import realize_field

    s = sample_poisson_field(10.0, 77)
    xs = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    r = realize_field(desk_ws, 3, s, xs)
    path = tmp_path / "realization.csv"
    r.export_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "point_id,theta,phi,value"
    assert len(lines) == 3


def test_moments_json_export(tmp_path, desk_ws):
    import json

    from needlet_lab.field import export_moments_json

    m = expected_functional_moments(desk_ws, 3, 25.0)
    path = tmp_path / "moments.json"
    export_moments_json(m, 25.0, path)
    payload = json.loads(path.read_text())
    assert payload["m2"] == pytest.approx(FOUR_PI)
    assert payload["identity_residual"] == pytest.approx(payload["four_pi_over_nu"], rel=1e-10)
