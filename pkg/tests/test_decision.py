"""Decision-analysis layer: oracles first, then path, pricing, and windows.

The fused-lasso homotopy is validated against two independent solvers that
share none of its machinery: a scaled ADMM for general cell counts, and a
proximal-gradient method whose three-cell total-variation prox is computed
exactly by enumerating fusion patterns.  Stationarity is checked through
the cumulative-gradient dual recovery in ``kkt_residual``.
"""

import itertools

import numpy as np
import pytest

from sofreg.basis import BSplineBasis, Domain, integrate_basis
from sofreg.decision import (
    AggregatedDesign,
    Partition,
    acceptable_family,
    aggregate,
    analyze,
    build_estimate,
    ci_selection,
    ci_windows,
    count_level_changes,
    empirical_mse,
    evaluate_path,
    extract_windows,
    fused_lasso_path,
    kkt_residual,
    path_delta_at,
    predictive_mse_draws,
    selection_on_grid,
    PathDiagnostics,
    _warn_on_level_increase,
)
from sofreg.funcdata import CoefCurve, build_design
from sofreg.gibbs import FitConfig, PosteriorDraws


# --- independent solvers used as oracles -------------------------------------------


def admm_fused_lasso(r, a, lam_std, iters=400_000, tol=1e-13):
    """Scaled ADMM for 1/2||r - Ax||^2 + lam_std ||Dx||_1, D = first differences."""
    n, k = a.shape
    d = np.diff(np.eye(k), axis=0)
    rho = max(lam_std, 1.0)
    lhs = a.T @ a + rho * d.T @ d
    chol = np.linalg.cholesky(lhs)
    atr = a.T @ r

    def solve(v):
        return np.linalg.solve(chol.T, np.linalg.solve(chol, v))

    x = solve(atr)
    z = d @ x
    u = np.zeros(k - 1)
    thr = lam_std / rho
    for _ in range(iters):
        x = solve(atr + rho * d.T @ (z - u))
        dx = d @ x
        z_new = np.sign(dx + u) * np.maximum(np.abs(dx + u) - thr, 0.0)
        primal = np.max(np.abs(dx - z_new))
        dual = rho * np.max(np.abs(d.T @ (z_new - z)))
        u = u + dx - z_new
        z = z_new
        if primal < tol and dual < tol:
            break
    return x


def tv_prox_3(v, gamma):
    """Exact argmin of 1/2||x - v||^2 + gamma(|x2-x1| + |x3-x2|), by enumeration.

    For each contiguous fusion pattern and boundary sign assignment the
    stationary point is available in closed form; sign-consistent candidates
    are compared on the exact objective.  The fully fused candidate needs no
    consistency check, so the optimum is always among the candidates.
    """
    v = np.asarray(v, dtype=float)
    patterns = [
        [[0, 1, 2]],
        [[0], [1, 2]],
        [[0, 1], [2]],
        [[0], [1], [2]],
    ]
    best_x, best_obj = np.full(3, v.mean()), None
    for blocks in patterns:
        nb = len(blocks)
        sign_sets = [()] if nb == 1 else itertools.product((-1.0, 1.0), repeat=nb - 1)
        for signs in sign_sets:
            m = np.empty(nb)
            for b, blk in enumerate(blocks):
                s_prev = signs[b - 1] if b > 0 else 0.0
                s_next = signs[b] if b < nb - 1 else 0.0
                m[b] = np.mean(v[blk]) - gamma * (s_prev - s_next) / len(blk)
            if any(np.sign(m[b + 1] - m[b]) != signs[b] for b in range(nb - 1)):
                continue
            x = np.empty(3)
            for b, blk in enumerate(blocks):
                x[blk] = m[b]
            obj = 0.5 * np.sum((x - v) ** 2) + gamma * np.sum(np.abs(np.diff(x)))
            if best_obj is None or obj < best_obj:
                best_obj, best_x = obj, x
    return best_x


def prox_gradient_k3(r, a, lam_std, iters=500_000, tol=1e-15):
    step = 1.0 / np.linalg.eigvalsh(a.T @ a)[-1]
    x = np.zeros(3)
    for _ in range(iters):
        x_new = tv_prox_3(x - step * (a.T @ (a @ x - r)), step * lam_std)
        if np.max(np.abs(x_new - x)) < tol:
            return x_new
        x = x_new
    return x


def random_problem(rng, n, k):
    a = rng.standard_normal((n, k)) + 0.3
    delta_true = np.repeat(rng.standard_normal(-(-k // 3)), 3)[:k]
    r = a @ delta_true + 0.4 * rng.standard_normal(n)
    part = Partition.regular(Domain(0.0, 1.0), k)
    return r, AggregatedDesign(matrix=a, partition=part)


# --- oracle cross-checks ------------------------------------------------------------


def test_oracles_agree_on_identity_design():
    # with A = I the fused-lasso solution IS the TV prox, so the two
    # independent routes must coincide before either is trusted
    rng = np.random.default_rng(7)
    for _ in range(25):
        v = 3.0 * rng.standard_normal(3)
        gamma = rng.uniform(0.05, 2.0)
        via_prox = tv_prox_3(v, gamma)
        via_admm = admm_fused_lasso(v, np.eye(3), gamma)
        assert np.max(np.abs(via_prox - via_admm)) < 1e-8


def test_tv_prox_closed_form_cases():
    # large penalty fuses everything to the mean
    v = np.array([1.0, 5.0, -2.0])
    assert np.allclose(tv_prox_3(v, 50.0), np.full(3, v.mean()), atol=1e-12)
    # zero penalty returns the input
    assert np.allclose(tv_prox_3(v, 0.0), v, atol=1e-12)
    # monotone input with small penalty shrinks the gaps by gamma per boundary
    x = tv_prox_3(np.array([0.0, 10.0, 20.0]), 1.0)
    assert np.allclose(x, [1.0, 10.0, 19.0], atol=1e-12)


# --- path correctness ----------------------------------------------------------------


def test_path_knots_satisfy_kkt_on_random_designs():
    rng = np.random.default_rng(11)
    for trial in range(20):
        k = int(rng.integers(2, 51))
        n = int(rng.integers(max(k + 5, 25), 80))
        r, agg = random_problem(rng, n, k)
        path = fused_lasso_path(r, agg)
        assert not path.rank_deficient
        assert np.all(np.diff(path.lambdas) < 0)
        for lam, delta in zip(path.lambdas, path.deltas):
            assert kkt_residual(delta, r, agg, lam) < 1e-8
        # interpolated solutions between knots are also stationary
        mids = 0.5 * (path.lambdas[:-1] + path.lambdas[1:])
        for lam in mids[:: max(1, mids.size // 8)]:
            delta = path_delta_at(path, float(lam))
            assert kkt_residual(delta, r, agg, float(lam)) < 1e-8


def test_path_endpoint_matches_least_squares():
    rng = np.random.default_rng(3)
    r, agg = random_problem(rng, 40, 9)
    path = fused_lasso_path(r, agg)
    direct = np.linalg.lstsq(agg.matrix, r, rcond=None)[0]
    assert np.max(np.abs(path_delta_at(path, 0.0) - direct)) < 1e-8


def test_path_endpoint_matches_constant_fit():
    rng = np.random.default_rng(4)
    r, agg = random_problem(rng, 35, 7)
    path = fused_lasso_path(r, agg)
    total = agg.matrix.sum(axis=1)
    c = float(total @ r / (total @ total))
    top = path.deltas[0]
    assert np.max(np.abs(top - c)) < 1e-8
    assert np.max(np.abs(path_delta_at(path, 10.0 * path.lambda_max) - c)) < 1e-8
    assert count_level_changes(top) == 0


def test_path_matches_prox_gradient_oracle_k3():
    rng = np.random.default_rng(5)
    for trial in range(4):
        r, agg = random_problem(rng, 30, 3)
        path = fused_lasso_path(r, agg)
        n = r.size
        lam_grid = np.concatenate(
            [path.lambdas[[0]], 0.5 * (path.lambdas[:-1] + path.lambdas[1:]), [0.0]]
        )[:5]
        for lam in lam_grid:
            mine = path_delta_at(path, float(lam))
            oracle = prox_gradient_k3(r, agg.matrix, 0.5 * n * float(lam))
            assert np.max(np.abs(mine - oracle)) < 1e-8


def test_path_matches_admm_oracle_general_k():
    rng = np.random.default_rng(6)
    r, agg = random_problem(rng, 45, 12)
    path = fused_lasso_path(r, agg)
    n = r.size
    for frac in (0.75, 0.4, 0.15, 0.02):
        lam = float(frac * path.lambda_max)
        mine = path_delta_at(path, lam)
        oracle = admm_fused_lasso(r, agg.matrix, 0.5 * n * lam)
        assert np.max(np.abs(mine - oracle)) < 1e-6


def test_rank_deficient_design_stops_path_and_reports():
    rng = np.random.default_rng(8)
    k, n = 24, 8
    a = rng.standard_normal((n, k)) + 0.3
    part = Partition.regular(Domain(0.0, 1.0), k)
    agg = AggregatedDesign(matrix=a, partition=part)
    r = rng.standard_normal(n)
    path = fused_lasso_path(r, agg)
    assert path.rank_deficient
    assert path.lambdas[-1] > 0.0
    for lam, delta in zip(path.lambdas, path.deltas):
        assert kkt_residual(delta, r, agg, lam) < 1e-8
    with pytest.raises(ValueError, match="rank deficient"):
        path_delta_at(path, 0.5 * path.lambdas[-1])
    with pytest.raises(ValueError, match="rank deficient"):
        path_delta_at(path, 0.0)


def test_kkt_residual_rejects_perturbed_solutions():
    rng = np.random.default_rng(9)
    r, agg = random_problem(rng, 40, 10)
    path = fused_lasso_path(r, agg)
    mid = len(path.lambdas) // 2
    lam, delta = float(path.lambdas[mid]), path.deltas[mid].copy()
    assert kkt_residual(delta, r, agg, lam) < 1e-8
    delta[3] += 0.05
    assert kkt_residual(delta, r, agg, lam) > 1e-4


def test_level_increase_checker_warns(caplog):
    # fabricated path whose level count drops as the penalty shrinks
    from sofreg.decision import SolutionPath

    bad = SolutionPath(
        lambdas=np.array([2.0, 1.0]),
        deltas=np.array([[0.0, 1.0, 2.0], [1.0, 1.0, 1.0]]),
        n_obs=10,
    )
    with caplog.at_level("WARNING", logger="sofreg.decision"):
        _warn_on_level_increase(bad)
    assert any("level count not monotone" in rec.message for rec in caplog.records)


# --- partitions and aggregation ------------------------------------------------------


def test_partition_validation():
    with pytest.raises(ValueError, match="strictly increasing"):
        Partition(np.array([0.0, 0.5, 0.5, 1.0]))
    with pytest.raises(ValueError, match="two breakpoints"):
        Partition(np.array([0.3]))
    with pytest.raises(ValueError, match="finite"):
        Partition(np.array([0.0, np.inf]))
    part = Partition.regular(Domain(0.0, 1.0), 4)
    assert part.size == 4
    assert [c.lo for c in part.cells()] == pytest.approx([0.0, 0.25, 0.5, 0.75])


def test_partition_locate_closes_right_endpoint():
    part = Partition(np.array([0.0, 0.25, 0.75, 1.0]))
    idx = part.locate(np.array([0.0, 0.24, 0.25, 0.9, 1.0]))
    assert idx.tolist() == [0, 0, 1, 2, 2]
    with pytest.raises(ValueError, match="outside"):
        part.locate(np.array([1.1]))


def _constant_curve(basis, value, domain, sid="s"):
    # clamped B-splines sum to one, so equal coefficients give a flat curve
    return CoefCurve(subject_id=sid, coeffs=np.full(basis.size, value), basis=basis, domain=domain)


def test_aggregate_constant_curve_gives_cell_widths():
    basis = BSplineBasis(Domain(0.0, 1.0), 10, 3)
    curves = [_constant_curve(basis, 1.0, Domain(0.0, 1.0))]
    part = Partition.regular(Domain(0.0, 1.0), 5)
    agg = aggregate(curves, part)
    assert np.allclose(agg.matrix, 0.2, atol=1e-12)


def test_aggregate_row_sums_match_full_integral():
    rng = np.random.default_rng(12)
    basis = BSplineBasis(Domain(0.0, 1.0), 12, 3)
    curves = []
    for i in range(6):
        lo = float(rng.uniform(0.0, 0.3))
        hi = float(rng.uniform(0.7, 1.0))
        curves.append(
            CoefCurve(
                subject_id=f"s{i}",
                coeffs=rng.standard_normal(basis.size),
                basis=basis,
                domain=Domain(lo, hi),
            )
        )
    part = Partition.regular(Domain(0.0, 1.0), 17)
    agg = aggregate(curves, part)
    for row, curve in zip(agg.matrix, curves):
        full = float(curve.coeffs @ integrate_basis(basis, curve.domain))
        assert abs(row.sum() - full) < 1e-8


def test_aggregate_short_subject_has_zero_trailing_cells():
    basis = BSplineBasis(Domain(0.0, 1.0), 8, 3)
    curves = [_constant_curve(basis, 2.0, Domain(0.0, 0.4))]
    part = Partition.regular(Domain(0.0, 1.0), 5)
    agg = aggregate(curves, part)
    assert np.allclose(agg.matrix[0, :2], 0.4, atol=1e-12)
    assert agg.matrix[0, 2] == pytest.approx(0.0, abs=1e-12)  # empty beyond 0.4
    assert np.all(agg.matrix[0, 3:] == 0.0)


def test_aggregate_rejects_curve_outside_partition():
    basis = BSplineBasis(Domain(0.0, 2.0), 8, 3)
    curves = [_constant_curve(basis, 1.0, Domain(0.0, 2.0))]
    part = Partition.regular(Domain(0.0, 1.0), 4)
    with pytest.raises(ValueError, match="not inside"):
        aggregate(curves, part)


# --- losses --------------------------------------------------------------------------


def test_empirical_mse_matches_loop_oracle():
    rng = np.random.default_rng(13)
    n, k, p = 20, 6, 3
    a = rng.standard_normal((n, k))
    part = Partition.regular(Domain(0.0, 1.0), k)
    agg = AggregatedDesign(matrix=a, partition=part)
    y = rng.standard_normal(n)
    z = rng.standard_normal((n, p))
    alpha = rng.standard_normal(p)
    delta = rng.standard_normal(k)
    got = empirical_mse(delta, y, alpha, z, agg)
    want = sum(
        (y[i] - z[i] @ alpha - a[i] @ delta) ** 2 for i in range(n)
    ) / n
    assert got == pytest.approx(want, abs=1e-12)


def test_empirical_mse_degenerate_cases():
    rng = np.random.default_rng(14)
    n, k = 15, 4
    a = rng.standard_normal((n, k))
    agg = AggregatedDesign(matrix=a, partition=Partition.regular(Domain(0.0, 1.0), k))
    y = rng.standard_normal(n)
    y -= y.mean()
    z = np.zeros((n, 0))
    alpha = np.zeros(0)
    # zero fit on centered data leaves the second moment
    assert empirical_mse(np.zeros(k), y, alpha, z, agg) == pytest.approx(
        float(y @ y / n), abs=1e-12
    )
    # exactly representable targets give zero loss
    delta = rng.standard_normal(k)
    assert empirical_mse(delta, a @ delta, alpha, z, agg) == pytest.approx(0.0, abs=1e-20)


def test_predictive_mse_matches_loop_oracle_per_draw():
    rng = np.random.default_rng(15)
    n, k, p, s = 12, 5, 2, 7
    a = rng.standard_normal((n, k))
    agg = AggregatedDesign(matrix=a, partition=Partition.regular(Domain(0.0, 1.0), k))
    z = rng.standard_normal((n, p))
    y_pred = rng.standard_normal((s, n))
    alpha_draws = rng.standard_normal((s, p))
    delta = rng.standard_normal(k)
    got = predictive_mse_draws(delta, y_pred, alpha_draws, z, agg)
    for sdx in range(s):
        want = sum(
            (y_pred[sdx, i] - z[i] @ alpha_draws[sdx] - a[i] @ delta) ** 2
            for i in range(n)
        ) / n
        assert got[sdx] == pytest.approx(want, abs=1e-12)


def test_predictive_mse_zero_noise_draws_reduce_to_empirical_form():
    rng = np.random.default_rng(16)
    n, k, p = 10, 4, 2
    a = rng.standard_normal((n, k))
    agg = AggregatedDesign(matrix=a, partition=Partition.regular(Domain(0.0, 1.0), k))
    z = rng.standard_normal((n, p))
    alpha = rng.standard_normal(p)
    fitted = z @ alpha + a @ rng.standard_normal(k)
    delta = rng.standard_normal(k)
    per_draw = predictive_mse_draws(delta, fitted[None, :], alpha[None, :], z, agg)
    assert per_draw[0] == pytest.approx(
        empirical_mse(delta, fitted, alpha, z, agg), abs=1e-12
    )


# --- acceptable family ---------------------------------------------------------------


def _fake_diag(percent, levels, lambdas=None):
    percent = np.asarray(percent, dtype=float)
    m = percent.shape[0]
    lams = np.linspace(2.0, 0.1, m) if lambdas is None else np.asarray(lambdas, float)
    emp = np.arange(m, dtype=float)
    emp[np.flatnonzero(np.all(percent == 0.0, axis=1))[0]] = -1.0
    return PathDiagnostics(
        lambdas=lams,
        deltas=np.zeros((m, 3)),
        n_level_changes=np.asarray(levels),
        empirical=emp,
        percent_increase=percent,
        idx_lambda_min=int(np.flatnonzero(np.all(percent == 0.0, axis=1))[0]),
    )


def test_acceptable_family_matches_counting_oracle():
    rng = np.random.default_rng(17)
    s = 10
    percent = np.vstack(
        [
            rng.uniform(-1.0, 9.0, s),  # mixed signs
            np.zeros(s),  # the optimum
            rng.uniform(0.5, 3.0, s),  # all positive: never acceptable for eps>0
        ]
    )
    diag = _fake_diag(percent, levels=[1, 2, 0])
    eps = 0.25
    fam = acceptable_family(diag, eps)
    need = int(np.ceil(eps * s))
    for row, member in zip(percent, fam.members):
        assert member == (np.sort(row)[need - 1] <= 0.0)
    assert fam.members[diag.idx_lambda_min]


def test_acceptable_family_epsilon_zero_accepts_all():
    percent = np.vstack([np.full(6, 5.0), np.zeros(6), np.full(6, 80.0)])
    diag = _fake_diag(percent, levels=[0, 2, 3])
    fam = acceptable_family(diag, 0.0)
    assert fam.members.all()
    # fully fused constant (zero level changes) is the simplest
    assert fam.idx_simplest == 0


def test_acceptable_family_ties_break_toward_larger_penalty():
    percent = np.vstack([np.full(4, -1.0), np.full(4, -1.0), np.zeros(4)])
    diag = _fake_diag(percent, levels=[2, 2, 2])
    fam = acceptable_family(diag, 0.5)
    assert fam.members.all()
    assert fam.idx_simplest == 0  # first entry has the largest penalty


def test_acceptable_family_rejects_bad_epsilon():
    diag = _fake_diag(np.zeros((1, 3)), levels=[0])
    with pytest.raises(ValueError, match="epsilon"):
        acceptable_family(diag, 1.5)


# --- step estimates and windows ------------------------------------------------------


def test_build_estimate_merges_equal_levels():
    part = Partition.regular(Domain(0.0, 1.0), 5)
    est = build_estimate(part, np.array([1.0, 1.0, -2.0, -2.0, -2.0]), lam=0.3)
    assert est.levels.tolist() == [1.0, -2.0]
    assert est.starts.tolist() == [0.0, 0.4]
    assert est.ends.tolist() == [0.4, 1.0]
    # adjacent runs keep distinct levels by construction
    assert np.all(np.abs(np.diff(est.levels)) > 0)
    assert est.level_at(np.array([0.1, 0.4, 0.95])).tolist() == [1.0, -2.0, -2.0]


def test_extract_windows_all_zero_is_single_zero_window():
    part = Partition.regular(Domain(0.0, 1.0), 4)
    est = build_estimate(part, np.zeros(4), lam=1.0)
    wins = extract_windows(est, zero_tol=0.0)
    assert len(wins) == 1
    assert wins[0].label == "0"
    assert (wins[0].start, wins[0].end) == (0.0, 1.0)


def test_extract_windows_three_signs():
    part = Partition.regular(Domain(0.0, 1.0), 3)
    est = build_estimate(part, np.array([0.7, 0.0, -0.7]), lam=0.1)
    wins = extract_windows(est, zero_tol=0.0)
    assert [w.label for w in wins] == ["+", "0", "-"]


def test_extract_windows_merges_same_label_and_weights_levels():
    part = Partition(np.array([0.0, 0.25, 1.0]))
    est = build_estimate(part, np.array([2.0, 4.0]), lam=0.1)
    wins = extract_windows(est, zero_tol=0.0)
    assert len(wins) == 1 and wins[0].label == "+"
    assert wins[0].level == pytest.approx(0.25 * 2.0 + 0.75 * 4.0)


def test_extract_windows_zero_tol_thresholds_small_levels():
    part = Partition.regular(Domain(0.0, 1.0), 3)
    est = build_estimate(part, np.array([0.05, 0.8, -0.05]), lam=0.1)
    wins = extract_windows(est, zero_tol=0.1)
    assert [w.label for w in wins] == ["0", "+", "0"]


def test_selection_on_grid_labels_by_sign():
    part = Partition.regular(Domain(0.0, 1.0), 3)
    est = build_estimate(part, np.array([0.5, 0.0, -0.5]), lam=0.1)
    grid = np.array([0.1, 0.5, 0.9])
    assert selection_on_grid(est, grid).tolist() == [1, 0, -1]


def test_ci_selection_and_windows():
    grid = np.linspace(0.0, 1.0, 5)
    lower = np.array([0.1, 0.2, -0.5, -2.0, -1.0])
    upper = np.array([0.9, 1.0, 0.5, -0.2, -0.1])
    sel = ci_selection(lower, upper)
    assert sel.tolist() == [1, 1, 0, -1, -1]
    mean = 0.5 * (lower + upper)
    wins = ci_windows(grid, mean, lower, upper)
    assert [w.label for w in wins] == ["+", "-"]
    assert wins[0].start == 0.0 and wins[0].end == pytest.approx(0.25)
    assert wins[1].start == pytest.approx(0.75) and wins[1].end == 1.0


# --- path pricing and the end-to-end pipeline ---------------------------------------


def _fabricated_fit(rng, n=40, k_cells=12):
    basis = BSplineBasis(Domain(0.0, 1.0), 10, 3)
    curves = []
    for i in range(n):
        curves.append(
            CoefCurve(
                subject_id=f"s{i}",
                coeffs=rng.standard_normal(basis.size),
                basis=basis,
                domain=Domain(0.0, 1.0),
            )
        )
    part = Partition.regular(Domain(0.0, 1.0), k_cells)
    agg = aggregate(curves, part)
    delta_true = np.repeat([1.5, 0.0, -1.0], k_cells // 3 + 1)[:k_cells]
    y = agg.matrix @ delta_true + 0.3 * rng.standard_normal(n)
    design = build_design(curves, basis, y)
    s = 300
    theta = 0.02 * rng.standard_normal((s, basis.size))
    alpha = 0.05 * rng.standard_normal((s, design.z.shape[1]))
    fitted = agg.matrix @ delta_true
    draws = PosteriorDraws(
        coeffs=theta,
        basis=basis,
        alpha=alpha,
        alpha_names=design.z_names,
        penalized=design.penalized,
        sigma2=np.full(s, 0.09),
        alpha_scales2=np.ones((s, design.z.shape[1])),
        lambda0=np.ones(s),
        prior="dhs",
        config=FitConfig(),
        y_hat=fitted + design.z @ alpha.mean(axis=0),
        seed=0,
    )
    return curves, part, agg, y, design, draws, delta_true


def test_evaluate_path_grid_is_subsampled_with_endpoints():
    rng = np.random.default_rng(19)
    curves, part, agg, y, design, draws, _ = _fabricated_fit(rng, n=45, k_cells=15)
    targets = draws.y_hat - design.z @ draws.alpha.mean(axis=0)
    path = fused_lasso_path(targets, agg)
    diag = evaluate_path(
        path, y, draws, design, agg, np.random.default_rng(0), pred_draws=50, max_entries=6
    )
    assert diag.lambdas.size <= 6
    assert diag.lambdas[0] == path.lambdas[0]
    assert diag.lambdas[-1] == path.lambdas[-1]
    assert diag.percent_increase.shape == (diag.lambdas.size, 50)
    assert np.all(diag.percent_increase[diag.idx_lambda_min] == 0.0)


def test_analyze_recovers_block_structure_end_to_end():
    rng = np.random.default_rng(20)
    curves, part, agg, y, design, draws, delta_true = _fabricated_fit(rng)
    summary = analyze(
        draws,
        design,
        curves,
        part,
        y,
        np.random.default_rng(1),
        epsilon=0.10,
        pred_draws=200,
    )
    assert summary.family.members[summary.family.idx_lambda_min]
    assert summary.family.members[summary.family.idx_simplest]
    # simplest member is no finer than the empirical optimum
    d = summary.diagnostics
    assert d.n_level_changes[summary.family.idx_simplest] <= d.n_level_changes[d.idx_lambda_min]
    # every stored knot is an exact path solution
    targets = draws.y_hat - design.z @ draws.alpha.mean(axis=0)
    for lam, delta in zip(summary.path.lambdas, summary.path.deltas):
        assert kkt_residual(delta, targets, agg, lam) < 1e-8
    # the empirical optimum tracks the generating block signs; the simplest
    # acceptable member may fuse further, which is the method working as
    # intended rather than a defect
    opt = build_estimate(part, d.deltas[d.idx_lambda_min], d.lambda_min)
    sel = selection_on_grid(opt, np.array([0.1, 0.9]), zero_tol=0.05)
    assert sel[0] == 1 and sel[1] == -1


def test_pipeline_without_scalar_covariates_matches_direct_path():
    # with no covariates the adjusted pseudo-data are the fitted values,
    # so the pipeline reduces to a direct fused-lasso on them
    rng = np.random.default_rng(21)
    basis = BSplineBasis(Domain(0.0, 1.0), 8, 3)
    curves = [
        CoefCurve(
            subject_id=f"s{i}",
            coeffs=rng.standard_normal(basis.size),
            basis=basis,
            domain=Domain(0.0, 1.0),
        )
        for i in range(25)
    ]
    part = Partition.regular(Domain(0.0, 1.0), 6)
    agg = aggregate(curves, part)
    y = rng.standard_normal(25)
    design = build_design(curves, basis, y, include_intercept=False)
    assert design.z.shape == (25, 0)
    s = 50
    draws = PosteriorDraws(
        coeffs=0.1 * rng.standard_normal((s, basis.size)),
        basis=basis,
        alpha=np.zeros((s, 0)),
        alpha_names=[],
        penalized=design.penalized,
        sigma2=np.full(s, 0.04),
        alpha_scales2=np.ones((s, 0)),
        lambda0=np.ones(s),
        prior="dhs",
        config=FitConfig(),
        y_hat=agg.matrix @ np.array([1.0, 1.0, 0.5, 0.5, 0.0, 0.0]),
        seed=0,
    )
    summary = analyze(draws, design, curves, part, y, np.random.default_rng(2), pred_draws=40)
    direct = fused_lasso_path(draws.y_hat, agg)
    assert np.allclose(summary.path.lambdas, direct.lambdas)
    assert np.allclose(summary.path.deltas, direct.deltas)
