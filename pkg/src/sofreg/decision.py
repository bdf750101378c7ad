"""Locally constant summaries of a fitted curve effect, chosen by predictive loss.

The posterior gives a smooth estimate of the coefficient function; this
module re-expresses it as a step function over a partition of the domain.
The steps solve a fused-lasso regression of the model's fitted values on
aggregated curve integrals, traced over the whole penalty path.  Posterior
predictive draws then price each path entry: the family of entries whose
predictive loss is statistically indistinguishable from the empirical
optimum is reported, and its simplest member (fewest level changes) gives
the headline windows: signed intervals where the effect is nonzero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from sofreg.basis import Domain, integrate_basis
from sofreg.funcdata import CoefCurve, RegressionDesign
from sofreg.gibbs import NumericalError, PosteriorDraws, subsample_indices

log = logging.getLogger(__name__)


# --- partitions and aggregation ------------------------------------------------


@dataclass(frozen=True)
class Partition:
    """Contiguous cells covering the reference interval."""

    breaks: np.ndarray

    def __post_init__(self) -> None:
        breaks = np.array(self.breaks, dtype=float)
        if breaks.ndim != 1 or breaks.size < 2:
            raise ValueError("partition needs at least two breakpoints")
        if not np.all(np.isfinite(breaks)):
            raise ValueError("partition breakpoints must be finite")
        if np.any(np.diff(breaks) <= 0):
            raise ValueError("partition breakpoints must be strictly increasing")
        breaks.flags.writeable = False
        object.__setattr__(self, "breaks", breaks)

    @classmethod
    def regular(cls, domain: Domain, n_cells: int) -> Partition:
        if n_cells < 1:
            raise ValueError("need at least one cell")
        return cls(np.linspace(domain.lo, domain.hi, n_cells + 1))

    @classmethod
    def from_grid(cls, grid: np.ndarray) -> Partition:
        """One cell per interval of an observation grid."""
        return cls(np.asarray(grid, dtype=float))

    @property
    def size(self) -> int:
        return self.breaks.size - 1

    @property
    def span(self) -> Domain:
        return Domain(float(self.breaks[0]), float(self.breaks[-1]))

    def cells(self) -> list[Domain]:
        return [Domain(float(a), float(b)) for a, b in zip(self.breaks[:-1], self.breaks[1:])]

    def locate(self, t: np.ndarray) -> np.ndarray:
        """Cell index of each point; right endpoint belongs to the last cell."""
        t = np.asarray(t, dtype=float)
        lo, hi = self.span.lo, self.span.hi
        if np.any(t < lo) or np.any(t > hi):
            raise ValueError("points outside the partition span")
        return np.minimum(np.searchsorted(self.breaks, t, side="right") - 1, self.size - 1)


@dataclass(frozen=True)
class AggregatedDesign:
    """Per-subject integrals of the curve over each partition cell."""

    matrix: np.ndarray  # (n, size)
    partition: Partition


def aggregate(curves: list[CoefCurve], partition: Partition) -> AggregatedDesign:
    """Integrate each subject's curve over each cell of the partition.

    Entries over cells disjoint from a subject's interval are zero, so row
    sums equal the subject's full-interval integral.
    """
    span = partition.span
    cells = partition.cells()
    memo: dict[tuple, np.ndarray] = {}
    rows = np.zeros((len(curves), partition.size))
    for i, curve in enumerate(curves):
        if not span.contains(curve.domain):
            raise ValueError(
                f"subject {curve.subject_id} interval not inside the partition span"
            )
        bkey = (curve.basis.size, curve.basis.degree, curve.basis.domain.lo, curve.basis.domain.hi)
        for k, cell in enumerate(cells):
            inter = cell.intersect(curve.domain)
            if inter is None:
                continue
            key = (bkey, round(inter.lo, 12), round(inter.hi, 12))
            weights = memo.get(key)
            if weights is None:
                weights = integrate_basis(curve.basis, inter)
                memo[key] = weights
            rows[i, k] = curve.coeffs @ weights
    return AggregatedDesign(matrix=rows, partition=partition)


# --- fused-lasso path ------------------------------------------------------------

# The objective, in the loss convention used throughout this module:
#     n^-1 ||r - A d||^2 + lam * sum_k |d_k - d_{k-1}|
# Internally the path is solved in the standard form
#     1/2 ||r - A d||^2 + lam_std ||D d||_1,   lam_std = n * lam / 2,
# reparameterized as a plain lasso: d = c + cumsum(w) turns the penalty into
# ||w||_1 with one unpenalized column, so the usual homotopy applies and stays
# well defined when A is rank deficient (only the lam = 0 endpoint is lost).


@dataclass
class SolutionPath:
    """Knots of the exact solution path, ordered by decreasing penalty."""

    lambdas: np.ndarray  # penalties at the knots, in the n^-1 loss convention above
    deltas: np.ndarray  # (len(lambdas), size) step levels
    n_obs: int
    rank_deficient: bool = False

    @property
    def lambda_max(self) -> float:
        return float(self.lambdas[0])


def _lasso_columns(a: np.ndarray) -> np.ndarray:
    # columns: [A 1 | A M] where M maps increments to levels (lower triangular)
    tail_sums = np.cumsum(a[:, ::-1], axis=1)[:, ::-1]
    return np.column_stack([tail_sums[:, 0], tail_sums[:, 1:]])


def _delta_from_gamma(gamma: np.ndarray) -> np.ndarray:
    out = np.empty(gamma.size)
    out[0] = gamma[0]
    out[1:] = gamma[0] + np.cumsum(gamma[1:])
    return out


def fused_lasso_path(targets: np.ndarray, agg: AggregatedDesign) -> SolutionPath:
    """Exact homotopy in the penalty, from full fusion down to no penalty.

    Every stored knot satisfies the stationarity conditions; between knots
    the solution is affine in the penalty.  With more cells than subjects
    the homotopy stops at the rank boundary and the path is flagged, since
    the unpenalized endpoint is not identified.
    """
    r = np.asarray(targets, dtype=float)
    a = agg.matrix
    n, size = a.shape
    if size < 2:
        raise ValueError("need at least two cells to fuse")
    if r.shape != (n,):
        raise ValueError("targets length does not match the aggregated design")
    if not np.all(np.isfinite(r)):
        raise ValueError("targets must be finite")

    cols = _lasso_columns(a)
    gram_full = cols.T @ cols
    rhs_full = cols.T @ r

    active = [0]  # the level column is never penalized
    signs = {0: 0.0}
    knot_lams: list[float] = []
    knot_gammas: list[np.ndarray] = []
    rank_deficient = False

    def solve_coefs() -> tuple[np.ndarray, np.ndarray] | None:
        g = gram_full[np.ix_(active, active)]
        try:
            chol = np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            return None
        piv = np.diag(chol)
        # near-singular Gram: treat as the rank boundary rather than solving garbage
        if piv.min() <= 1e-9 * max(piv.max(), 1.0):
            return None
        sv = np.array([signs[j] for j in active])
        lhs = np.column_stack([rhs_full[active], sv])
        sol = np.linalg.solve(chol.T, np.linalg.solve(chol, lhs))
        return sol[:, 0], sol[:, 1]

    base = solve_coefs()
    if base is None:
        raise NumericalError("aggregated design has a zero total-integral column")
    a_vec, b_vec = base

    inactive = list(range(1, size))
    # correlations of inactive columns: c_j(lam) = p_j + lam * q_j
    lam = np.inf
    last_event: tuple[str, int] | None = None
    guard = 0
    while True:
        guard += 1
        if guard > 40 * size + 100:
            raise NumericalError("penalty homotopy failed to make progress")
        fit_a = cols[:, active] @ a_vec
        fit_b = cols[:, active] @ b_vec
        p = cols[:, inactive].T @ (r - fit_a) if inactive else np.empty(0)
        q = cols[:, inactive].T @ fit_b if inactive else np.empty(0)

        # ties at the current penalty are legitimate (simultaneous events),
        # but the event just processed leaves an exact echo: the coordinate
        # added at lam has its zero crossing at lam, and the coordinate
        # dropped at lam has its correlation on the boundary there.  Only
        # that echo is excluded; everything else in the shell is fair game.
        if np.isfinite(lam):
            upper = lam * (1.0 + 1e-12)
            echo = lam * (1.0 - 1e-9)
        else:
            upper = np.inf
            echo = np.inf
        best = 0.0
        best_event: tuple[str, int, float] | None = None
        for idx, j in enumerate(inactive):
            for cand, sign in ((p[idx] / (1.0 - q[idx]) if q[idx] != 1.0 else -1.0, 1.0),
                               (-p[idx] / (1.0 + q[idx]) if q[idx] != -1.0 else -1.0, -1.0)):
                if last_event == ("drop", j) and cand > echo:
                    continue
                if best < cand <= upper:
                    best = cand
                    best_event = ("hit", j, sign)
        for pos, j in enumerate(active):
            if j == 0 or b_vec[pos] == 0.0:
                continue
            cand = a_vec[pos] / b_vec[pos]
            if last_event == ("hit", j) and cand > echo:
                continue
            if best < cand <= upper:
                best = cand
                best_event = ("drop", j, 0.0)
        if best_event is not None and np.isfinite(lam):
            best = min(best, lam)

        if not np.isfinite(lam):
            # path starts where the first increment activates
            if best_event is None:
                # fused fit is exact for all penalties
                knot_lams.append(0.0)
                knot_gammas.append(_gamma_at(active, a_vec, b_vec, 0.0, size))
                break
            lam = best
            knot_lams.append(lam)
            knot_gammas.append(_gamma_at(active, a_vec, b_vec, lam, size))
        else:
            knot_lams.append(lam)
            knot_gammas.append(_gamma_at(active, a_vec, b_vec, lam, size))
            if best_event is None:
                knot_lams.append(0.0)
                knot_gammas.append(_gamma_at(active, a_vec, b_vec, 0.0, size))
                break
            lam = best
            knot_lams.append(lam)
            knot_gammas.append(_gamma_at(active, a_vec, b_vec, lam, size))

        kind, j, sign = best_event
        last_event = (kind, j)
        if kind == "hit":
            active.append(j)
            signs[j] = sign
            inactive.remove(j)
        else:
            pos = active.index(j)
            active.pop(pos)
            del signs[j]
            inactive.append(j)
        sol = solve_coefs()
        if sol is None:
            rank_deficient = True
            log.warning(
                "aggregated design hit its rank boundary at penalty %.3g; "
                "path not continued below it", 2.0 * lam / n,
            )
            break
        a_vec, b_vec = sol

    lams = np.array(knot_lams)
    gammas = np.stack(knot_gammas)
    # collapse duplicate consecutive knots (an event recorded from both sides)
    keep = np.r_[True, np.diff(lams) < 0]
    lams, gammas = lams[keep], gammas[keep]
    deltas = np.stack([_delta_from_gamma(g) for g in gammas])
    path = SolutionPath(
        lambdas=2.0 * lams / n, deltas=deltas, n_obs=n, rank_deficient=rank_deficient
    )
    _warn_on_level_increase(path)
    return path


def _gamma_at(active, a_vec, b_vec, lam, size) -> np.ndarray:
    gamma = np.zeros(size)
    gamma[active] = a_vec - lam * b_vec
    return gamma


def _warn_on_level_increase(path: SolutionPath) -> None:
    counts = [count_level_changes(d) for d in path.deltas]
    # along the stored path the penalty decreases, so counts should not drop
    drops = [i for i in range(1, len(counts)) if counts[i] < counts[i - 1]]
    if drops:
        log.warning(
            "level count not monotone in the penalty at %d of %d knots "
            "(first near lambda=%.3g; path-algorithm defect check)",
            len(drops), len(counts), path.lambdas[drops[0]],
        )


def path_delta_at(path: SolutionPath, lam: float) -> np.ndarray:
    """Solution at an arbitrary penalty by interpolating the affine segments."""
    if lam < 0:
        raise ValueError("penalty must be nonnegative")
    lams = path.lambdas
    if lam >= lams[0]:
        return path.deltas[0].copy()
    if lam < lams[-1]:
        if path.rank_deficient:
            raise ValueError(
                "path stops above the requested penalty: aggregated design is rank deficient"
            )
        return path.deltas[-1].copy()
    hi = int(np.searchsorted(-lams, -lam, side="right")) - 1
    lo = hi + 1
    if lams[hi] == lam or lo >= lams.size:
        return path.deltas[hi].copy()
    w = (lam - lams[lo]) / (lams[hi] - lams[lo])
    return (1.0 - w) * path.deltas[lo] + w * path.deltas[hi]


def kkt_residual(
    delta: np.ndarray,
    targets: np.ndarray,
    agg: AggregatedDesign,
    lam: float,
    fuse_tol: float | None = None,
) -> float:
    """Scaled stationarity violation of a candidate solution.

    Zero (to rounding) iff ``delta`` minimizes the penalized objective at
    this penalty.  The dual variables of the fusion penalty are recovered
    in closed form from cumulative gradient sums, so the check shares no
    machinery with the homotopy solver.
    """
    a = agg.matrix
    r = np.asarray(targets, dtype=float)
    n = r.size
    lam_std = 0.5 * n * lam
    grad = a.T @ (a @ delta - r)
    s = np.cumsum(grad)
    scale = max(1.0, lam_std, float(np.max(np.abs(a.T @ r))))
    viol = abs(s[-1])
    diffs = np.diff(delta)
    if fuse_tol is None:
        fuse_tol = 1e-9 * max(1.0, float(np.max(np.abs(diffs), initial=0.0)))
    for k in range(diffs.size):
        if abs(diffs[k]) > fuse_tol:
            viol = max(viol, abs(s[k] - lam_std * np.sign(diffs[k])))
        else:
            viol = max(viol, max(abs(s[k]) - lam_std, 0.0))
    return float(viol / scale)


def count_level_changes(delta: np.ndarray, tol: float | None = None) -> int:
    diffs = np.abs(np.diff(delta))
    if tol is None:
        tol = 1e-9 * max(1.0, float(diffs.max(initial=0.0)))
    return int(np.sum(diffs > tol))


# --- predictive pricing of the path ---------------------------------------------


def empirical_mse(
    delta: np.ndarray,
    y: np.ndarray,
    alpha_hat: np.ndarray,
    z: np.ndarray,
    agg: AggregatedDesign,
    block_fit: np.ndarray | None = None,
) -> float:
    """Mean squared error of the step-function fit against the observed response."""
    adj = y - z @ alpha_hat - (0.0 if block_fit is None else block_fit)
    resid = adj - agg.matrix @ delta
    return float(resid @ resid / y.size)


def predictive_mse_draws(
    delta: np.ndarray,
    y_pred: np.ndarray,
    alpha_draws: np.ndarray,
    z: np.ndarray,
    agg: AggregatedDesign,
    block_fits: np.ndarray | None = None,
) -> np.ndarray:
    """One loss per posterior predictive draw, draw-specific adjustments included."""
    adj = y_pred - alpha_draws @ z.T - (0.0 if block_fits is None else block_fits)
    resid = adj - (agg.matrix @ delta)[None, :]
    return np.mean(resid**2, axis=1)


def _nonfunctional_per_draw(
    draws: PosteriorDraws, design: RegressionDesign, idx: np.ndarray
) -> np.ndarray | None:
    parts = None
    for blk in draws.blocks:
        for dblk in design.adaptive_blocks:
            if dblk.name == blk.name:
                term = blk.coeffs[idx] @ dblk.design.T
                parts = term if parts is None else parts + term
    return parts


@dataclass
class PathDiagnostics:
    """Loss profile of the stored path on a penalty grid."""

    lambdas: np.ndarray
    deltas: np.ndarray
    n_level_changes: np.ndarray
    empirical: np.ndarray  # E_lam on the observed response
    percent_increase: np.ndarray  # (grid, draws) predictive percent loss vs the optimum
    idx_lambda_min: int

    @property
    def lambda_min(self) -> float:
        return float(self.lambdas[self.idx_lambda_min])


def evaluate_path(
    path: SolutionPath,
    y: np.ndarray,
    draws: PosteriorDraws,
    design: RegressionDesign,
    agg: AggregatedDesign,
    rng: np.random.Generator,
    pred_draws: int | None = 1000,
    max_entries: int = 100,
) -> PathDiagnostics:
    """Price every (subsampled) knot by observed and predictive squared loss.

    The predictive losses reuse one common set of posterior predictive
    replicates across knots, so percent differences are comparable
    draw by draw.
    """
    keep = subsample_indices(path.lambdas.size, max_entries)
    lams = path.lambdas[keep]
    deltas = path.deltas[keep]

    alpha_hat = draws.alpha.mean(axis=0)
    idx = subsample_indices(draws.n_draws, pred_draws)
    mean = draws.coeffs[idx] @ design.scores.T + draws.alpha[idx] @ design.z.T
    blocks = _nonfunctional_per_draw(draws, design, idx)
    if blocks is not None:
        mean = mean + blocks
    y_pred = mean + np.sqrt(draws.sigma2[idx])[:, None] * rng.standard_normal(mean.shape)
    alpha_draws = draws.alpha[idx]

    block_fit_mean = None
    if blocks is not None:
        block_fit_mean = _nonfunctional_per_draw(
            draws, design, np.arange(draws.n_draws)
        ).mean(axis=0)

    emp = np.empty(lams.size)
    pred = np.empty((lams.size, idx.size))
    for i in range(lams.size):
        emp[i] = empirical_mse(deltas[i], y, alpha_hat, design.z, agg, block_fit_mean)
        pred[i] = predictive_mse_draws(deltas[i], y_pred, alpha_draws, design.z, agg, blocks)
    best = int(np.argmin(emp))
    ref = pred[best]
    percent = 100.0 * (pred - ref[None, :]) / ref[None, :]
    levels = np.array([count_level_changes(d) for d in deltas])
    return PathDiagnostics(
        lambdas=lams,
        deltas=deltas,
        n_level_changes=levels,
        empirical=emp,
        percent_increase=percent,
        idx_lambda_min=best,
    )


@dataclass
class AcceptableFamily:
    """Path entries whose predictive loss is near-optimal."""

    members: np.ndarray  # boolean mask over the diagnostics grid
    idx_simplest: int
    idx_lambda_min: int
    epsilon: float


def acceptable_family(diag: PathDiagnostics, epsilon: float = 0.10) -> AcceptableFamily:
    """Entries whose lower predictive interval for the percent increase reaches zero.

    Membership: the epsilon-quantile (as an order statistic) of the percent
    increases is <= 0, i.e. at least ceil(epsilon * draws) of the draws show
    no loss relative to the empirical optimum.  The optimum itself has all
    percent increases identically zero, so it always belongs.  The simplest
    member has the fewest level changes; ties go to the larger penalty.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    n_draws = diag.percent_increase.shape[1]
    need = int(np.ceil(epsilon * n_draws))
    members = np.sum(diag.percent_increase <= 0.0, axis=1) >= need
    members[diag.idx_lambda_min] = True
    idx_members = np.flatnonzero(members)
    changes = diag.n_level_changes[idx_members]
    # grid is ordered by decreasing penalty, so the first minimum is the
    # largest-penalty member among ties
    simplest = int(idx_members[int(np.argmin(changes))])
    return AcceptableFamily(
        members=members,
        idx_simplest=simplest,
        idx_lambda_min=diag.idx_lambda_min,
        epsilon=epsilon,
    )


# --- step-function estimates and windows ------------------------------------------


@dataclass
class LocallyConstantEstimate:
    """Step-function coefficient estimate: maximal runs of equal level."""

    starts: np.ndarray
    ends: np.ndarray
    levels: np.ndarray
    lam: float

    def level_at(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        edges = np.r_[self.starts, self.ends[-1]]
        idx = np.minimum(np.searchsorted(edges, t, side="right") - 1, self.levels.size - 1)
        if np.any(t < edges[0]) or np.any(t > edges[-1]):
            raise ValueError("points outside the estimate's span")
        return self.levels[idx]


def build_estimate(
    partition: Partition, delta: np.ndarray, lam: float, tol: float | None = None
) -> LocallyConstantEstimate:
    """Merge adjacent cells with equal levels into maximal runs."""
    delta = np.asarray(delta, dtype=float)
    if delta.size != partition.size:
        raise ValueError("level vector does not match the partition")
    diffs = np.abs(np.diff(delta))
    if tol is None:
        tol = 1e-9 * max(1.0, float(diffs.max(initial=0.0)))
    cut = np.flatnonzero(diffs > tol)
    starts_idx = np.r_[0, cut + 1]
    ends_idx = np.r_[cut, delta.size - 1]
    return LocallyConstantEstimate(
        starts=partition.breaks[starts_idx],
        ends=partition.breaks[ends_idx + 1],
        levels=delta[starts_idx],
        lam=lam,
    )


@dataclass(frozen=True)
class Window:
    """A maximal interval with one effect label."""

    start: float
    end: float
    level: float  # width-weighted mean level over the window
    label: str  # "+", "-", or "0"


def extract_windows(
    estimate: LocallyConstantEstimate, zero_tol: float = 0.0
) -> list[Window]:
    """Label runs by sign (zero within tolerance) and merge equal labels."""
    labels = np.where(
        np.abs(estimate.levels) <= zero_tol,
        "0",
        np.where(estimate.levels > 0, "+", "-"),
    )
    windows: list[Window] = []
    i = 0
    while i < labels.size:
        j = i
        while j + 1 < labels.size and labels[j + 1] == labels[i]:
            j += 1
        widths = estimate.ends[i : j + 1] - estimate.starts[i : j + 1]
        level = float(estimate.levels[i : j + 1] @ widths / widths.sum())
        windows.append(
            Window(
                start=float(estimate.starts[i]),
                end=float(estimate.ends[j]),
                level=level,
                label=str(labels[i]),
            )
        )
        i = j + 1
    return windows


def selection_on_grid(
    estimate: LocallyConstantEstimate, grid: np.ndarray, zero_tol: float = 0.0
) -> np.ndarray:
    """Sign labels (-1, 0, +1) of the estimate at each grid point."""
    levels = estimate.level_at(grid)
    return np.where(np.abs(levels) <= zero_tol, 0, np.sign(levels)).astype(int)


def ci_selection(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Pointwise competitor: nonzero sign wherever the band excludes zero."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != upper.shape:
        raise ValueError("band arrays must have equal shape")
    return np.where(lower > 0, 1, np.where(upper < 0, -1, 0)).astype(int)


def ci_windows(grid: np.ndarray, mean: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> list[Window]:
    """Contiguous grid runs where the band excludes zero, as labeled windows."""
    sel = ci_selection(lower, upper)
    windows: list[Window] = []
    i = 0
    while i < sel.size:
        if sel[i] == 0:
            i += 1
            continue
        j = i
        while j + 1 < sel.size and sel[j + 1] == sel[i]:
            j += 1
        windows.append(
            Window(
                start=float(grid[i]),
                end=float(grid[j]),
                level=float(np.mean(mean[i : j + 1])),
                label="+" if sel[i] > 0 else "-",
            )
        )
        i = j + 1
    return windows


# --- end-to-end convenience -------------------------------------------------------


@dataclass
class DecisionSummary:
    """Everything the reporting layer needs from one decision analysis."""

    path: SolutionPath
    diagnostics: PathDiagnostics
    family: AcceptableFamily
    estimate: LocallyConstantEstimate
    windows: list[Window] = field(default_factory=list)


def analyze(
    draws: PosteriorDraws,
    design: RegressionDesign,
    curves: list[CoefCurve],
    partition: Partition,
    y: np.ndarray,
    rng: np.random.Generator,
    epsilon: float = 0.10,
    zero_tol: float = 0.0,
    pred_draws: int | None = 1000,
) -> DecisionSummary:
    """Fit-to-the-fit pipeline: aggregate, trace the path, price it, summarize.

    Targets are the posterior fitted values with every non-functional
    component (intercept, scalar effects, extra smooth terms) removed, so
    the step function chases only the curve effect.
    """
    agg = aggregate(curves, partition)
    alpha_hat = draws.alpha.mean(axis=0)
    targets = draws.y_hat - design.z @ alpha_hat
    blocks = _nonfunctional_per_draw(draws, design, np.arange(draws.n_draws))
    if blocks is not None:
        targets = targets - blocks.mean(axis=0)
    path = fused_lasso_path(targets, agg)
    diag = evaluate_path(path, y, draws, design, agg, rng, pred_draws=pred_draws)
    family = acceptable_family(diag, epsilon)
    pick = family.idx_simplest
    estimate = build_estimate(partition, diag.deltas[pick], float(diag.lambdas[pick]))
    windows = extract_windows(estimate, zero_tol)
    return DecisionSummary(
        path=path, diagnostics=diag, family=family, estimate=estimate, windows=windows
    )
