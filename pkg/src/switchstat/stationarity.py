"""Locating W-stationary points by branch enumeration and damped Newton.

A feasible point is W-stationary when the objective gradient is a multiplier
combination of the active constraint gradients (equalities unrestricted,
active inequalities with nonnegative multipliers, each switching function
carrying a multiplier only where it vanishes).  The search realises the
complementarity conditions casewise: every switching pair is pinned to one
of three branches (first member zero / second member zero / both zero) and
every inequality to active/inactive, which turns the multiplier rule plus
the pinned constraints into a square nonlinear system.  All branch patterns
are enumerated, each is solved by damped Newton from a uniform grid of
starting points, and the surviving candidates are filtered by feasibility,
multiplier signs and an independently re-evaluated stationarity residual.

Branch x start solves are independent; the merge step is a deterministic
single-threaded reduction, so results do not depend on the thread count.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .expr import EvalDomainError, Expr, Problem, eval_gradient, eval_value
from .linalg import (
    DEFAULT_TOLS,
    SingularSystemError,
    ToleranceConfig,
    rank,
    solve_linear,
)

__all__ = [
    "SolveConfig",
    "IndexSets",
    "Multipliers",
    "BranchPattern",
    "WStationaryPoint",
    "Rejection",
    "SearchResult",
    "LicqReport",
    "CombinatorialCapError",
    "InfeasiblePointError",
    "LicqViolationError",
    "NotStationaryError",
    "active_sets",
    "licq_matrix",
    "check_licq",
    "recover_multipliers",
    "stationarity_residual",
    "feasibility_violation",
    "complementarity_violation",
    "enumerate_branches",
    "newton_solve_branch",
    "find_stationary_points",
    "search_stationary_points",
]


class CombinatorialCapError(RuntimeError):
    """Branch or subset enumeration would exceed its configured cap."""


class InfeasiblePointError(ValueError):
    """Operation requires a feasible point but got an infeasible one."""


class LicqViolationError(ValueError):
    """Operation requires LICQ but the active gradients are dependent."""


class NotStationaryError(ValueError):
    """Multiplier recovery succeeded but the stationarity residual is large."""


@dataclass(frozen=True)
class SolveConfig:
    """Search configuration: classification thresholds, Newton controls,
    enumeration caps and the shared linear-algebra tolerance policy."""

    tol_active: float = 1e-8      # activity threshold for index sets
    tol_feas: float = 1e-8        # feasibility slack
    tol_resid: float = 1e-10      # stationarity residual acceptance
    tol_sign: float = 1e-8        # dead zone for sign/strictness decisions
    tol_comp: float = 1e-8        # complementarity slack
    dedup_radius: float = 1e-6    # merge radius for duplicate points
    grid_points: int = 5          # multi-start points per axis
    max_iter: int = 50            # Newton iterations per branch solve
    max_halvings: int = 20        # step halvings per iteration
    polish_steps: int = 4         # extra full Newton steps after convergence
    pattern_cap: int = 100_000    # max number of branch patterns
    subset_cap: int = 4096        # max inequality subsets in stability checks
    match_radius: float = 1e-4    # continuation limit matching radius
    box_inflation: float = 0.10   # accepted points may exceed the box by this
    threads: int = 1
    seed: int = 0                 # 0 = no multi-start jitter
    lin: ToleranceConfig = DEFAULT_TOLS


DEFAULT_CONFIG = SolveConfig()


@dataclass(frozen=True)
class IndexSets:
    """Active inequality indices and the switching-index partition.

    All indices are 0-based.  ``alpha``: only the first member vanishes,
    ``gamma``: only the second, ``beta``: both (bi-active).
    """

    j0: tuple[int, ...]
    alpha: tuple[int, ...]
    beta: tuple[int, ...]
    gamma: tuple[int, ...]


@dataclass(frozen=True)
class Multipliers:
    """Multiplier vectors aligned with the problem's constraint lists.

    Entries forced to zero by complementarity are exactly 0.0.  ``unique``
    is False when LICQ failed and the vector is only a least-squares
    representative of the multiplier set.
    """

    lam: tuple[float, ...]
    mu: tuple[float, ...]
    sigma1: tuple[float, ...]
    sigma2: tuple[float, ...]
    unique: bool = True

    def max_magnitude(self):
        vals = self.lam + self.mu + self.sigma1 + self.sigma2
        return max((abs(v) for v in vals), default=0.0)


S1, S2, BOTH = "S1", "S2", "BOTH"
_SWITCH_CHOICES = (S1, S2, BOTH)


@dataclass(frozen=True)
class BranchPattern:
    """One casewise realisation of the complementarity conditions.

    ``switches[m]``: S1 pins the first member to zero (second multiplier 0),
    S2 the converse, BOTH pins both members.  ``actives[j]`` pins inequality
    j to zero with an unknown multiplier; inactive inequalities carry
    multiplier exactly 0.
    """

    switches: tuple[str, ...]
    actives: tuple[bool, ...]


@dataclass(frozen=True)
class WStationaryPoint:
    x: tuple[float, ...]
    f_value: float
    mult: Multipliers
    idx: IndexSets
    residual: float
    licq: bool
    source_pattern: Optional[BranchPattern] = None


@dataclass(frozen=True)
class Rejection:
    """Candidate dropped by the multiplier sign condition (kept for audit)."""

    x: tuple[float, ...]
    mult: Multipliers
    idx: IndexSets
    reason: str


@dataclass
class SearchResult:
    points: list[WStationaryPoint]
    rejected_sign: list[Rejection]
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class LicqReport:
    holds: bool
    rank: int
    rows: int


# ---------------------------------------------------------------------------
# pointwise constraint data
# ---------------------------------------------------------------------------


def _values(exprs, xl):
    return [e.val(xl) for e in exprs]


def feasibility_violation(p: Problem, x) -> float:
    """Max-norm violation of equalities, inequalities and switching products."""
    xl = [float(v) for v in x]
    worst = 0.0
    for h in p.equalities:
        worst = max(worst, abs(h.val(xl)))
    for g in p.inequalities:
        worst = max(worst, max(0.0, -g.val(xl)))
    for f1, f2 in p.switches:
        worst = max(worst, abs(f1.val(xl) * f2.val(xl)))
    return worst


def complementarity_violation(p: Problem, x, mult: Multipliers) -> float:
    """Largest multiplier-times-constraint product magnitude."""
    xl = [float(v) for v in x]
    worst = 0.0
    for j, g in enumerate(p.inequalities):
        worst = max(worst, abs(mult.mu[j] * g.val(xl)))
    for m, (f1, f2) in enumerate(p.switches):
        worst = max(worst, abs(mult.sigma1[m] * f1.val(xl)))
        worst = max(worst, abs(mult.sigma2[m] * f2.val(xl)))
    return worst


def active_sets(p: Problem, x, cfg: SolveConfig = DEFAULT_CONFIG) -> IndexSets:
    """Classify active inequalities and switching branches at ``x``.

    A switching index whose two members are both nonzero belongs to no set;
    on feasible points the three sets partition the switching indices.
    """
    xl = [float(v) for v in x]
    tol = cfg.tol_active
    j0 = tuple(
        j for j, g in enumerate(p.inequalities) if abs(g.val(xl)) <= tol
    )
    alpha, beta, gamma = [], [], []
    for m, (f1, f2) in enumerate(p.switches):
        z1 = abs(f1.val(xl)) <= tol
        z2 = abs(f2.val(xl)) <= tol
        if z1 and z2:
            beta.append(m)
        elif z1:
            alpha.append(m)
        elif z2:
            gamma.append(m)
    return IndexSets(j0, tuple(alpha), tuple(beta), tuple(gamma))


def licq_matrix(p: Problem, x, idx: IndexSets) -> np.ndarray:
    """Stack of active constraint gradients, one row each, in the fixed order
    equalities, alpha first members, gamma second members, active
    inequalities, then both members per bi-active pair."""
    xl = [float(v) for v in x]
    rows = []
    for h in p.equalities:
        rows.append(h.val_grad(xl)[1])
    for m in idx.alpha:
        rows.append(p.switches[m][0].val_grad(xl)[1])
    for m in idx.gamma:
        rows.append(p.switches[m][1].val_grad(xl)[1])
    for j in idx.j0:
        rows.append(p.inequalities[j].val_grad(xl)[1])
    for m in idx.beta:
        rows.append(p.switches[m][0].val_grad(xl)[1])
        rows.append(p.switches[m][1].val_grad(xl)[1])
    if not rows:
        return np.zeros((0, p.n))
    return np.array(rows, dtype=float)


def check_licq(p: Problem, x, cfg: SolveConfig = DEFAULT_CONFIG) -> LicqReport:
    """LICQ holds iff the active gradient stack has full row rank."""
    if feasibility_violation(p, x) > cfg.tol_feas:
        raise InfeasiblePointError(
            f"point {tuple(float(v) for v in x)} is infeasible beyond tol_feas"
        )
    idx = active_sets(p, x, cfg)
    G = licq_matrix(p, x, idx)
    r = rank(G, cfg.lin)
    return LicqReport(holds=(r == G.shape[0]), rank=r, rows=G.shape[0])


def _assemble_multipliers(p, idx, y, unique=True):
    """Distribute a stacked multiplier vector (licq_matrix row order) into
    per-constraint slots, zero everywhere complementarity forces it."""
    lam = [0.0] * len(p.equalities)
    mu = [0.0] * len(p.inequalities)
    s1 = [0.0] * p.k
    s2 = [0.0] * p.k
    pos = 0
    for i in range(len(p.equalities)):
        lam[i] = float(y[pos]) + 0.0
        pos += 1
    for m in idx.alpha:
        s1[m] = float(y[pos]) + 0.0
        pos += 1
    for m in idx.gamma:
        s2[m] = float(y[pos]) + 0.0
        pos += 1
    for j in idx.j0:
        mu[j] = float(y[pos]) + 0.0
        pos += 1
    for m in idx.beta:
        s1[m] = float(y[pos]) + 0.0
        s2[m] = float(y[pos + 1]) + 0.0
        pos += 2
    return Multipliers(tuple(lam), tuple(mu), tuple(s1), tuple(s2), unique=unique)


def _lstsq_multipliers(p, x, idx):
    """Least-squares multipliers (used verbatim when LICQ holds, as the
    non-unique representative otherwise)."""
    G = licq_matrix(p, x, idx)
    df = eval_gradient(p.objective, x)
    if G.shape[0] == 0:
        return np.zeros(0)
    y, *_ = np.linalg.lstsq(G.T, df, rcond=None)
    return y


def stationarity_residual(p: Problem, x, mult: Multipliers) -> float:
    """Independent max-norm residual of the full W-stationarity system:
    multiplier rule, feasibility, complementarity and the inequality
    multiplier sign condition."""
    xl = [float(v) for v in x]
    n = p.n
    _, df = p.objective.val_grad(xl)
    acc = list(df)
    worst = 0.0

    for i, h in enumerate(p.equalities):
        lam = mult.lam[i]
        if lam != 0.0:
            _, gh = h.val_grad(xl)
            for t in range(n):
                acc[t] -= lam * gh[t]
        worst = max(worst, abs(h.val(xl)))
    for j, g in enumerate(p.inequalities):
        mu = mult.mu[j]
        gv = g.val(xl)
        if mu != 0.0:
            _, gg = g.val_grad(xl)
            for t in range(n):
                acc[t] -= mu * gg[t]
        worst = max(worst, max(0.0, -gv))       # feasibility
        worst = max(worst, abs(mu * gv))        # complementarity
        worst = max(worst, max(0.0, -mu))       # sign condition
    for m, (f1, f2) in enumerate(p.switches):
        v1 = f1.val(xl)
        v2 = f2.val(xl)
        s1v = mult.sigma1[m]
        s2v = mult.sigma2[m]
        if s1v != 0.0:
            _, g1 = f1.val_grad(xl)
            for t in range(n):
                acc[t] -= s1v * g1[t]
        if s2v != 0.0:
            _, g2 = f2.val_grad(xl)
            for t in range(n):
                acc[t] -= s2v * g2[t]
        worst = max(worst, abs(v1 * v2))        # switching feasibility
        worst = max(worst, abs(s1v * v1), abs(s2v * v2))  # complementarity
    worst = max(worst, max(abs(a) for a in acc) if acc else 0.0)
    return worst


def recover_multipliers(
    p: Problem, x, cfg: SolveConfig = DEFAULT_CONFIG
) -> Multipliers:
    """Unique multipliers at a W-stationary point satisfying LICQ.

    Solves the multiplier rule against the stacked active gradients and
    verifies the full stationarity residual.  Raises
    :class:`LicqViolationError` when LICQ fails (multipliers would not be
    unique), :class:`SingularSystemError` on tolerance breakdown and
    :class:`NotStationaryError` when the point is not W-stationary.
    """
    rep = check_licq(p, x, cfg)
    if not rep.holds:
        raise LicqViolationError(
            f"LICQ fails at {tuple(float(v) for v in x)}:"
            f" rank {rep.rank} < {rep.rows} active gradients"
        )
    idx = active_sets(p, x, cfg)
    G = licq_matrix(p, x, idx)
    df = eval_gradient(p.objective, x)
    if G.shape[0] == 0:
        y = np.zeros(0)
    else:
        y = solve_linear(G.T, df, cfg.lin)
    mult = _assemble_multipliers(p, idx, y, unique=True)
    resid = stationarity_residual(p, x, mult)
    if resid > cfg.tol_resid:
        raise NotStationaryError(
            f"stationarity residual {resid:.3e} exceeds tol_resid"
            f" {cfg.tol_resid:.1e}"
        )
    return mult


# ---------------------------------------------------------------------------
# branch enumeration and Newton solves
# ---------------------------------------------------------------------------


def enumerate_branches(p: Problem, cfg: SolveConfig = DEFAULT_CONFIG):
    """All branch patterns in deterministic lexicographic order."""
    total = 3 ** p.k * 2 ** len(p.inequalities)
    if total > cfg.pattern_cap:
        raise CombinatorialCapError(
            f"{total} branch patterns exceed pattern_cap={cfg.pattern_cap}"
        )
    patterns = []
    for sw in itertools.product(_SWITCH_CHOICES, repeat=p.k):
        for act in itertools.product((True, False), repeat=len(p.inequalities)):
            patterns.append(BranchPattern(sw, act))
    return patterns


def _pattern_constraints(p: Problem, pattern: BranchPattern):
    """Pinned constraint expressions in unknown order: equalities, active
    inequalities, then selected switching members.  Each pinned constraint
    owns exactly one multiplier unknown, so the Newton system is square."""
    cons: list[Expr] = list(p.equalities)
    slots = [("lam", i) for i in range(len(p.equalities))]
    for j, a in enumerate(pattern.actives):
        if a:
            cons.append(p.inequalities[j])
            slots.append(("mu", j))
    for m, choice in enumerate(pattern.switches):
        f1, f2 = p.switches[m]
        if choice in (S1, BOTH):
            cons.append(f1)
            slots.append(("sigma1", m))
        if choice in (S2, BOTH):
            cons.append(f2)
            slots.append(("sigma2", m))
    return cons, slots


def _pattern_multiplier_vector(p, pattern, mult):
    """Extract the unknown-slot multiplier values from full vectors (warm
    starts along continuation paths)."""
    _, slots = _pattern_constraints(p, pattern)
    out = np.zeros(len(slots))
    by_name = {"lam": mult.lam, "mu": mult.mu, "sigma1": mult.sigma1,
               "sigma2": mult.sigma2}
    for i, (name, j) in enumerate(slots):
        out[i] = by_name[name][j]
    return out


def _multipliers_from_slots(p, slots, y):
    lam = [0.0] * len(p.equalities)
    mu = [0.0] * len(p.inequalities)
    s1 = [0.0] * p.k
    s2 = [0.0] * p.k
    store = {"lam": lam, "mu": mu, "sigma1": s1, "sigma2": s2}
    for (name, j), v in zip(slots, y):
        store[name][j] = float(v) + 0.0
    return Multipliers(tuple(lam), tuple(mu), tuple(s1), tuple(s2))


def _branch_residual(objective, cons, z, n):
    """Residual of the square branch system at z = (x, multipliers)."""
    xl = z[:n].tolist()
    y = z[n:]
    _, df = objective.val_grad(xl)
    top = list(df)
    resid = np.empty(n + len(cons))
    for i, c in enumerate(cons):
        cv, cg = c.val_grad(xl)
        yi = y[i]
        if yi != 0.0:
            for t in range(n):
                top[t] -= yi * cg[t]
        resid[n + i] = cv
    resid[:n] = top
    return resid


def _branch_jacobian(objective, cons, z, n):
    xl = z[:n].tolist()
    y = z[n:]
    m = len(cons)
    J = np.zeros((n + m, n + m))
    _, _, Hf = objective.val_grad_hess(xl)
    H = np.array(Hf)
    for i, c in enumerate(cons):
        _, cg, cH = c.val_grad_hess(xl)
        if y[i] != 0.0:
            H -= y[i] * np.array(cH)
        row = np.array(cg)
        J[n + i, :n] = row
        J[:n, n + i] = -row
    J[:n, :n] = H
    return J


def newton_solve_branch(
    p: Problem,
    pattern: BranchPattern,
    start,
    cfg: SolveConfig = DEFAULT_CONFIG,
    mult_start=None,
    diagnostics=None,
):
    """Damped Newton on one branch system from ``start``.

    Multipliers start at zero unless ``mult_start`` (one value per unknown
    slot) is given.  Steps are halved until the residual max-norm strictly
    decreases; a step with no improving damping, a singular Jacobian or an
    exhausted iteration budget all yield ``None``.  After reaching
    ``tol_resid`` a few extra full steps polish the root while they keep
    improving, so converged points are accurate well beyond the acceptance
    threshold.
    """
    n = p.n
    cons, slots = _pattern_constraints(p, pattern)
    z = np.zeros(n + len(cons))
    z[:n] = np.asarray(start, dtype=float)
    if mult_start is not None:
        z[n:] = np.asarray(mult_start, dtype=float)

    def residual(zv):
        r = _branch_residual(p.objective, cons, zv, n)
        return r, float(np.abs(r).max(initial=0.0))

    try:
        r, rnorm = residual(z)
    except EvalDomainError:
        return None
    if not np.isfinite(rnorm):
        return None

    converged = rnorm <= cfg.tol_resid
    for _ in range(cfg.max_iter):
        if converged:
            break
        try:
            J = _branch_jacobian(p.objective, cons, z, n)
        except EvalDomainError:
            return None
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            # patterns can pin the same function twice (switching pairs that
            # share a member), leaving the square system singular but
            # consistent; the minimum-norm step still converges there, while
            # genuinely inconsistent branches keep failing to improve below
            if diagnostics is not None:
                diagnostics["singular_jacobian"] = (
                    diagnostics.get("singular_jacobian", 0) + 1
                )
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
        if not np.all(np.isfinite(step)) or np.abs(step).max(initial=0.0) > 1e8 * (
            1.0 + float(np.abs(z).max(initial=0.0))
        ):
            return None
        t = 1.0
        improved = False
        for _ in range(cfg.max_halvings + 1):
            z_try = z + t * step
            try:
                r_try, rn_try = residual(z_try)
            except EvalDomainError:
                rn_try = np.inf
            if np.isfinite(rn_try) and rn_try < rnorm:
                z, r, rnorm = z_try, r_try, rn_try
                improved = True
                break
            t *= 0.5
        if not improved:
            return None
        converged = rnorm <= cfg.tol_resid
    if not converged:
        return None

    # polish: extra full steps while they strictly improve the residual
    for _ in range(cfg.polish_steps):
        try:
            J = _branch_jacobian(p.objective, cons, z, n)
            try:
                step = np.linalg.solve(J, -r)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(J, -r, rcond=None)[0]
            z_try = z + step
            r_try, rn_try = residual(z_try)
        except EvalDomainError:
            break
        if np.isfinite(rn_try) and rn_try < rnorm:
            z, r, rnorm = z_try, r_try, rn_try
        else:
            break

    x = z[:n].copy()
    mult = _multipliers_from_slots(p, slots, z[n:])
    return x, mult


# ---------------------------------------------------------------------------
# multi-start search
# ---------------------------------------------------------------------------


def _grid_starts(n, box, cfg):
    lo, hi = float(box[0]), float(box[1])
    if cfg.grid_points < 2:
        axes = [np.array([(lo + hi) / 2.0])] * n
        spacing = hi - lo
    else:
        axes = [np.linspace(lo, hi, cfg.grid_points)] * n
        spacing = (hi - lo) / (cfg.grid_points - 1)
    starts = [np.array(pt) for pt in itertools.product(*axes)]
    if cfg.seed != 0:
        rng = np.random.default_rng(cfg.seed)
        jitter = rng.uniform(-0.1, 0.1, size=(len(starts), n)) * spacing
        starts = [np.clip(s + j, lo, hi) for s, j in zip(starts, jitter)]
    return starts


def search_stationary_points(
    p: Problem, box, cfg: SolveConfig = DEFAULT_CONFIG
) -> SearchResult:
    """Full multi-start search returning accepted points, the sign-condition
    reject list and solver diagnostics."""
    lo, hi = float(box[0]), float(box[1])
    if not hi > lo:
        raise ValueError(f"empty box [{lo}, {hi}]")
    patterns = enumerate_branches(p, cfg)
    starts = _grid_starts(p.n, box, cfg)
    diagnostics = {"solves": 0, "converged": 0, "singular_jacobian": 0,
                   "residual_rejected": 0}

    tasks = [(pat, st) for pat in patterns for st in starts]
    diagnostics["solves"] = len(tasks)

    def run(task):
        pat, st = task
        local = {}
        return newton_solve_branch(p, pat, st, cfg, diagnostics=local), local

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    outcomes = [out for out, _ in results]
    for _, local in results:
        for key, count in local.items():
            diagnostics[key] = diagnostics.get(key, 0) + count

    pad = cfg.box_inflation * (hi - lo)
    accepted: list[WStationaryPoint] = []
    rejected: list[Rejection] = []
    for (pattern, _), outcome in zip(tasks, outcomes):
        if outcome is None:
            continue
        diagnostics["converged"] += 1
        x, _ = outcome
        if np.any(x < lo - pad) or np.any(x > hi + pad):
            continue
        if feasibility_violation(p, x) > cfg.tol_feas:
            continue
        idx = active_sets(p, x, cfg)
        G = licq_matrix(p, x, idx)
        licq = rank(G, cfg.lin) == G.shape[0]
        y = _lstsq_multipliers(p, x, idx)
        mult = _assemble_multipliers(p, idx, y, unique=licq)
        if any(mj < -cfg.tol_sign for mj in mult.mu):
            xt = tuple(float(v) + 0.0 for v in x)
            if all(
                _dist(xt, r.x) > cfg.dedup_radius for r in rejected
            ):
                rejected.append(
                    Rejection(xt, mult, idx, reason="sign condition")
                )
            continue
        if licq:
            # re-verification under LICQ; failures mean the candidate is not
            # actually stationary at the required residual
            try:
                mult = recover_multipliers(p, x, cfg)
            except (SingularSystemError, NotStationaryError, LicqViolationError):
                diagnostics["residual_rejected"] += 1
                continue
        if complementarity_violation(p, x, mult) > cfg.tol_comp:
            continue
        resid = stationarity_residual(p, x, mult)
        if resid > cfg.tol_resid:
            diagnostics["residual_rejected"] += 1
            continue
        xt = tuple(float(v) + 0.0 for v in x)
        if any(_dist(xt, a.x) <= cfg.dedup_radius for a in accepted):
            continue
        accepted.append(
            WStationaryPoint(
                x=xt,
                f_value=eval_value(p.objective, x),
                mult=mult,
                idx=idx,
                residual=resid,
                licq=licq,
                source_pattern=pattern,
            )
        )
    accepted.sort(key=lambda pt: pt.x)
    rejected.sort(key=lambda r: r.x)
    return SearchResult(accepted, rejected, diagnostics)


def _dist(a, b):
    return sum((ai - bi) ** 2 for ai, bi in zip(a, b)) ** 0.5


def find_stationary_points(
    p: Problem, box, cfg: SolveConfig = DEFAULT_CONFIG
) -> list[WStationaryPoint]:
    """W-stationary points of ``p`` found in ``box = (lo, hi)`` (applied per
    axis), sorted lexicographically by coordinates."""
    return search_stationary_points(p, box, cfg).points


def with_overrides(cfg: SolveConfig, **kwargs) -> SolveConfig:
    """Copy of ``cfg`` with scalar fields replaced; linear-algebra tolerance
    names are routed into the nested policy record."""
    lin_fields = {"rank_scale", "rank_floor", "eig_zero", "solve_residual"}
    lin_kwargs = {k: v for k, v in kwargs.items() if k in lin_fields}
    top_kwargs = {k: v for k, v in kwargs.items() if k not in lin_fields}
    if lin_kwargs:
        top_kwargs["lin"] = replace(cfg.lin, **lin_kwargs)
    return replace(cfg, **top_kwargs)
