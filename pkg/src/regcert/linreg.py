"""A-priori regularization of linear ill-posed systems with worst-case certificates.

The regularizer is the spectral filter (T + aI)^{-1} A^T with T = A^T A, the
smoothness class is the source set {y : sum s_i^{-2p} <y, v_i>^2 <= k_p^2},
and the parameter rule a(delta) = b_p delta^{2/(2p+1)} minimizes the closed
form noise + bias bound.  A certificate brackets the worst-case error: an
analytic upper chain J1 + J2 <= C_p delta^{2p/(2p+1)} on one side, and a
searched lower estimate over the admissible set on the other.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateProblemError,
    InfeasibleError,
    InvalidParameterError,
    InvalidSourceError,
)
from .seeding import rng_from
from .spectral import ProblemSpec, SvdTriple, make_problem

# Coefficients on exact null-space modes larger than this are treated as a
# genuine component outside the source set.
NULL_COEF_TOL = 1e-14

PASS_TOL = 1.0 + 1e-9


@dataclass(frozen=True)
class SourceSpec:
    """Source-set parameters: order p in (0, 1) and radius k_p > 0."""

    p: float
    k_p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise InvalidSourceError(f"order p must lie in (0, 1), got {self.p}")
        if not self.k_p > 0.0:
            raise InvalidSourceError(f"radius k_p must be positive, got {self.k_p}")


@dataclass(frozen=True)
class ConstantsPack:
    """Closed-form constants of the a-priori rule.

    c_p = p^p (1-p)^(1-p)
    b_p = (4 p c_p k_p)^(-2/(2p+1))
    C_p = 1/(2 sqrt(b_p)) + c_p k_p b_p^p
    """

    c_p: float
    b_p: float
    C_p: float


@dataclass(frozen=True)
class Certificate:
    """Worst-case error bracket for one noise level."""

    delta: float
    a_used: float
    J1_cont: float
    J2_cont: float
    total_cont: float
    J1_disc: float
    J2_disc: float
    rate_bound: float
    empirical_lower: float
    passed: bool


def constants(source: SourceSpec) -> ConstantsPack:
    p, k = source.p, source.k_p
    c_p = p**p * (1.0 - p) ** (1.0 - p)
    b_p = (4.0 * p * c_p * k) ** (-2.0 / (2.0 * p + 1.0))
    cap = 1.0 / (2.0 * np.sqrt(b_p)) + c_p * k * b_p**p
    return ConstantsPack(c_p=float(c_p), b_p=float(b_p), C_p=float(cap))


def choose_a(delta: float, source: SourceSpec) -> float:
    """A-priori rule a = b_p * delta^(2/(2p+1))."""
    if delta <= 0.0:
        raise InvalidParameterError(f"noise radius must be positive, got {delta}")
    pack = constants(source)
    return float(pack.b_p * delta ** (2.0 / (2.0 * source.p + 1.0)))


def _filter(svd: SvdTriple, a: float) -> np.ndarray:
    return svd.sigma / (svd.s + a)


def apply(svd: SvdTriple, f_delta: np.ndarray, a: float) -> np.ndarray:
    """Regularized solution V diag(sigma_i/(s_i + a)) U^T f_delta.

    This is the exact finite-dimensional (T + aI)^{-1} A^T; the output has no
    component on null-space modes, so it converges to the normal solution.
    """
    if a <= 0.0:
        raise InvalidParameterError(f"regularization parameter must be positive, got {a}")
    f_delta = np.asarray(f_delta, dtype=float)
    if f_delta.shape != (svd.n,):
        raise InvalidParameterError(
            f"data vector has shape {f_delta.shape}, expected ({svd.n},)"
        )
    return svd.v @ (_filter(svd, a) * (svd.u.T @ f_delta))


def operator_norm(svd: SvdTriple, a: float) -> float:
    """max_i sigma_i/(s_i + a); never exceeds 1/(2 sqrt(a))."""
    if a <= 0.0:
        raise InvalidParameterError(f"regularization parameter must be positive, got {a}")
    return float(np.max(_filter(svd, a))) if svd.n else 0.0


def source_membership(y: np.ndarray, svd: SvdTriple, source: SourceSpec) -> tuple[float, bool]:
    """Source-set functional sum s_i^{-2p} <y, v_i>^2 and the bound check.

    Any coefficient above 1e-14 on an exact null-space mode puts y outside
    the set (value +inf): the weight s^{-2p} diverges there.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (svd.n,):
        raise InvalidParameterError(f"vector has shape {y.shape}, expected ({svd.n},)")
    coef = svd.v.T @ y
    pos = svd.sigma > 0.0
    if np.any(np.abs(coef[~pos]) > NULL_COEF_TOL):
        return float("inf"), False
    value = float(np.sum(svd.s[pos] ** (-2.0 * source.p) * coef[pos] ** 2))
    return value, value <= source.k_p**2 * PASS_TOL


def sample_source_set(
    svd: SvdTriple, source: SourceSpec, count: int, seed: int = 0
) -> list[np.ndarray]:
    """Seeded boundary members of the source set.

    Spectral energies are a random unit-simplex split of k_p^2 s_i^{2p}
    across the positive modes, with random signs; every sample meets the
    source bound with value k_p^2 up to round-off.
    """
    if count < 1:
        raise InvalidParameterError(f"count must be >= 1, got {count}")
    pos = np.flatnonzero(svd.sigma > 0.0)
    if pos.size == 0:
        raise DegenerateProblemError("all singular values are zero")
    out = []
    for j in range(count):
        rng = rng_from(seed, j)
        w = rng.dirichlet(np.ones(pos.size))
        signs = rng.choice([-1.0, 1.0], size=pos.size)
        coef = np.zeros(svd.n)
        coef[pos] = signs * source.k_p * np.sqrt(w) * svd.s[pos] ** source.p
        out.append(svd.v @ coef)
    return out


def bias_sup(svd: SvdTriple, source: SourceSpec, a: float) -> float:
    """Exact sup over the discrete source set of a ||(T + aI)^{-1} y||.

    Equals k_p * max_i a s_i^p/(s_i + a); bounded by c_p k_p a^p, with
    equality when some s_i hits the maximizer p a/(1 - p).
    """
    if a <= 0.0:
        raise InvalidParameterError(f"regularization parameter must be positive, got {a}")
    s = svd.s[svd.sigma > 0.0]
    if s.size == 0:
        return 0.0
    return float(source.k_p * np.max(a * s**source.p / (s + a)))


# ---------------------------------------------------------------------------
# Worst-case search over the admissible set

# In V-coordinates z = V^T y the two constraints are axis-aligned:
#   source ellipsoid   sum c_i z_i^2 <= k^2          with c_i = s_i^-2p
#   data ellipsoid     sum (sigma_i z_i - g_i)^2 <= delta_eff^2
# and the objective ||z - rho||, rho the filtered data, is maximized by
# multi-start projected gradient ascent with Dykstra alternating projections.


def _shrink_root(r2: np.ndarray, w: np.ndarray, bound_sq: float) -> float:
    """Solve sum r2_i/(1 + mu w_i)^2 = bound_sq for mu >= 0.

    The left side is convex and decreasing in mu, so Newton from any point
    left of the root increases monotonically to it; a doubling pre-phase
    keeps the start close for far roots.
    """
    wr2 = w * r2

    def val_at(mu_):
        return float((r2 / (1.0 + mu_ * w) ** 2).sum()) - bound_sq

    mu = 0.0
    # Doubling pre-phase: advance while still strictly left of the root.
    # Capped so a zero bound (root at infinity) degrades to a huge but finite
    # multiplier, which the closed-form shrink handles gracefully.
    step = 1.0
    for _ in range(340):
        trial = mu + step
        if trial < 1e200 and val_at(trial) > 0.0:
            mu = trial
            step *= 4.0
        else:
            break
    for _ in range(40):
        denom = 1.0 + mu * w
        d2 = denom * denom
        val = float((r2 / d2).sum()) - bound_sq
        if val <= bound_sq * 1e-13:
            break
        slope = -2.0 * float((wr2 / (d2 * denom)).sum())
        mu_new = mu - val / slope
        if not np.isfinite(mu_new) or mu_new <= mu * (1.0 + 1e-15):
            break
        mu = mu_new
    return mu


def _project_source(z: np.ndarray, c: np.ndarray, k_sq: float) -> np.ndarray:
    cz2 = c * z * z
    if float(cz2.sum()) <= k_sq:
        return z
    mu = _shrink_root(cz2, c, k_sq)
    return z / (1.0 + mu * c)


def _project_data(z: np.ndarray, sigma: np.ndarray, s: np.ndarray, g: np.ndarray,
                  delta_sq: float) -> np.ndarray:
    r = sigma * z - g
    if float((r * r).sum()) <= delta_sq:
        return z
    nu = _shrink_root(r * r, s, delta_sq)
    return (z + nu * sigma * g) / (1.0 + nu * s)


def _project_intersection(z0, c, k_sq, sigma, s, g, delta_sq, sweeps=10, tol=1e-11):
    """Dykstra alternating projections onto the two ellipsoids."""
    if _feasible(z0, c, k_sq, sigma, g, delta_sq, slack=0.0):
        return z0
    z = z0.copy()
    p = np.zeros_like(z)
    q = np.zeros_like(z)
    for _ in range(sweeps):
        y = _project_source(z + p, c, k_sq)
        p += z - y
        z_new = _project_data(y + q, sigma, s, g, delta_sq)
        q += y - z_new
        if float(np.max(np.abs(z_new - z))) < tol:
            z = z_new
            break
        z = z_new
    return z


def _feasible(z, c, k_sq, sigma, g, delta_sq, slack=1e-9) -> bool:
    r = sigma * z - g
    return (
        float((c * z * z).sum()) <= k_sq * (1.0 + slack)
        and float((r * r).sum()) <= delta_sq * (1.0 + slack) + 1e-300
    )


def worst_case_search(
    svd: SvdTriple,
    source: SourceSpec,
    f_delta: np.ndarray,
    delta: float,
    a: float,
    restarts: int = 32,
    seed: int = 0,
    iters: int = 40,
) -> float:
    """Lower estimate of sup ||r - y|| over admissible y.

    r is the regularized solution for f_delta; y ranges over the source set
    intersected with the data ball of radius delta.  Multi-start projected
    gradient ascent; the n = 1 problem is solved by brute force on a
    10^6-point grid over the feasible interval (exact there, since the
    objective is monotone toward the interval ends).  Raises InfeasibleError
    when no y satisfies both constraints.
    """
    if delta <= 0.0:
        raise InvalidParameterError(f"noise radius must be positive, got {delta}")
    if a <= 0.0:
        raise InvalidParameterError(f"regularization parameter must be positive, got {a}")
    f_delta = np.asarray(f_delta, dtype=float)
    g_full = svd.u.T @ f_delta
    rho_full = _filter(svd, a) * g_full
    pos = svd.sigma > 0.0

    # Null modes carry y_i = 0; their data residual is fixed.
    res0_sq = float(np.sum(g_full[~pos] ** 2))
    delta_eff_sq = delta**2 - res0_sq
    if delta_eff_sq < 0.0:
        raise InfeasibleError(
            "data has more null-space content than the noise radius allows"
        )
    sigma = svd.sigma[pos]
    s = svd.s[pos]
    g = g_full[pos]
    rho = rho_full[pos]
    k_sq = source.k_p**2
    if sigma.size == 0:
        return 0.0
    c = s ** (-2.0 * source.p)

    # Feasibility: minimize the data residual over the source ellipsoid.
    # Lagrange form z_i = sigma_i g_i / (s_i + lam c_i), lam >= 0 chosen so the
    # source constraint holds with equality when the unconstrained LS point is
    # outside the ellipsoid.
    z_ls = sigma * g / s
    lam = 0.0
    if float(np.sum(c * z_ls**2)) > k_sq:
        lam_lo, lam_hi = 0.0, 1.0
        def src_val(lam_):
            zz = sigma * g / (s + lam_ * c)
            return float(np.sum(c * zz**2))
        while src_val(lam_hi) > k_sq:
            lam_hi *= 4.0
            if lam_hi > 1e300:
                break
        for _ in range(200):
            mid = 0.5 * (lam_lo + lam_hi)
            if src_val(mid) > k_sq:
                lam_lo = mid
            else:
                lam_hi = mid
            if lam_hi - lam_lo <= 1e-15 * max(1.0, lam_hi):
                break
        lam = lam_hi
    anchor = sigma * g / (s + lam * c)
    min_res_sq = float(np.sum((sigma * anchor - g) ** 2))
    if min_res_sq > delta_eff_sq * (1.0 + 1e-9) + 1e-300:
        raise InfeasibleError(
            f"no admissible y: minimal data residual {np.sqrt(min_res_sq):.3g} "
            f"exceeds the noise radius {np.sqrt(max(delta_eff_sq, 0.0)):.3g}"
        )

    if svd.n == 1:
        half = source.k_p * s[0] ** source.p
        lo = max(-half, (g[0] - np.sqrt(delta_eff_sq)) / sigma[0])
        hi = min(half, (g[0] + np.sqrt(delta_eff_sq)) / sigma[0])
        if lo > hi:
            raise InfeasibleError("feasible interval is empty")
        zs = np.linspace(lo, hi, 10**6)
        return float(np.max(np.abs(zs - rho[0])))

    def objective(z):
        d = z - rho
        return float(np.sqrt((d * d).sum()))

    # Loose projections steer the ascent cheaply; only the final point is
    # projected tightly and feasibility-checked before its value counts.
    def project_loose(z):
        return _project_intersection(z, c, k_sq, sigma, s, g, delta_eff_sq, sweeps=3, tol=1e-8)

    def project_tight(z):
        return _project_intersection(z, c, k_sq, sigma, s, g, delta_eff_sq, sweeps=30, tol=1e-12)

    starts = [anchor]
    # Push along the most noise-amplified direction first.
    j_star = int(np.argmax(sigma / (s + a)))
    for sign in (1.0, -1.0):
        e = anchor.copy()
        e[j_star] = sign * source.k_p * s[j_star] ** source.p
        starts.append(project_loose(e))
    rng = rng_from(seed)
    while len(starts) < max(restarts, 1):
        d = rng.standard_normal(sigma.size)
        r = source.k_p * s**source.p * d / max(float(np.linalg.norm(d)), 1e-300)
        starts.append(project_loose(anchor + r))

    scale = max(float(np.linalg.norm(anchor - rho)), source.k_p * float(np.max(s**source.p)), 1e-12)
    best = 0.0
    for z0 in starts[: max(restarts, 1)]:
        z = z0
        val = objective(z)
        step = 0.5
        for _ in range(iters):
            d = z - rho
            nd = float(np.linalg.norm(d))
            if nd < 1e-15 * scale:
                d = rng.standard_normal(sigma.size)
                nd = float(np.linalg.norm(d))
            cand = project_loose(z + (step * scale / nd) * d)
            v = objective(cand)
            if v > val * (1.0 + 1e-14):
                z, val = cand, v
                step *= 1.4
            else:
                step *= 0.4
                if step < 1e-9:
                    break
        z = project_tight(z)
        # Soundness: only count the point if it is feasible (shrink toward the
        # strictly feasible anchor when projections left round-off violations).
        t = 1.0
        while not _feasible(z, c, k_sq, sigma, g, delta_eff_sq) and t > 1e-6:
            t *= 0.5
            z = anchor + t * (z - anchor)
        if _feasible(z, c, k_sq, sigma, g, delta_eff_sq):
            best = max(best, objective(z))
    return best


def certify(
    problem: ProblemSpec,
    source: SourceSpec,
    deltas: Sequence[float],
    trials: int,
    seed: int = 0,
    threads: int = 1,
    restarts: int = 4,
) -> list[Certificate]:
    """Certificates over a noise sweep.

    Per delta: a = choose_a(delta); `trials` seeded draws of a boundary
    source-set member y and a noise vector with ||e|| <= delta (the first
    trial uses the most noise-amplified singular direction); the recorded
    empirical lower bound is the max of worst_case_search over trials.
    Results are identical for any thread count: every (delta, trial) task is
    seeded independently and reduced in index order.
    """
    if not len(deltas):
        raise InvalidParameterError("deltas must be non-empty")
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    matrix, tri = make_problem(problem)
    pack = constants(source)
    p, k = source.p, source.k_p

    def one_trial(di: int, ti: int) -> float:
        delta = float(deltas[di])
        a = choose_a(delta, source)
        rng = rng_from(seed, di, ti)
        y = sample_source_set(tri, source, 1, seed=int(rng.integers(0, 2**63)))[0]
        if ti == 0:
            j_star = int(np.argmax(_filter(tri, a)))
            e = delta * tri.u[:, j_star]
        else:
            d = rng.standard_normal(tri.n)
            e = delta * d / max(float(np.linalg.norm(d)), 1e-300)
        f_delta = matrix @ y + e
        return worst_case_search(
            tri, source, f_delta, delta, a,
            restarts=restarts, seed=int(rng.integers(0, 2**63)), iters=30,
        )

    tasks = [(di, ti) for di in range(len(deltas)) for ti in range(trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(lambda dt: one_trial(*dt), tasks))
    else:
        values = [one_trial(*dt) for dt in tasks]

    certs = []
    for di, delta in enumerate(deltas):
        delta = float(delta)
        a = choose_a(delta, source)
        emp = max(values[di * trials + ti] for ti in range(trials))
        j1_cont = delta / (2.0 * np.sqrt(a))
        j2_cont = pack.c_p * k * a**p
        j1_disc = delta * operator_norm(tri, a)
        j2_disc = bias_sup(tri, source, a)
        rate = pack.C_p * delta ** (2.0 * p / (2.0 * p + 1.0))
        certs.append(
            Certificate(
                delta=delta,
                a_used=a,
                J1_cont=float(j1_cont),
                J2_cont=float(j2_cont),
                total_cont=float(j1_cont + j2_cont),
                J1_disc=float(j1_disc),
                J2_disc=float(j2_disc),
                rate_bound=float(rate),
                empirical_lower=float(emp),
                passed=bool(emp <= rate * PASS_TOL),
            )
        )
    return certs


CERTIFICATE_CSV_HEADER = "delta,a,p,k,J1_cont,J2_cont,J1_disc,J2_disc,rate_bound,empirical_lower,pass"


def certificate_csv_rows(certs: Sequence[Certificate], source: SourceSpec) -> list[str]:
    rows = [CERTIFICATE_CSV_HEADER]
    for c in certs:
        rows.append(
            f"{c.delta!r},{c.a_used!r},{source.p!r},{source.k_p!r},"
            f"{c.J1_cont!r},{c.J2_cont!r},{c.J1_disc!r},{c.J2_disc!r},"
            f"{c.rate_bound!r},{c.empirical_lower!r},{str(c.passed).lower()}"
        )
    return rows
