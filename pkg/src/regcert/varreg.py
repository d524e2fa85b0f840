"""Penalized minimization for injective nonlinear problems.

Minimizes F(v) = ||A(v) - f_delta|| + delta * phi(v) over the admissible set
{residual <= delta, phi(v) <= c} with phi(v) = ||v||^2, on small gallery
problems A(v) = B * sigma(v) with an elementwise monotone nonlinearity.  The
truth is always feasible with F(truth) <= (1 + phi(truth)) * delta, so a
2-approximate minimizer certifies the same linear-in-delta bound, and the
delta -> 0 study tracks convergence of the minimizers to the truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InfeasibleError, InvalidMatrixError, InvalidParameterError
from .linreg import apply
from .seeding import rng_from
from .spectral import ProblemSpec, SvdTriple, make_problem, svd

NONLINEARITIES = ("identity", "cubic")

FEAS_TOL = 1.0 + 1e-9


@dataclass(frozen=True)
class NonlinearProblem:
    """Forward map A(v) = B sigma(v) with phi-ball compactum of radius cap."""

    b: np.ndarray
    nonlinearity: str
    phi_cap: float
    b_svd: SvdTriple = None

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise InvalidMatrixError(f"B must be square, got shape {b.shape}")
        if self.nonlinearity not in NONLINEARITIES:
            raise InvalidMatrixError(
                f"unknown nonlinearity {self.nonlinearity!r}; choose one of {NONLINEARITIES}"
            )
        if not self.phi_cap > 0.0:
            raise InvalidParameterError(f"phi cap must be positive, got {self.phi_cap}")
        b = b.copy()
        b.flags.writeable = False
        object.__setattr__(self, "b", b)
        tri = svd(b) if self.b_svd is None else self.b_svd
        if tri.sigma[-1] <= 0.0:
            raise InvalidMatrixError("B must be injective (smallest singular value > 0)")
        object.__setattr__(self, "b_svd", tri)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    def forward(self, v: np.ndarray) -> np.ndarray:
        return self.b @ _sigma(v, self.nonlinearity)


@dataclass(frozen=True)
class MinimizeReport:
    v_delta: np.ndarray
    F_value: float
    m_hat: float
    feasible: bool
    iterations: int
    restarts: int


@dataclass(frozen=True)
class StudyRow:
    delta: float
    F_value: float
    c1_delta_bound: float
    error_to_truth: float
    feasible: bool


def _sigma(v: np.ndarray, kind: str) -> np.ndarray:
    if kind == "identity":
        return v
    return v + v**3 / 3.0


def _sigma_inverse(x: np.ndarray, kind: str) -> np.ndarray:
    if kind == "identity":
        return np.asarray(x, dtype=float)
    # Solve t + t^3/3 = x per component; the map is strictly increasing.
    t = np.asarray(x, dtype=float).copy()
    for _ in range(60):
        f = t + t**3 / 3.0 - x
        t = t - f / (1.0 + t**2)
        if np.max(np.abs(f)) < 1e-14 * max(1.0, float(np.max(np.abs(x)))):
            break
    return t


def make_nonlinear_problem(
    kind: str, n: int, nonlinearity: str, phi_cap: float, q: float = 1.0, seed: int = 0
) -> NonlinearProblem:
    """Nonlinear problem with B taken from the spectral gallery."""
    b, tri = make_problem(ProblemSpec(kind=kind, n=n, q=q, seed=seed))
    return NonlinearProblem(b=b, nonlinearity=nonlinearity, phi_cap=phi_cap, b_svd=tri)


def phi(v: np.ndarray) -> float:
    v = np.asarray(v, dtype=float)
    return float(v @ v)


def functional(problem: NonlinearProblem, v: np.ndarray, f_delta: np.ndarray, delta: float) -> float:
    """F(v) = ||A(v) - f_delta|| + delta * ||v||^2."""
    if delta <= 0.0:
        raise InvalidParameterError(f"delta must be positive, got {delta}")
    v = np.asarray(v, dtype=float)
    return float(np.linalg.norm(problem.forward(v) - f_delta)) + delta * phi(v)


def _residual(problem, v, f_delta) -> float:
    return float(np.linalg.norm(problem.forward(v) - f_delta))


def _project_cap(v: np.ndarray, cap: float) -> np.ndarray:
    r = phi(v)
    if r <= cap:
        return v
    return v * np.sqrt(cap / r)


def _num_grad(fn, v: np.ndarray, step: float) -> np.ndarray:
    g = np.empty_like(v)
    for i in range(v.size):
        e = np.zeros_like(v)
        e[i] = step
        g[i] = (fn(v + e) - fn(v - e)) / (2.0 * step)
    return g


def _descend(fn, v, cap, iters, grad_step):
    """Projected gradient descent with backtracking; numerical gradients."""
    fv = fn(v)
    used = 0
    for _ in range(iters):
        used += 1
        g = _num_grad(fn, v, grad_step)
        gn = float(np.linalg.norm(g))
        if gn < 1e-14:
            break
        t = 1.0 / max(gn, 1.0)
        improved = False
        while t > 1e-14:
            cand = _project_cap(v - t * g, cap)
            fc = fn(cand)
            if fc < fv - 1e-4 * t * gn * gn:
                v, fv = cand, fc
                improved = True
                break
            t *= 0.5
        if not improved:
            break
    return v, fv, used


def minimize(
    problem: NonlinearProblem,
    f_delta: np.ndarray,
    delta: float,
    budget: int = 200,
    seed: int = 0,
    restarts: int = 32,
    extra_starts: Optional[Sequence[np.ndarray]] = None,
) -> MinimizeReport:
    """Best feasible minimizer of F found by multi-start local descent.

    Starts: the origin, the linearized regularized solution
    sigma^{-1}((B^T B + delta I)^{-1} B^T f_delta), any ``extra_starts``, and
    seeded random points inside the phi ball.  Each start first descends the
    residual until it clears delta, then descends F itself with radial
    projection back into the ball; steps that break feasibility are repaired
    or rejected.  ``budget`` caps the descent iterations per phase and start.
    """
    if delta <= 0.0:
        raise InvalidParameterError(f"delta must be positive, got {delta}")
    if budget < 1:
        raise InvalidParameterError(f"budget must be >= 1, got {budget}")
    f_delta = np.asarray(f_delta, dtype=float)
    cap = problem.phi_cap
    n = problem.n
    scale = max(1.0, float(np.max(np.abs(f_delta))))
    grad_step = 1e-6 * scale

    starts: list[np.ndarray] = [np.zeros(n)]
    lin = _sigma_inverse(apply(problem.b_svd, f_delta, delta), problem.nonlinearity)
    starts.append(_project_cap(lin, cap))
    if extra_starts is not None:
        starts.extend(_project_cap(np.asarray(v, dtype=float), cap) for v in extra_starts)
    rng = rng_from(seed)
    while len(starts) < restarts:
        d = rng.standard_normal(n)
        r = float(rng.uniform(0.0, 1.0)) ** (1.0 / n) * np.sqrt(cap)
        starts.append(r * d / max(float(np.linalg.norm(d)), 1e-300))

    best_v = None
    best_f = np.inf
    total_iters = 0
    for v0 in starts[:restarts]:
        # Phase A: reach the admissible set.
        v, _, it_a = _descend(
            lambda w: _residual(problem, w, f_delta) ** 2, v0, cap, budget, grad_step
        )
        total_iters += it_a
        if _residual(problem, v, f_delta) > delta * FEAS_TOL:
            continue
        # Phase B: descend the penalized functional, repairing residual drift.
        fn = lambda w: functional(problem, w, f_delta, delta)
        v, fv, it_b = _descend(fn, v, cap, budget, grad_step)
        total_iters += it_b
        if _residual(problem, v, f_delta) > delta * FEAS_TOL:
            v, _, it_c = _descend(
                lambda w: _residual(problem, w, f_delta) ** 2, v, cap, budget, grad_step
            )
            total_iters += it_c
            fv = fn(v)
        if _residual(problem, v, f_delta) <= delta * FEAS_TOL and fv < best_f:
            best_v, best_f = v, fv
    if best_v is None:
        raise InfeasibleError(
            "no feasible point found within budget; the data may be inconsistent "
            "with the noise radius or the phi cap too small"
        )
    return MinimizeReport(
        v_delta=best_v,
        F_value=float(best_f),
        m_hat=float(best_f),
        feasible=True,
        iterations=total_iters,
        restarts=restarts,
    )


def convergence_study(
    problem: NonlinearProblem,
    u_true: np.ndarray,
    delta_seq: Sequence[float],
    budget: int = 200,
    seed: int = 0,
) -> list[StudyRow]:
    """Reconstruction error along a decreasing noise sweep.

    Per delta: data f_delta = A(u_true) + seeded noise of Euclidean radius
    delta, one minimize call, and the distance of its minimizer to the truth.
    """
    u_true = np.asarray(u_true, dtype=float)
    if phi(u_true) > problem.phi_cap:
        raise InvalidParameterError(
            f"phi(u_true)={phi(u_true):.3g} exceeds the cap {problem.phi_cap:.3g}"
        )
    deltas = [float(d) for d in delta_seq]
    if not deltas or any(d <= 0.0 for d in deltas):
        raise InvalidParameterError("delta_seq must be positive")
    if sorted(deltas, reverse=True) != deltas:
        raise InvalidParameterError("delta_seq must be decreasing")
    f_exact = problem.forward(u_true)
    rows = []
    for di, delta in enumerate(deltas):
        rng = rng_from(seed, di)
        e = rng.standard_normal(problem.n)
        e *= delta * (1.0 - 1e-12) / max(float(np.linalg.norm(e)), 1e-300)
        f_delta = f_exact + e
        report = minimize(problem, f_delta, delta, budget=budget, seed=seed + di + 1)
        rows.append(
            StudyRow(
                delta=delta,
                F_value=report.F_value,
                c1_delta_bound=(1.0 + phi(u_true)) * delta,
                error_to_truth=float(np.linalg.norm(report.v_delta - u_true)),
                feasible=report.feasible,
            )
        )
    return rows


STUDY_CSV_HEADER = "delta,F_value,m_hat_bound_c1delta,error_to_truth,feasible"


def study_csv_rows(rows: Sequence[StudyRow]) -> list[str]:
    out = [STUDY_CSV_HEADER]
    for r in rows:
        out.append(
            f"{r.delta!r},{r.F_value!r},{r.c1_delta_bound!r},"
            f"{r.error_to_truth!r},{str(r.feasible).lower()}"
        )
    return out
