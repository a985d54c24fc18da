"""Single-interval cG and dG time steps via Picard iteration.

Both schemes seek a degree-r polynomial U on the interval:

* cG: U(t_start) = u_left is imposed strongly and U' equals the degree
  r-1 L2 projection of f(t, U), so each Picard update integrates the
  projected right-hand side from the left endpoint.

* dG: the initial value enters weakly through the jump U(t_start+) -
  u_left.  In the mapped Legendre basis the weak form reduces to a small
  linear system M c = b(c) whose fixed point is the dG solution; each
  Picard update solves it with the nonlinearity frozen at the previous
  iterate.  (The r = 0 case reproduces implicit Euler.)

Nonexistence of a step is a first-class outcome here: the adaptive
drivers halve the step length whenever the iteration fails to converge.

``reconstruct`` lifts a converged step to the degree r+1 polynomial
with matching left value whose derivative is the degree-r projection of
f(t, U); its endpoint value coincides with U(t_end) for both schemes,
and it is the object the error estimator measures.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .poly import Interval, LocalPoly, QuadRule, gauss_legendre, project_values
from .problems import NumericOverflow, Problem, rhs_at

__all__ = [
    "Scheme",
    "StepFailure",
    "StepInput",
    "StepOutput",
    "PicardConfig",
    "step",
    "reconstruct",
]


class Scheme(enum.Enum):
    CG = "cg"
    DG = "dg"


class StepFailure(enum.Enum):
    MAX_ITERS = "max_iters"
    DIVERGED = "diverged"


@dataclass(frozen=True)
class StepInput:
    interval: Interval
    r: int
    u_left: np.ndarray
    scheme: Scheme

    def __post_init__(self):
        u_left = np.atleast_1d(np.array(self.u_left, dtype=float))
        u_left.flags.writeable = False
        object.__setattr__(self, "u_left", u_left)
        min_r = 1 if self.scheme is Scheme.CG else 0
        if self.r < min_r:
            raise ValueError(f"{self.scheme.value} step requires degree >= {min_r}, got {self.r}")


@dataclass(frozen=True)
class PicardConfig:
    fp_tol: float = 1e-12
    max_iters: int = 100
    divergence_cap: float = 1e8

    def __post_init__(self):
        if not (self.fp_tol > 0 and self.max_iters > 0 and self.divergence_cap > 0):
            raise ValueError("Picard configuration values must be positive")


@dataclass(frozen=True)
class StepOutput:
    u: Optional[LocalPoly]
    picard_iters: int
    converged: bool
    failure: Optional[StepFailure] = None


@lru_cache(maxsize=None)
def _dg_solve_matrix(r: int) -> np.ndarray:
    """Inverse of the dG system matrix in the Legendre basis.

    Row j tests with P_j: entry (j, i) collects int_{-1}^{1} P_i' P_j dx
    (= 2 for i > j with i - j odd) plus the jump contribution
    P_i(-1) P_j(-1) = (-1)^{i+j}.
    """
    n = r + 1
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    M = np.where((i > j) & ((i - j) % 2 == 1), 2.0, 0.0) + (-1.0) ** (i + j)
    Minv = np.linalg.inv(M)
    Minv.flags.writeable = False
    return Minv


def _dg_update(
    inp: StepInput, f_coeffs: np.ndarray
) -> np.ndarray:
    """Solve the dG system with frozen right-hand-side coefficients."""
    r = inp.r
    j = np.arange(r + 1)
    rhs = ((-1.0) ** j)[:, None] * inp.u_left[None, :]
    rhs = rhs + inp.interval.k * f_coeffs / (2.0 * j + 1.0)[:, None]
    return _dg_solve_matrix(r) @ rhs


def step(
    p: Problem,
    inp: StepInput,
    cfg: PicardConfig = PicardConfig(),
    quad: QuadRule | None = None,
) -> StepOutput:
    """Attempt one Galerkin step by Picard iteration.

    Iterates until the sup over Legendre-coefficient updates drops below
    fp_tol.  Returns converged=False with a failure reason when the
    iterate diverges (sup norm beyond the cap, or f overflows) or the
    iteration budget runs out; the drivers treat that as "no discrete
    solution exists at this step size".
    """
    r, iv, d = inp.r, inp.interval, inp.u_left.size
    if quad is None:
        quad = gauss_legendre(min(r + 6, 64))
    if quad.n < r + 6:
        raise ValueError(f"step at degree {r} needs a quadrature with >= {r + 6} points")
    ts = iv.from_reference(quad.nodes)

    coeffs = np.zeros((r + 1, d))
    coeffs[0] = inp.u_left
    u = LocalPoly(iv, coeffs)
    proj_degree = r - 1 if inp.scheme is Scheme.CG else r

    for it in range(1, cfg.max_iters + 1):
        u_nodes = u.at_reference(quad.nodes).T
        try:
            f_vals = rhs_at(p, ts, u_nodes)
        except NumericOverflow:
            return StepOutput(u, it, False, StepFailure.DIVERGED)
        f_proj = project_values(f_vals, iv, proj_degree, quad)
        if inp.scheme is Scheme.CG:
            u_next = f_proj.antiderivative(inp.u_left)
        else:
            u_next = LocalPoly(iv, _dg_update(inp, f_proj.coeffs))
        change = float(np.max(np.abs(u_next.coeffs - u.coeffs)))
        u = u_next
        if u.linf_norm() > cfg.divergence_cap:
            return StepOutput(u, it, False, StepFailure.DIVERGED)
        if change <= cfg.fp_tol:
            return StepOutput(u, it, True)
    return StepOutput(u, cfg.max_iters, False, StepFailure.MAX_ITERS)


def reconstruct(
    p: Problem, inp: StepInput, u: LocalPoly, quad: QuadRule | None = None
) -> LocalPoly:
    """Degree r+1 reconstruction: left value u_left, derivative = degree-r
    projection of f(t, U).

    Uses the same quadrature as the step so the endpoint values of U and
    the reconstruction coincide up to the Picard tolerance.
    """
    r, iv = inp.r, inp.interval
    if quad is None:
        quad = gauss_legendre(min(r + 6, 64))
    ts = iv.from_reference(quad.nodes)
    f_vals = rhs_at(p, ts, u.at_reference(quad.nodes).T)
    return project_values(f_vals, iv, r, quad).antiderivative(inp.u_left)
