"""Perron eigenpair of the tilted generator and the matrix exponential.

For a typed model and tilt ``lam`` the relevant matrix is

    M = 1/2 lam^2 diag(a) + lam diag(b) + theta Q + diag(r)

(the drift term vanishes for the driftless models).  Its Perron root ``E``
and positive eigenvector ``v`` define the single-particle martingale

    zeta(t) = exp(int_0^t R(eta_s) ds) v(eta_t) exp(lam xi_t - E t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelSpec


class NumericError(ArithmeticError):
    """Non-convergence, reducibility or overflow in a numeric kernel."""


class UnsupportedModelError(TypeError):
    """Operation needs a tabular (type-dependent) model."""


EIG_TOL = 1e-12
EIG_MAX_ITER = 100_000
EXPM_SELF_CHECK = 1e-10


def build_matrix(model: ModelSpec, lam: float) -> np.ndarray:
    if not model.rate.is_tabular:
        raise UnsupportedModelError("build_matrix needs type-dependent rates")
    motion = model.motion
    return (0.5 * lam * lam * np.diag(motion.variance) + lam * np.diag(motion.drift)
            + motion.generator + np.diag(model.rates()))


def _irreducible(M: np.ndarray) -> bool:
    n = M.shape[0]
    adj = (M - np.diag(np.diag(M)) > 0) | np.eye(n, dtype=bool)
    reach = adj.copy()
    for _ in range(int(math.ceil(math.log2(max(n, 2)))) + 1):
        reach = (reach.astype(np.int64) @ reach.astype(np.int64)) > 0
    return bool(reach.all())


def principal_eigenpair(M) -> tuple[float, np.ndarray]:
    """Perron root and positive eigenvector (max entry 1) of a Metzler matrix.

    Shifted power iteration from the all-ones vector on ``B = M + s I`` with
    ``s = max|diag| + 1``; the iterate is also fed through repeated squares of
    ``B`` so slowly mixing matrices still converge in few steps.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("matrix must be square")
    if np.any(M - np.diag(np.diag(M)) < 0):
        raise NumericError("matrix has negative off-diagonal entries")
    if n > 1 and not _irreducible(M):
        raise NumericError("matrix is reducible")
    if n == 1:
        return float(M[0, 0]), np.ones(1)
    shift = np.max(np.abs(np.diag(M))) + 1.0
    B = M + shift * np.eye(n)
    v = np.ones(n)
    P = B / np.max(B)
    for it in range(EIG_MAX_ITER):
        w = B @ v
        w = w / w.max()
        w = P @ w
        w = w / w.max()
        delta = np.max(np.abs(w - v))
        v = w
        if delta <= EIG_TOL:
            break
        P = P @ P
        P = P / P.max()
    else:
        raise NumericError("power iteration did not converge")
    # polish on the unsquared matrix
    for _ in range(3):
        w = B @ v
        v = w / w.max()
    if np.any(v <= 0):
        raise NumericError("Perron vector is not strictly positive")
    Mv = M @ v
    E = float(np.dot(v, Mv) / np.dot(v, v))
    resid = np.max(np.abs(Mv - E * v))
    if resid > 1e-10 * max(1.0, np.max(np.abs(M).sum(axis=1))):
        raise NumericError(f"eigen residual {resid:.3e} too large")
    return E, v


def _expm(A: np.ndarray, extra_squarings: int = 0) -> np.ndarray:
    n = A.shape[0]
    norm = np.max(np.abs(A).sum(axis=0))
    s = max(0, int(math.ceil(math.log2(norm / 0.25)))) if norm > 0 else 0
    s += extra_squarings
    As = A / (2.0 ** s)
    out = np.eye(n)
    term = np.eye(n)
    for k in range(1, 40):
        term = term @ As / k
        out = out + term
        if np.max(np.abs(term)) <= 1e-18 * np.max(np.abs(out)):
            break
    for _ in range(s):
        out = out @ out
    return out


def expm_apply(M, t: float, g) -> np.ndarray:
    """exp(t M) g by scaling-and-squaring with a truncated Taylor series.

    The result is recomputed with one extra halving of the scaled step; a
    relative disagreement above 1e-10 raises NumericError.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    M = np.atleast_2d(np.asarray(M, dtype=float))
    g = np.asarray(g, dtype=float)
    if t == 0:
        return g.copy()
    with np.errstate(over="raise", invalid="raise"):
        try:
            A = t * M
            out = _expm(A) @ g
            check = _expm(A, extra_squarings=1) @ g
        except FloatingPointError as exc:
            raise NumericError(f"overflow in expm at t*|M| = {t * np.abs(M).max():.3g}") from exc
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite matrix exponential")
    scale = max(np.max(np.abs(out)), np.finfo(float).tiny)
    if np.max(np.abs(out - check)) > EXPM_SELF_CHECK * scale:
        raise NumericError("matrix exponential failed its halved-step self-check")
    return out


# ---------------------------------------------------------------- martingale spec

@dataclass(frozen=True, eq=False)
class MartingaleSpec:
    """Parameters of the single-particle martingale.

    ``form='typed'``: log zeta = int R + log v(eta_t) + lam xi_t - E t.
    ``form='bbm'``:   log zeta = lam xi_t - E t with E = lam^2 a / 2 + lam b,
    usable with general (location-dependent) rates on a one-type motion.
    """

    lam: float
    v: np.ndarray
    E: float
    form: str = "typed"
    matrix: np.ndarray | None = None

    @property
    def log_v(self) -> np.ndarray:
        return np.log(self.v)

    def zeta0(self, x0: float = 0.0, y0: int = 0) -> float:
        return float(self.v[y0] * math.exp(self.lam * x0))

    def spine_drift(self, model: ModelSpec) -> np.ndarray:
        """Spine drift under the zeta-changed law: b(y) + lam a(y)."""
        return model.motion.drift + self.lam * model.motion.variance

    def spine_generator(self, model: ModelSpec) -> np.ndarray:
        """h-transformed type generator theta Q(y,j) v(j)/v(y)."""
        G = model.motion.generator * (self.v[None, :] / self.v[:, None])
        np.fill_diagonal(G, 0.0)
        np.fill_diagonal(G, -G.sum(axis=1))
        return G


def martingale_spec(model: ModelSpec, lam: float) -> MartingaleSpec:
    """Single-particle martingale for tilt ``lam`` on ``model``."""
    if model.rate.is_tabular:
        M = build_matrix(model, lam)
        E, v = principal_eigenpair(M)
        M.setflags(write=False)
        return MartingaleSpec(float(lam), v, E, "typed", M)
    if model.n_types != 1:
        raise UnsupportedModelError("general-rate martingales need a one-type motion")
    a = model.motion.variance[0]
    b = model.motion.drift[0]
    return MartingaleSpec(float(lam), np.ones(1), 0.5 * lam * lam * a + lam * b, "bbm")
