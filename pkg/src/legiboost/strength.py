"""Adaptive edit strength: an RBF support vector regressor from prompt
embedding norm to diffusion strength in [0, 1].

The fit solves the epsilon-SVR dual with a maximal-violating-pair SMO
loop over the doubled variable vector (alpha, alpha*), which keeps the
equality constraint exact by construction. Models are tied to a backend
identity and serialize to JSON with bit-exact float round-tripping.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

DEFAULT_C = 10.0
DEFAULT_EPSILON = 0.05
KKT_TOL = 1e-6
_COEF_EPS = 1e-12


@dataclass(frozen=True)
class StrengthTrainingSet:
    """Norm/strength pairs collected for one generative backend."""

    norms: tuple[float, ...]
    strengths: tuple[float, ...]
    backend_id: str

    def __post_init__(self) -> None:
        if len(self.norms) != len(self.strengths):
            raise ValueError("norms and strengths must have equal length")
        if len(self.norms) < 2:
            raise ValueError("training needs at least 2 points")
        if any(x <= 0 or not math.isfinite(x) for x in self.norms):
            raise ValueError("norms must be positive and finite")
        if any(not (0.0 <= y <= 1.0) for y in self.strengths):
            raise ValueError("strengths must lie in [0, 1]")

    @classmethod
    def from_json_file(cls, path: str) -> "StrengthTrainingSet":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        return cls(tuple(obj["norms"]), tuple(obj["strengths"]), obj["backend_id"])

    def to_json_file(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {"norms": list(self.norms), "strengths": list(self.strengths),
                 "backend_id": self.backend_id},
                fh, indent=2,
            )


@dataclass(frozen=True)
class StrengthModel:
    """Fitted RBF epsilon-SVR; predictions are clamped to [0, 1]."""

    support_norms: tuple[float, ...]
    dual_coefs: tuple[float, ...]
    bias: float
    gamma: float
    c_reg: float
    epsilon_tube: float
    backend_id: str

    def __post_init__(self) -> None:
        if len(self.support_norms) != len(self.dual_coefs):
            raise ValueError("support and coefficient lists must match")
        if self.gamma <= 0 or self.c_reg <= 0 or self.epsilon_tube < 0:
            raise ValueError("invalid hyperparameters")
        if any(abs(c) > self.c_reg + 1e-9 for c in self.dual_coefs):
            raise ValueError("dual coefficient exceeds regularization bound")

    def predict(self, norm: float) -> float:
        return predict_strength(self, norm)

    def to_json(self) -> str:
        return json.dumps(
            {
                "backend_id": self.backend_id,
                "support_norms": list(self.support_norms),
                "dual_coefs": list(self.dual_coefs),
                "bias": self.bias,
                "gamma": self.gamma,
                "c_reg": self.c_reg,
                "epsilon_tube": self.epsilon_tube,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "StrengthModel":
        obj = json.loads(text)
        return cls(
            support_norms=tuple(obj["support_norms"]),
            dual_coefs=tuple(obj["dual_coefs"]),
            bias=float(obj["bias"]),
            gamma=float(obj["gamma"]),
            c_reg=float(obj["c_reg"]),
            epsilon_tube=float(obj["epsilon_tube"]),
            backend_id=obj["backend_id"],
        )

    def to_json_file(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_json_file(cls, path: str) -> "StrengthModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def constant_model(value: float, backend_id: str) -> StrengthModel:
    """Bias-only model predicting ``value`` for every norm."""
    return StrengthModel((), (), float(value), 1.0, DEFAULT_C, DEFAULT_EPSILON, backend_id)


def predict_strength(m: StrengthModel, norm: float) -> float:
    """clamp(sum_i coef_i * exp(-gamma (norm - s_i)^2) + bias, 0, 1)."""
    if not math.isfinite(norm):
        raise ValueError(f"norm must be finite, got {norm!r}")
    acc = m.bias
    for s, c in zip(m.support_norms, m.dual_coefs):
        acc += c * math.exp(-m.gamma * (norm - s) ** 2)
    return min(1.0, max(0.0, acc))


def _smo_solve(K: np.ndarray, y: np.ndarray, c_reg: float, epsilon: float,
               tol: float = KKT_TOL, max_iter: int = 200_000) -> tuple[np.ndarray, float]:
    """Solve the epsilon-SVR dual; returns (beta, bias).

    Doubled formulation: u = (alpha, alpha*) in [0, C]^{2n} with signs
    z = (+1, -1); minimize 1/2 u'Qu + p'u subject to z'u = 0 where
    Q = z z' * K and p_s = epsilon - z_s y_s.
    """
    n = len(y)
    z = np.concatenate([np.ones(n), -np.ones(n)])
    Q = np.outer(z, z) * np.tile(K, (2, 2))
    p = epsilon - z * np.tile(y, 2)
    u = np.zeros(2 * n)
    grad = p.copy()

    for _ in range(max_iter):
        zg = -z * grad
        in_up = ((z > 0) & (u < c_reg - 1e-12)) | ((z < 0) & (u > 1e-12))
        in_low = ((z < 0) & (u < c_reg - 1e-12)) | ((z > 0) & (u > 1e-12))
        if not in_up.any() or not in_low.any():
            break
        i = int(np.flatnonzero(in_up)[np.argmax(zg[in_up])])
        j = int(np.flatnonzero(in_low)[np.argmin(zg[in_low])])
        m_val = zg[i]
        big_m = zg[j]
        if m_val - big_m <= tol:
            break
        a = Q[i, i] + Q[j, j] - 2.0 * z[i] * z[j] * Q[i, j]
        if a <= 1e-12:
            a = 1e-12
        lam = (m_val - big_m) / a
        cap_i = (c_reg - u[i]) if z[i] > 0 else u[i]
        cap_j = u[j] if z[j] > 0 else (c_reg - u[j])
        lam = min(lam, cap_i, cap_j)
        du_i = z[i] * lam
        du_j = -z[j] * lam
        u[i] += du_i
        u[j] += du_j
        grad += Q[:, i] * du_i + Q[:, j] * du_j

    beta = u[:n] - u[n:]
    zg = -z * grad
    free = (u > 1e-8 * c_reg) & (u < c_reg * (1.0 - 1e-8))
    if free.any():
        bias = float(zg[free].mean())
    else:
        in_up = ((z > 0) & (u < c_reg - 1e-12)) | ((z < 0) & (u > 1e-12))
        in_low = ((z < 0) & (u < c_reg - 1e-12)) | ((z > 0) & (u > 1e-12))
        hi = zg[in_up].max() if in_up.any() else 0.0
        lo = zg[in_low].min() if in_low.any() else 0.0
        bias = float((hi + lo) / 2.0)
    return beta, bias


def rbf_kernel_matrix(x: np.ndarray, gamma: float) -> np.ndarray:
    d = x[:, None] - x[None, :]
    return np.exp(-gamma * d * d)


def default_gamma(norms) -> float:
    """1 / (2 var(X)); falls back to 1.0 for degenerate spreads."""
    var = float(np.var(np.asarray(norms, dtype=np.float64)))
    return 1.0 if var < 1e-12 else 1.0 / (2.0 * var)


def fit_strength_model(
    data: StrengthTrainingSet,
    c_reg: float = DEFAULT_C,
    epsilon_tube: float = DEFAULT_EPSILON,
    gamma: float | None = None,
) -> StrengthModel:
    """Fit the RBF epsilon-SVR mapping norms to strengths."""
    x = np.asarray(data.norms, dtype=np.float64)
    y = np.asarray(data.strengths, dtype=np.float64)
    g = default_gamma(x) if gamma is None else float(gamma)
    if g <= 0:
        raise ValueError("gamma must be positive")
    K = rbf_kernel_matrix(x, g)
    beta, bias = _smo_solve(K, y, c_reg, epsilon_tube)
    keep = np.abs(beta) > _COEF_EPS
    return StrengthModel(
        support_norms=tuple(float(v) for v in x[keep]),
        dual_coefs=tuple(float(v) for v in beta[keep]),
        bias=bias,
        gamma=g,
        c_reg=float(c_reg),
        epsilon_tube=float(epsilon_tube),
        backend_id=data.backend_id,
    )
