"""Predictors, the exact squared-error loss, and its compressed counterpart.

The compressed loss evaluates the predictor only at the L net points:

    app(f) = sum f(z)^2 W_X - 2 sum f(z) W_XY + mean(y^2)

The weights are independent of the predictor parameters, so optimizing over
parameters costs O(L) per evaluation instead of O(N).  Loss sums are exactly
rounded (math.fsum), which keeps every report reproducible bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import DataSet
from .netgen import DigitalNet
from .rng import ROLE_MODEL_INIT, substream
from .weights import WeightSet


class ConditioningError(np.linalg.LinAlgError):
    """Normal matrix is singular or indefinite."""


def smooth_sigmoid(x):
    """2 / (1 + exp(-x)) - 1, the smooth activation used for the test networks."""
    return 2.0 / (1.0 + np.exp(-x)) - 1.0


@dataclass
class Predictor:
    """Evaluable model: linear [1, x^T] theta or a small MLP without biases.

    `layer_sizes` for an MLP lists [s, h_1, ..., h_k, 1]; weights[i] has
    shape (layer_sizes[i+1], layer_sizes[i]) and no activation follows the
    final layer.
    """

    kind: str  # "linear" | "mlp"
    theta: np.ndarray | None = None  # linear: (s+1,)
    weights: list[np.ndarray] = field(default_factory=list)
    layer_sizes: list[int] = field(default_factory=list)
    seed_provenance: str | None = None

    def input_dim(self) -> int:
        if self.kind == "linear":
            return len(self.theta) - 1
        return self.layer_sizes[0]

    def n_params(self) -> int:
        if self.kind == "linear":
            return len(self.theta)
        return sum(w.size for w in self.weights)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Model values at every row of X."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.input_dim():
            raise ValueError(
                f"input dimension {X.shape[1]} does not match model ({self.input_dim()})"
            )
        if self.kind == "linear":
            return self.theta[0] + X @ self.theta[1:]
        h = X.T
        for i, W in enumerate(self.weights):
            h = W @ h
            if i + 1 < len(self.weights):
                h = smooth_sigmoid(h)
        return h.ravel()

    def to_json(self) -> str:
        if self.kind == "linear":
            payload = {"kind": "linear", "theta": self.theta.tolist()}
        else:
            payload = {
                "kind": "mlp",
                "layer_sizes": self.layer_sizes,
                "params": np.concatenate([w.ravel() for w in self.weights]).tolist(),
            }
        if self.seed_provenance:
            payload["seed_provenance"] = self.seed_provenance
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "Predictor":
        payload = json.loads(text)
        if payload["kind"] == "linear":
            return cls(
                kind="linear",
                theta=np.asarray(payload["theta"], dtype=np.float64),
                seed_provenance=payload.get("seed_provenance"),
            )
        sizes = list(payload["layer_sizes"])
        flat = np.asarray(payload["params"], dtype=np.float64)
        weights = []
        pos = 0
        for a, b in zip(sizes[1:], sizes[:-1]):
            weights.append(flat[pos : pos + a * b].reshape(a, b))
            pos += a * b
        if pos != flat.size:
            raise ValueError("parameter count does not match declared layer sizes")
        return cls(
            kind="mlp",
            weights=weights,
            layer_sizes=sizes,
            seed_provenance=payload.get("seed_provenance"),
        )


def random_linear(s: int, seed: int, index: int = 0) -> Predictor:
    """Standard-normal linear parameters from the documented model substream."""
    g = substream(seed, ROLE_MODEL_INIT)
    theta = g.standard_normal((index + 1, s + 1))[index]
    return Predictor(
        kind="linear", theta=theta, seed_provenance=f"pcg64(seed={seed}, role=model, index={index})"
    )


def random_mlp(layer_sizes: list[int], seed: int, index: int = 0) -> Predictor:
    """MLP with uniform(-1,1) * fan_in^-1/2 weights from the model substream.

    `index` selects independent draws for repeated sampling with one seed.
    """
    g = substream(seed, ROLE_MODEL_INIT)
    weights = []
    for _ in range(index + 1):
        weights = [
            g.uniform(-1.0, 1.0, size=(a, b)) / math.sqrt(b)
            for a, b in zip(layer_sizes[1:], layer_sizes[:-1])
        ]
    return Predictor(
        kind="mlp",
        weights=weights,
        layer_sizes=list(layer_sizes),
        seed_provenance=f"pcg64(seed={seed}, role=model, index={index})",
    )


@dataclass(frozen=True)
class LossReport:
    exact: float
    approx: float
    abs_gap: float
    rel_gap: float
    cost_exact: int
    cost_approx: int

    def to_dict(self) -> dict:
        return {
            "exact": self.exact,
            "approx": self.approx,
            "abs_gap": self.abs_gap,
            "rel_gap": self.rel_gap,
            "cost_exact": self.cost_exact,
            "cost_approx": self.cost_approx,
        }


def predict(model: Predictor, x) -> float:
    """Model value at a single point."""
    return float(model.predict(np.atleast_2d(x))[0])


def exact_loss(model: Predictor, data: DataSet) -> float:
    """(1/N) sum (f(x_n) - y_n)^2 in one pass with exactly rounded summation."""
    if data.n == 0:
        raise ValueError("empty dataset")
    res = model.predict(data.X) - data.Y
    return math.fsum((res * res).tolist()) / data.n


def compressed_loss(model: Predictor, net: DigitalNet, ws: WeightSet) -> float:
    """app(f) evaluated from the weighted net alone (O(L) model evaluations)."""
    if not (net.base == ws.base and net.m == ws.m and net.s == ws.s):
        raise ValueError("weight set does not match the net shape")
    if ws.net_sha and not ws.matches(net):
        raise ValueError("weight set was computed for a different net")
    f = model.predict(net.points())
    sq_term = math.fsum((f * f * ws.w_x).tolist())
    cross_term = math.fsum((f * ws.w_xy).tolist())
    return sq_term - 2.0 * cross_term + ws.y_sq_mean


def loss_report(model: Predictor, data: DataSet, net: DigitalNet, ws: WeightSet,
                floor: float = 1e-300) -> LossReport:
    ex = exact_loss(model, data)
    ap = compressed_loss(model, net, ws)
    gap = abs(ex - ap)
    return LossReport(
        exact=ex,
        approx=ap,
        abs_gap=gap,
        rel_gap=gap / max(ex, floor),
        cost_exact=data.n,
        cost_approx=net.n_points,
    )


def _design(X: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((X.shape[0], 1)), X])


def _solve_spd(A: np.ndarray, rhs: np.ndarray, label: str) -> np.ndarray:
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(
            f"{label} normal matrix is not positive definite "
            f"(condition estimate {np.linalg.cond(A):.3e})"
        ) from exc
    return np.linalg.solve(A, rhs)


def least_squares_minimizers(data: DataSet, net: DigitalNet, ws: WeightSet):
    """Minimizers of the exact and compressed quadratics for the linear family.

    Returns (theta_exact, theta_approx, euclidean distance).  Both normal
    systems are solved directly after a positive-definiteness check; the
    compressed system is assembled from the weighted net points:
    A = sum W_X u u^T, rhs = sum W_XY u with u(z) = [1, z^T]^T.
    """
    U = _design(data.X)
    A_exact = U.T @ U / data.n
    b_exact = U.T @ data.Y / data.n
    theta_exact = _solve_spd(A_exact, b_exact, "exact")
    Z = _design(net.points())
    A_apx = (Z * ws.w_x[:, None]).T @ Z
    b_apx = Z.T @ ws.w_xy
    theta_apx = _solve_spd(A_apx, b_apx, "compressed")
    return theta_exact, theta_apx, float(np.linalg.norm(theta_exact - theta_apx))


def compressed_quadratic(net: DigitalNet, ws: WeightSet):
    """(A, rhs, const) with app(f_theta) = theta^T A theta - 2 theta^T rhs + const."""
    Z = _design(net.points())
    A = (Z * ws.w_x[:, None]).T @ Z
    rhs = Z.T @ ws.w_xy
    return A, rhs, ws.y_sq_mean
