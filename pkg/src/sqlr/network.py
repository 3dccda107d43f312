"""One-hidden-layer sigmoid networks with l1 weight budgets.

A network of width ``r`` on ``d`` inputs computes

    f(x) = alpha0 + sum_j alphas[j] * sigmoid(gammas[j] @ x + gamma0s[j])

and belongs to the sieve when ``|alpha0| + sum_j |alphas[j]| <= V`` and, for
every hidden unit, ``|gamma0s[j]| + sum_i |gammas[j, i]| <= M``.  Training is
projected gradient descent on the mean squared error with the diminishing
step ``step_base / log(e + k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .dataset import Dataset

__all__ = [
    "SieveNetwork",
    "Gradient",
    "TrainConfig",
    "sigmoid",
    "forward",
    "predict",
    "mse",
    "grad_mse",
    "project_l1",
    "project_constraints",
    "init_network",
    "train",
    "sigmoid_deriv_coeffs",
    "sigmoid_mth_deriv",
    "partial_derivative",
    "sup_derivative_bound",
    "phi_hat",
]

MAX_SEED = 2**64 - 1

# relative slack on the l1 budget: rounding in the threshold step leaves
# projected points up to a few ulps outside, and those must count as feasible
# so that projection is idempotent
BUDGET_RTOL = 1e-12


def sigmoid(z):
    # tanh form is stable for large |z| and exact at 0
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=np.float64)))


@dataclass(frozen=True, eq=False)
class SieveNetwork:
    alpha0: float
    alphas: np.ndarray
    gammas: np.ndarray
    gamma0s: np.ndarray
    v_budget: float = 1000.0
    m_budget: float = 1000.0

    def __post_init__(self):
        alphas = np.array(self.alphas, dtype=np.float64).reshape(-1)
        gammas = np.array(self.gammas, dtype=np.float64)
        gamma0s = np.array(self.gamma0s, dtype=np.float64).reshape(-1)
        r = alphas.shape[0]
        if r < 1:
            raise ValueError("network width must be at least 1")
        if gammas.ndim == 1 and r == 1:
            gammas = gammas.reshape(1, -1)
        if gammas.ndim != 2 or gammas.shape[0] != r:
            raise ValueError(f"gammas must have shape (r, d) with r={r}, got {gammas.shape}")
        if gamma0s.shape != (r,):
            raise ValueError(f"gamma0s must have length {r}, got {gamma0s.shape[0]}")
        if not self.v_budget > 4:
            raise ValueError(f"V must exceed 4, got {self.v_budget}")
        if not self.m_budget > 0:
            raise ValueError(f"M must be positive, got {self.m_budget}")
        alpha0 = float(self.alpha0)
        if not (
            math.isfinite(alpha0)
            and np.all(np.isfinite(alphas))
            and np.all(np.isfinite(gammas))
            and np.all(np.isfinite(gamma0s))
        ):
            raise ValueError("network weights must be finite")
        for arr in (alphas, gammas, gamma0s):
            arr.setflags(write=False)
        object.__setattr__(self, "alpha0", alpha0)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "gamma0s", gamma0s)
        object.__setattr__(self, "v_budget", float(self.v_budget))
        object.__setattr__(self, "m_budget", float(self.m_budget))

    @property
    def r(self) -> int:
        return self.alphas.shape[0]

    @property
    def d(self) -> int:
        return self.gammas.shape[1]

    @classmethod
    def zeros(cls, r: int, d: int, v_budget: float = 1000.0, m_budget: float = 1000.0):
        return cls(0.0, np.zeros(r), np.zeros((r, d)), np.zeros(r), v_budget, m_budget)

    def output_norm(self) -> float:
        return abs(self.alpha0) + float(np.abs(self.alphas).sum())

    def unit_norms(self) -> np.ndarray:
        return np.abs(self.gamma0s) + np.abs(self.gammas).sum(axis=1)

    def is_feasible(self, rtol: float = BUDGET_RTOL) -> bool:
        return bool(
            self.output_norm() <= self.v_budget * (1 + rtol)
            and np.all(self.unit_norms() <= self.m_budget * (1 + rtol))
        )


@dataclass(frozen=True, eq=False)
class Gradient:
    d_alpha0: float
    d_alphas: np.ndarray
    d_gammas: np.ndarray
    d_gamma0s: np.ndarray


@dataclass(frozen=True)
class TrainConfig:
    """Settings for :func:`train`.

    ``step_base`` is the constant ``c`` of the schedule ``c / log(e + k)``.
    ``init_scale`` is only used when a random starting network is drawn.
    """

    iterations: int = 3000
    step_base: float = 0.1
    seed: int = 0
    init_scale: float = 0.5
    track_best: bool = True

    def __post_init__(self):
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError(f"iterations must be a positive integer, got {self.iterations}")
        if not (math.isfinite(self.step_base) and self.step_base > 0):
            raise ValueError(f"step_base must be positive, got {self.step_base}")
        if int(self.seed) != self.seed or not 0 <= self.seed <= MAX_SEED:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not (math.isfinite(self.init_scale) and self.init_scale >= 0):
            raise ValueError(f"init_scale must be non-negative, got {self.init_scale}")

    def step(self, k: int) -> float:
        return self.step_base / math.log(math.e + k)


def _check_dim(net: SieveNetwork, d: int):
    if net.d != d:
        raise ValueError(f"network expects {net.d} inputs, data has {d}")


def _hidden(gammas, gamma0s, x, out=None):
    # in-place sigmoid; big temporaries are costly at training scale
    z = np.matmul(x, gammas.T, out=out)
    z += gamma0s
    z *= 0.5
    np.tanh(z, out=z)
    z += 1.0
    z *= 0.5
    return z


def _predict_arrays(alpha0, alphas, gammas, gamma0s, x, out=None):
    # shared by mse() and train() so their losses agree bit for bit
    s = _hidden(gammas, gamma0s, x, out)
    return alpha0 + s @ alphas, s


def predict(net: SieveNetwork, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on every row of ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    _check_dim(net, x.shape[1])
    return _predict_arrays(net.alpha0, net.alphas, net.gammas, net.gamma0s, x)[0]


def forward(net: SieveNetwork, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("forward takes a single input vector; use predict for batches")
    return float(predict(net, x[None, :])[0])


def _loss(residual: np.ndarray) -> float:
    return float(residual @ residual) / residual.shape[0]


def mse(net: SieveNetwork, data: Dataset) -> float:
    """Sample squared-error loss (1/n) sum_i (y_i - f(x_i))^2."""
    _check_dim(net, data.d)
    f, _ = _predict_arrays(net.alpha0, net.alphas, net.gammas, net.gamma0s, data.x)
    return _loss(f - data.y)


def _loss_and_grad(alpha0, alphas, gammas, gamma0s, x, y, buf=None):
    """Loss and its gradient in every weight block.

    ``buf`` is an optional pair of (n, r) scratch arrays reused across calls.
    """
    z_out, dz = buf if buf is not None else (None, np.empty((x.shape[0], alphas.shape[0])))
    f, s = _predict_arrays(alpha0, alphas, gammas, gamma0s, x, z_out)
    res = f - y
    loss = _loss(res)
    w = (2.0 / y.shape[0]) * res
    g_alpha0 = float(w.sum())
    g_alphas = w @ s
    np.multiply(s, s, out=dz)
    np.subtract(s, dz, out=dz)
    dz *= w[:, None]
    dz *= alphas
    g_gammas = dz.T @ x
    g_gamma0s = dz.sum(axis=0)
    return loss, g_alpha0, g_alphas, g_gammas, g_gamma0s


def grad_mse(net: SieveNetwork, data: Dataset) -> Gradient:
    _check_dim(net, data.d)
    _, *g = _loss_and_grad(net.alpha0, net.alphas, net.gammas, net.gamma0s, data.x, data.y)
    return Gradient(*g)


def _project_rows(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection of each row of ``v`` onto the l1 ball of ``radius``."""
    out = v.copy()
    a = np.abs(v)
    over = a.sum(axis=1) > radius * (1 + BUDGET_RTOL)
    if not np.any(over):
        return out
    a = a[over]
    u = -np.sort(-a, axis=1)
    css = np.cumsum(u, axis=1)
    k = np.arange(1, u.shape[1] + 1)
    support = u - (css - radius) / k > 0
    # support is a prefix of the sorted entries; its length picks the threshold
    rho = support.sum(axis=1) - 1
    theta = (css[np.arange(u.shape[0]), rho] - radius) / (rho + 1)
    p = np.maximum(a - theta[:, None], 0.0)
    norm = p.sum(axis=1)
    fix = norm > radius
    p[fix] *= (radius / norm[fix])[:, None]
    out[over] = np.sign(v[over]) * p
    return out


def project_l1(v, radius: float) -> np.ndarray:
    """Nearest point to ``v`` (in Euclidean norm) with l1 norm at most ``radius``.

    Feasible inputs are returned unchanged.
    """
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("project_l1 requires finite input")
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    return _project_rows(v.reshape(1, -1), float(radius)).reshape(v.shape)


def _project_arrays(alpha0, alphas, gammas, gamma0s, v_budget, m_budget):
    out = _project_rows(np.concatenate(([alpha0], alphas))[None, :], v_budget)[0]
    units = _project_rows(np.column_stack((gamma0s, gammas)), m_budget)
    return float(out[0]), out[1:], units[:, 1:], units[:, 0]


def project_constraints(net: SieveNetwork) -> SieveNetwork:
    """Project the output layer onto the V-ball and each hidden unit onto the M-ball."""
    a0, a, g, g0 = _project_arrays(
        net.alpha0, net.alphas, net.gammas, net.gamma0s, net.v_budget, net.m_budget
    )
    return replace(net, alpha0=a0, alphas=a, gammas=g, gamma0s=g0)


def init_network(
    r: int,
    d: int,
    scale: float = 0.5,
    seed: int = 0,
    v_budget: float = 1000.0,
    m_budget: float = 1000.0,
) -> SieveNetwork:
    """Draw every weight i.i.d. uniform on [-scale, scale] and project onto the sieve.

    Weights are drawn from one PCG64 stream in the order alpha0, alphas,
    gammas (row-major), gamma0s.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    w = rng.uniform(-scale, scale, size=1 + r + r * d + r)
    net = SieveNetwork(
        w[0], w[1 : 1 + r], w[1 + r : 1 + r + r * d].reshape(r, d), w[1 + r + r * d :], v_budget, m_budget
    )
    return project_constraints(net)


def train(
    data: Dataset,
    config: TrainConfig,
    init: SieveNetwork,
    callback: Optional[Callable[[int, SieveNetwork], None]] = None,
) -> tuple[SieveNetwork, float]:
    """Projected gradient descent on the mean squared error.

    Iteration ``k = 1..config.iterations`` takes the step
    ``config.step_base / log(e + k)`` and projects back onto the sieve.  With
    ``track_best`` the lowest-loss iterate (the starting network included) is
    returned; otherwise the last one.  ``callback(k, net)`` sees every iterate,
    ``k = 0`` being the initial network.
    """
    _check_dim(init, data.d)
    if not init.is_feasible():
        raise ValueError("initial network violates the l1 budgets")
    x, y = data.x, data.y
    V, M = init.v_budget, init.m_budget
    w = (init.alpha0, init.alphas, init.gammas, init.gamma0s)
    buf = (np.empty((data.n, init.r)), np.empty((data.n, init.r)))
    loss, *g = _loss_and_grad(*w, x, y, buf)
    if callback is not None:
        callback(0, init)
    best_loss, best_w = loss, w
    for k in range(1, config.iterations + 1):
        step = config.step(k)
        w = _project_arrays(
            w[0] - step * g[0],
            w[1] - step * g[1],
            w[2] - step * g[2],
            w[3] - step * g[3],
            V,
            M,
        )
        loss, *g = _loss_and_grad(*w, x, y, buf)
        if callback is not None:
            callback(k, SieveNetwork(*w, V, M))
        if not math.isfinite(loss):
            raise FloatingPointError(f"training diverged at iteration {k}")
        if loss < best_loss:
            best_loss, best_w = loss, w
    if not config.track_best:
        best_loss, best_w = loss, w
    return SieveNetwork(*best_w, V, M), best_loss


def sigmoid_deriv_coeffs(m: int) -> list[int]:
    """Integer coefficients C_1..C_m of the m-th sigmoid derivative.

    sigma^(m) = sum_a (-1)^(a-1) C_a sigma^a (1 - sigma)^(m+1-a), with
    C_1 = 1 at m = 1 and C_a^(m) = a C_a^(m-1) + (m+1-a) C_(a-1)^(m-1).
    """
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")
    c = [1]
    for order in range(2, m + 1):
        prev = [0] + c + [0]
        c = [a * prev[a] + (order + 1 - a) * prev[a - 1] for a in range(1, order + 1)]
    return c


def sigmoid_mth_deriv(z, m: int):
    z = np.asarray(z, dtype=np.float64)
    if m == 0:
        out = sigmoid(z)
    else:
        s = sigmoid(z)
        t = sigmoid(-z)
        out = np.zeros_like(s)
        for a, c in enumerate(sigmoid_deriv_coeffs(m), start=1):
            out = out + (-1) ** (a - 1) * c * s**a * t ** (m + 1 - a)
    return float(out) if out.ndim == 0 else out


def partial_derivative(net: SieveNetwork, x, beta: Sequence[int]):
    """Mixed partial D^beta f at ``x`` (a vector, or a matrix of row inputs)."""
    beta = np.asarray(beta, dtype=np.int64)
    if beta.shape != (net.d,):
        raise ValueError(f"multi-index must have {net.d} components")
    if np.any(beta < 0):
        raise ValueError("multi-index components must be non-negative")
    m = int(beta.sum())
    if m < 1:
        raise ValueError("multi-index order must be at least 1")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x2 = np.atleast_2d(x)
    _check_dim(net, x2.shape[1])
    gamma_beta = np.prod(net.gammas**beta, axis=1)
    z = x2 @ net.gammas.T + net.gamma0s
    out = sigmoid_mth_deriv(z, m) @ (net.alphas * gamma_beta)
    return float(out[0]) if single else out


def sup_derivative_bound(net: SieveNetwork, m: int) -> float:
    """Uniform bound V * M^m * m! on every order-m partial derivative of the network."""
    if int(m) != m or m < 0:
        raise ValueError(f"m must be a non-negative integer, got {m}")
    try:
        bound = net.v_budget * net.m_budget**m * float(math.factorial(m))
    except OverflowError as exc:
        raise OverflowError(f"derivative bound overflows for m={m}") from exc
    if math.isinf(bound):
        raise OverflowError(f"derivative bound overflows for m={m}")
    return bound


def phi_hat(net: SieveNetwork, data: Dataset, features: Sequence[int]) -> float:
    """Empirical significance functional: mean over samples of the summed squared
    first partials in the ``features`` coordinates (0-based)."""
    _check_dim(net, data.d)
    feats = sorted(set(int(j) for j in features))
    if not feats:
        raise ValueError("feature set must be non-empty")
    if feats[0] < 0 or feats[-1] >= net.d:
        raise ValueError(f"feature index out of range for d={net.d}")
    s = sigmoid(data.x @ net.gammas.T + net.gamma0s)
    grads = (s * (1.0 - s) * net.alphas) @ net.gammas[:, feats]
    return float(np.mean(np.sum(grads * grads, axis=1)))
