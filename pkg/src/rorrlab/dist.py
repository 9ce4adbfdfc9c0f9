"""Samplers for the Gaussian chain G_k, its sign discretization D_{U,k},
and the uniform distribution, plus moment estimation.

The chain: X^(1)..X^(k-1) are iid standard Gaussian N-vectors,
Y^(i) = U^T X^(i), and Z interleaves them as Z^(1) = X^(1),
Z^(i) = Y^(i-1) * X^(i) pointwise for 1 < i < k, Z^(k) = Y^(k-1).
D_{U,k} takes signs of Z, with sgn(0) := +1 (a probability-zero event;
the fixed convention keeps sampling deterministic).

Monte-Carlo moment estimates use antithetic pairing (X, -X), which makes
estimates of odd-parity moments vanish identically rather than just in
expectation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ortho import OrthogonalMatrix
from .rorrelation import RorrelationInstance, sign_correlation
from .util import derive_rng, sub_seed

__all__ = [
    "GkSample",
    "MomentEstimate",
    "MomentAuditReport",
    "sample_gk",
    "sample_duk",
    "sample_duk_batch",
    "sample_uniform",
    "sample_uniform_batch",
    "u_tilde_exact_1x1",
    "u_tilde_mc",
    "d_hat_product",
    "duk_empirical_moment",
    "split_global_set",
    "duk_moment_bound",
    "moment_bound_audit",
    "max_chain_sides",
    "max_chain_inequality",
]

MC_CHUNK = 8192


def _sign(values: np.ndarray) -> np.ndarray:
    """Sign with sgn(0) := +1."""
    return np.where(values >= 0, 1, -1).astype(np.int8)


@dataclass(frozen=True)
class GkSample:
    """One draw of the Gaussian chain: X, Y = U^T X, and the Z interleaving."""

    x: np.ndarray  # (k-1, N)
    y: np.ndarray  # (k-1, N)
    z: np.ndarray  # (k, N)

    @property
    def k(self) -> int:
        return self.z.shape[0]

    def max_construction_error(self, u: OrthogonalMatrix) -> float:
        """Recompute every defining identity; largest absolute deviation."""
        k = self.k
        errs = [np.max(np.abs(self.y - self.x @ u.entries))]
        errs.append(np.max(np.abs(self.z[0] - self.x[0])))
        for i in range(1, k - 1):
            errs.append(np.max(np.abs(self.z[i] - self.y[i - 1] * self.x[i])))
        errs.append(np.max(np.abs(self.z[k - 1] - self.y[k - 2])))
        return float(max(errs))


def sample_gk(u: OrthogonalMatrix, k: int, seed: int) -> GkSample:
    if k < 2:
        raise ValueError("fold count k must be at least 2")
    rng = derive_rng(seed, "gk", u.n, k)
    x = rng.standard_normal((k - 1, u.n))
    y = x @ u.entries  # row i is U^T x_i
    z = np.empty((k, u.n))
    z[0] = x[0]
    for i in range(1, k - 1):
        z[i] = y[i - 1] * x[i]
    z[k - 1] = y[k - 2]
    return GkSample(x=x, y=y, z=z)


def sample_duk(u: OrthogonalMatrix, k: int, seed: int) -> RorrelationInstance:
    gk = sample_gk(u, k, seed)
    return RorrelationInstance(k=k, vectors=_sign(gk.z))


def sample_duk_batch(u: OrthogonalMatrix, k: int, count: int, seed: int) -> np.ndarray:
    """Signs of `count` chain draws, shape (count, k, N), int8."""
    if k < 2:
        raise ValueError("fold count k must be at least 2")
    rng = derive_rng(seed, "duk-batch", u.n, k, count)
    out = np.empty((count, k, u.n), dtype=np.int8)
    done = 0
    while done < count:
        m = min(MC_CHUNK, count - done)
        x = rng.standard_normal((m, k - 1, u.n))
        y = x @ u.entries
        z = np.empty((m, k, u.n))
        z[:, 0] = x[:, 0]
        for i in range(1, k - 1):
            z[:, i] = y[:, i - 1] * x[:, i]
        z[:, k - 1] = y[:, k - 2]
        out[done : done + m] = _sign(z)
        done += m
    return out


def sample_uniform(k: int, n: int, seed: int) -> RorrelationInstance:
    return RorrelationInstance(k=k, vectors=sample_uniform_batch(k, n, 1, seed)[0])


def sample_uniform_batch(k: int, n: int, count: int, seed: int) -> np.ndarray:
    if k < 2:
        raise ValueError("fold count k must be at least 2")
    rng = derive_rng(seed, "uniform-batch", n, k, count)
    return (2 * rng.integers(0, 2, size=(count, k, n)) - 1).astype(np.int8)


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentEstimate:
    value: float
    stderr: float
    samples: int
    exact: bool

    def within(self, target: float, sigmas: float = 4.0) -> bool:
        if self.exact:
            return math.isclose(self.value, target, rel_tol=0, abs_tol=1e-12)
        return abs(self.value - target) <= sigmas * self.stderr


def u_tilde_exact_1x1(u: OrthogonalMatrix, i: int, j: int) -> MomentEstimate:
    """Closed form for singleton sets: E[sgn X_i sgn Y_j] with covariance
    U_ij, which is 1 - 2 arccos(U_ij)/pi."""
    if not (1 <= i <= u.n and 1 <= j <= u.n):
        raise ValueError("index out of range")
    return MomentEstimate(
        value=sign_correlation(u.entries[i - 1, j - 1]),
        stderr=0.0,
        samples=0,
        exact=True,
    )


def u_tilde_mc(
    u: OrthogonalMatrix,
    s: Sequence[int],
    t: Sequence[int],
    samples: int,
    seed: int,
) -> MomentEstimate:
    """Antithetic Monte-Carlo estimate of
    E_X[sgn(prod_{i in S} X_i * prod_{j in T} (U^T X)_j)].

    Pairs (X, -X) make the estimate identically zero when |S| + |T| is
    odd; stderr comes from the pair means.
    """
    s_idx = np.asarray(sorted(set(s)), dtype=int) - 1
    t_idx = np.asarray(sorted(set(t)), dtype=int) - 1
    if s_idx.size and (s_idx.min() < 0 or s_idx.max() >= u.n):
        raise ValueError("S index out of range")
    if t_idx.size and (t_idx.min() < 0 or t_idx.max() >= u.n):
        raise ValueError("T index out of range")
    pairs = samples // 2
    if pairs < 1:
        raise ValueError("need at least two samples for an antithetic pair")
    if (s_idx.size + t_idx.size) % 2 == 1:
        # Literal cancellation: every pair mean is exactly zero.
        return MomentEstimate(value=0.0, stderr=0.0, samples=2 * pairs, exact=False)
    rng = derive_rng(seed, "u-tilde", u.n, tuple(s_idx.tolist()), tuple(t_idx.tolist()))
    cols = u.entries[:, t_idx]
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < pairs:
        m = min(MC_CHUNK, pairs - done)
        x = rng.standard_normal((m, u.n))
        prod = np.ones(m)
        if s_idx.size:
            prod *= np.prod(x[:, s_idx], axis=1)
        if t_idx.size:
            prod *= np.prod(x @ cols, axis=1)
        signs = _sign(prod).astype(float)
        # Even parity: the antithetic partner contributes the same sign,
        # so the pair mean equals the sign itself.
        total += float(signs.sum())
        total_sq += float((signs**2).sum())
        done += m
    mean = total / pairs
    var = max(total_sq / pairs - mean**2, 0.0) * pairs / max(pairs - 1, 1)
    stderr = math.sqrt(var / pairs)
    return MomentEstimate(value=mean, stderr=stderr, samples=2 * pairs, exact=False)


def split_global_set(global_set: Sequence[int], k: int, n: int) -> list[tuple[int, ...]]:
    """Split S subset of [kN] into block-local parts (1-based within block)."""
    parts: list[list[int]] = [[] for _ in range(k)]
    for idx in sorted(set(global_set)):
        if not (1 <= idx <= k * n):
            raise ValueError(f"global index {idx} outside [1, {k * n}]")
        block, local = divmod(idx - 1, n)
        parts[block].append(local + 1)
    return [tuple(p) for p in parts]


def d_hat_product(
    u: OrthogonalMatrix,
    parts: Sequence[Sequence[int]],
    method: str = "exact-when-1x1",
    samples: int = 20_000,
    seed: int = 0,
) -> MomentEstimate:
    """Moment of D_{U,k} on the set with block parts S_1..S_k, computed as
    the product of link factors U~(S_1,S_2) ... U~(S_{k-1},S_k).

    A link vanishes identically when its size-sum is odd, and also when
    exactly one side is empty (signs of disjoint independent Gaussians
    are unbiased coins). Singleton-singleton links use the arcsine
    closed form unless method="mc" forces Monte Carlo.
    """
    if method not in ("exact-when-1x1", "mc"):
        raise ValueError(f"unknown method {method!r}")
    parts = [tuple(sorted(set(p))) for p in parts]
    if len(parts) < 2:
        raise ValueError("need at least two blocks")
    for part in parts:
        if part and not (1 <= part[0] and part[-1] <= u.n):
            raise ValueError("block-local index out of range")
    factors: list[MomentEstimate] = []
    for j in range(len(parts) - 1):
        a, b = parts[j], parts[j + 1]
        if (len(a) + len(b)) % 2 == 1:
            return MomentEstimate(value=0.0, stderr=0.0, samples=0, exact=True)
        if (len(a) == 0) != (len(b) == 0):
            return MomentEstimate(value=0.0, stderr=0.0, samples=0, exact=True)
        if len(a) == 0 and len(b) == 0:
            continue
        if len(a) == 1 and len(b) == 1 and method == "exact-when-1x1":
            factors.append(u_tilde_exact_1x1(u, a[0], b[0]))
        else:
            factors.append(u_tilde_mc(u, a, b, samples, sub_seed(seed, "link", j)))
    if not factors:
        return MomentEstimate(value=1.0, stderr=0.0, samples=0, exact=True)
    value = 1.0
    for f in factors:
        value *= f.value
    var = 0.0
    for i, f in enumerate(factors):
        rest = 1.0
        for jj, g in enumerate(factors):
            if jj != i:
                rest *= g.value
        var += (f.stderr * rest) ** 2
    return MomentEstimate(
        value=value,
        stderr=math.sqrt(var),
        samples=sum(f.samples for f in factors),
        exact=all(f.exact for f in factors),
    )


def duk_empirical_moment(
    u: OrthogonalMatrix,
    k: int,
    parts: Sequence[Sequence[int]],
    samples: int,
    seed: int,
) -> MomentEstimate:
    """Direct empirical moment of D_{U,k}: mean of the coordinate product
    over fresh chain samples. Oracle for d_hat_product."""
    if len(parts) != k:
        raise ValueError("need exactly k block parts")
    batch = sample_duk_batch(u, k, samples, seed)
    prod = np.ones(samples)
    for block, part in enumerate(parts):
        for idx in part:
            if not (1 <= idx <= u.n):
                raise ValueError(f"block-local index {idx} outside [1, {u.n}]")
            prod *= batch[:, block, idx - 1]
    mean = float(prod.mean())
    stderr = float(prod.std(ddof=1) / math.sqrt(samples))
    return MomentEstimate(value=mean, stderr=stderr, samples=samples, exact=False)


def duk_moment_bound(ell: int, n: int, k: int, c: float = 100.0) -> float:
    """(c * ell * ln N / N)^(ell (1 - 1/k) / 2), the good-matrix moment
    budget with the universal constant pinned to c."""
    if ell < 1:
        raise ValueError("set size must be positive")
    base = c * ell * math.log(n) / n
    return float(base ** (ell * (1.0 - 1.0 / k) / 2.0))


@dataclass
class MomentAuditReport:
    n: int
    k: int
    constant: float
    rows: list[dict]
    violations: list[dict]

    @property
    def worst_margin(self) -> float:
        """Most negative slack bound - (|value| - 4 stderr); negative
        values are violations."""
        return min((row["margin"] for row in self.rows), default=float("inf"))

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "k": self.k,
                "constant": self.constant,
                "rows": self.rows,
                "violations": self.violations,
            },
            sort_keys=True,
        )


def moment_bound_audit(
    u: OrthogonalMatrix,
    k: int,
    trials: int,
    max_size: int,
    seed: int,
    mc_samples: int = 20_000,
    constant: float = 100.0,
) -> MomentAuditReport:
    """Spot-check |D_hat(S)| against the moment budget on sampled sets.

    Sets mix uniform draws from [kN] with structured singleton chains
    (one index per block), which carry the largest moments and expose
    matrices that are not good (the identity's diagonal chains reach
    |D_hat| = 1).
    """
    if max_size < k:
        raise ValueError("max_size must be at least k")
    rng = derive_rng(seed, "moment-audit", u.n, k, trials, max_size)
    rows: list[dict] = []
    violations: list[dict] = []
    structured = min(trials // 4 + 1, 50)
    for trial in range(trials):
        if trial < structured:
            # Singleton chain: same or random index in every block.
            if trial % 2 == 0:
                idx = int(rng.integers(1, u.n + 1))
                parts = [(idx,)] * k
            else:
                parts = [(int(rng.integers(1, u.n + 1)),) for _ in range(k)]
            size = k
        else:
            size = int(rng.integers(k, max_size + 1))
            global_set = rng.choice(k * u.n, size=size, replace=False) + 1
            parts = split_global_set([int(g) for g in global_set], k, u.n)
        est = d_hat_product(
            u, parts, samples=mc_samples, seed=sub_seed(seed, "audit", trial)
        )
        bound = duk_moment_bound(size, u.n, k, constant)
        margin = bound - (abs(est.value) - 4.0 * est.stderr)
        row = {
            "S": [list(p) for p in parts],
            "size": size,
            "estimate": est.value,
            "stderr": est.stderr,
            "exact": est.exact,
            "bound": bound,
            "margin": margin,
        }
        rows.append(row)
        if margin < 0:
            violations.append(row)
    return MomentAuditReport(
        n=u.n, k=k, constant=constant, rows=rows, violations=violations
    )


# ---------------------------------------------------------------------------
# Max-chain inequality: sum of adjacent maxima dominates (k-1)/k of the sum
# ---------------------------------------------------------------------------

def max_chain_sides(values: Sequence[float]) -> tuple[float, float]:
    a = [float(v) for v in values]
    if len(a) < 2:
        raise ValueError("need at least two values")
    lhs = sum(max(a[i], a[i + 1]) for i in range(len(a) - 1))
    rhs = sum(a) * (len(a) - 1) / len(a)
    return lhs, rhs


def max_chain_inequality(values: Sequence[float]) -> bool:
    lhs, rhs = max_chain_sides(values)
    return lhs >= rhs - 1e-12 * max(1.0, abs(rhs))
