"""Univariate kernels, diagonal bandwidths and the product kernel weight."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import std_normal_cdf

__all__ = [
    "KernelSpec",
    "Bandwidth",
    "kernel_eval",
    "product_kernel_weight",
    "product_kernel_weights",
    "rate_bandwidth",
    "make_kernel",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family. ``kind`` is ``"epanechnikov"`` or ``"tgauss"``.

    The truncated Gaussian is the standard normal density restricted to
    ``|u| <= cutoff`` and rescaled to integrate to one.
    """

    kind: str = "tgauss"
    cutoff: float = 4.0

    def __post_init__(self):
        kind = self.kind.lower()
        if kind in ("gauss", "gaussian", "truncated_gaussian", "truncatedgaussian"):
            kind = "tgauss"
        if kind not in ("epanechnikov", "tgauss"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if not (self.cutoff > 0 and math.isfinite(self.cutoff)):
            raise ValueError("cutoff must be positive and finite")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "cutoff", float(self.cutoff))

    @property
    def support(self) -> float:
        return 1.0 if self.kind == "epanechnikov" else self.cutoff

    @property
    def _norm(self) -> float:
        c = self.cutoff
        return std_normal_cdf(c) - std_normal_cdf(-c)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "epanechnikov":
            out = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
        else:
            out = np.where(np.abs(u) <= self.cutoff,
                           _INV_SQRT_2PI * np.exp(-0.5 * u * u) / self._norm, 0.0)
        return float(out) if out.ndim == 0 else out

    def to_dict(self):
        return {"kind": self.kind, "cutoff": self.cutoff}


def make_kernel(kernel="tgauss", cutoff=4.0) -> KernelSpec:
    if isinstance(kernel, KernelSpec):
        return kernel
    return KernelSpec(kernel, cutoff)


@dataclass(frozen=True, eq=False)
class Bandwidth:
    """Diagonal bandwidth matrix stored as its diagonal."""

    diag: np.ndarray

    def __post_init__(self):
        h = np.atleast_1d(np.array(self.diag, dtype=float)).ravel()
        if h.size < 1 or not np.all(np.isfinite(h)) or np.any(h <= 0):
            raise ValueError(f"bandwidth entries must be positive and finite, got {h}")
        h.setflags(write=False)
        object.__setattr__(self, "diag", h)

    @property
    def d(self) -> int:
        return self.diag.shape[0]

    def scaled(self, factor) -> "Bandwidth":
        return Bandwidth(self.diag * factor)

    def __eq__(self, other):
        return isinstance(other, Bandwidth) and np.array_equal(self.diag, other.diag)

    def __hash__(self):
        return hash(self.diag.tobytes())

    def __repr__(self):
        return f"Bandwidth({self.diag.tolist()})"


def kernel_eval(spec: KernelSpec, u):
    return spec(u)


def product_kernel_weight(spec: KernelSpec, H: Bandwidth, delta) -> float:
    """``prod_i K(delta_i / h_i) / h_i`` for a single offset vector."""
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    if delta.shape[0] != H.d:
        raise ValueError("offset and bandwidth dimensions differ")
    return float(np.prod(spec(delta / H.diag) / H.diag))


def product_kernel_weights(spec: KernelSpec, H: Bandwidth, points, u) -> np.ndarray:
    """Kernel weights of every row of ``points`` (n, d) relative to ``u``.

    ``u`` may also be (m, d), in which case an (m, n) matrix is returned.
    """
    points = np.asarray(points, dtype=float)
    u = np.asarray(u, dtype=float)
    h = H.diag
    if u.ndim == 1:
        z = (points - u) / h
        return np.prod(spec(z) / h, axis=1)
    z = (points[None, :, :] - u[:, None, :]) / h
    return np.prod(spec(z) / h, axis=2)


def rate_bandwidth(n, p, d, scale=1.0) -> Bandwidth:
    """Bandwidth with every entry ``scale * (log p / n) ** (1 / (4 + d))``."""
    if n < 2 or p < 2:
        raise ValueError("rate_bandwidth needs n >= 2 and p >= 2")
    if not scale > 0:
        raise ValueError("scale must be positive")
    h = scale * (math.log(p) / n) ** (1.0 / (4 + d))
    return Bandwidth(np.full(d, h))
