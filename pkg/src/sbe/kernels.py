"""Discrete singular-kernel calculus diagnostics.

A kernel is a field on the space-time grid supported near the origin (time
rows n = 0.. are t = n eps^2; space is the torus with signed coordinates).
Its order-zeta norm takes forward differences in space and time,

    max_{|k|_s <= m} sup_z |Dbar^k K(z)| / |z|_{s,eps}^(zeta - |k|_s),

with |z|_{s,eps} = (sqrt(t) v |x|) v eps and |k|_s = 2 k0 + k1. Stability
of the value across N certifies the claimed order empirically. Twisted
products act slice-wise; convolutions are eps^3-weighted space-time sums,
linear in time and circular in space. The renormalized convolution pairs
the first kernel against increments, which is the plain convolution minus
the kernel mass times the second factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import GridSpec, rng_for, bump
from .heat import signed_torus_coordinate
from .measures import AtomicMeasure2D
from .operators import twisted_product, OperatorFamily

__all__ = [
    "DiscreteKernel",
    "order_norm",
    "kernel_mass",
    "twisted_kernel_product",
    "convolve_kernels",
    "renormalized_convolve",
    "increment_bound_probe",
    "mollification_loss_probe",
]

SPACE_TIME_DIM = 3  # |s| = 2 + 1 for parabolic scaling


@dataclass(frozen=True)
class DiscreteKernel:
    """Kernel values on rows t = 0, eps^2, ... with a claimed order."""

    values: np.ndarray
    grid: GridSpec
    claimed_order: float

    def __post_init__(self):
        v = np.atleast_2d(self.values)
        if v.shape[1] != self.grid.M:
            raise ValueError("kernel width disagrees with grid")
        object.__setattr__(self, "values", v)


def _znorm_eps(n_rows: int, grid: GridSpec) -> np.ndarray:
    t = np.arange(n_rows)[:, None] * grid.dt
    x = signed_torus_coordinate(grid.M, grid.eps)[None, :]
    return np.maximum(np.maximum(np.sqrt(t), np.abs(x)), grid.eps)


def _forward_diffs(values: np.ndarray, grid: GridSpec, m: int) -> dict:
    """Forward differences Dbar^(k0,k1) for 2 k0 + k1 <= m, zero-padded in time."""
    out = {(0, 0): values}
    if m >= 1:
        dx = (np.roll(values, -1, axis=1) - values) / grid.eps
        out[(0, 1)] = dx
    if m >= 2:
        out[(0, 2)] = (np.roll(out[(0, 1)], -1, axis=1) - out[(0, 1)]) / grid.eps
        padded = np.vstack([values, np.zeros((1, values.shape[1]))])
        out[(1, 0)] = (padded[1:] - padded[:-1]) / grid.dt
    return out


def order_norm(k: DiscreteKernel, zeta: float, m: int = 0) -> float:
    """Exact maximum of the order-zeta ratios up to derivative depth m <= 2."""
    if m > 2:
        raise ValueError("derivative depth capped at 2")
    zn = _znorm_eps(k.values.shape[0], k.grid)
    best = 0.0
    for (k0, k1), arr in _forward_diffs(k.values, k.grid, m).items():
        order = 2 * k0 + k1
        if order > m:
            continue
        best = max(best, float(np.max(np.abs(arr) / zn ** (zeta - order))))
    return best


def kernel_mass(k: DiscreteKernel) -> float:
    return float(k.grid.eps**3 * np.sum(k.values))


def _pad_match(a: np.ndarray, b: np.ndarray):
    rows = max(a.shape[0], b.shape[0])
    pa = np.zeros((rows, a.shape[1]))
    pb = np.zeros((rows, b.shape[1]))
    pa[: a.shape[0]] = a
    pb[: b.shape[0]] = b
    return pa, pb


def twisted_kernel_product(k1: DiscreteKernel, k2: DiscreteKernel, mu) -> DiscreteKernel:
    """Slice-wise twisted product; claimed order adds."""
    if k1.grid != k2.grid:
        raise ValueError("kernels live on different grids")
    fam = mu if isinstance(mu, OperatorFamily) else _product_only_family(mu)
    a, b = _pad_match(k1.values, k2.values)
    vals = twisted_product(fam, a, b)
    return DiscreteKernel(values=vals, grid=k1.grid, claimed_order=k1.claimed_order + k2.claimed_order)


def _product_only_family(mu: AtomicMeasure2D) -> OperatorFamily:
    from .measures import preset_measure

    return OperatorFamily(nu=preset_measure("laplacian-nn"), pi=preset_measure("deriv-backward"), mu=mu)


def _spacetime_convolve(a: np.ndarray, b: np.ndarray, grid: GridSpec) -> np.ndarray:
    n1, n2 = a.shape[0], b.shape[0]
    L = 1
    while L < n1 + n2:
        L *= 2
    fa = np.fft.fft(np.fft.fft(a, axis=1), n=L, axis=0)
    fb = np.fft.fft(np.fft.fft(b, axis=1), n=L, axis=0)
    full = np.fft.ifft(np.fft.ifft(fa * fb, axis=0), axis=1).real
    return grid.eps**3 * full[: n1 + n2 - 1]


def convolve_kernels(k1: DiscreteKernel, k2: DiscreteKernel) -> DiscreteKernel:
    """eps^3-weighted space-time convolution; claimed order gains |s| = 3."""
    if k1.grid != k2.grid:
        raise ValueError("kernels live on different grids")
    vals = _spacetime_convolve(k1.values, k2.values, k1.grid)
    return DiscreteKernel(values=vals, grid=k1.grid, claimed_order=k1.claimed_order + k2.claimed_order + SPACE_TIME_DIM)


def renormalized_convolve(k1: DiscreteKernel, k2: DiscreteKernel) -> DiscreteKernel:
    """(R K1 * K2)(z) = eps^3 sum_w K1(w) (K2(z - w) - K2(z)).

    Admissible only on the lemma's order window: zeta1 in (-4, -3] and
    zeta2 in (-6 - zeta1, 0].
    """
    z1, z2 = k1.claimed_order, k2.claimed_order
    if not (-SPACE_TIME_DIM - 1 < z1 <= -SPACE_TIME_DIM):
        raise ValueError(f"zeta1={z1} outside (-4, -3]")
    if not (-2 * SPACE_TIME_DIM - z1 < z2 <= 0.0):
        raise ValueError(f"zeta2={z2} outside ({-2 * SPACE_TIME_DIM - z1}, 0]")
    if k1.grid != k2.grid:
        raise ValueError("kernels live on different grids")
    conv = _spacetime_convolve(k1.values, k2.values, k1.grid)
    embedded = np.zeros_like(conv)
    embedded[: k2.values.shape[0]] = k2.values
    vals = conv - kernel_mass(k1) * embedded
    return DiscreteKernel(values=vals, grid=k1.grid, claimed_order=z1 + z2 + SPACE_TIME_DIM)


def increment_bound_probe(k: DiscreteKernel, kappa: float, n_pairs: int = 4096, seed: int = 0) -> float:
    """Empirical sup of |K(z) - K(zbar)| / (|z-zbar|^kappa (|z|^(z-k) + |zbar|^(z-k))).

    Sampled over seeded random grid pairs; kappa = 0 collapses to the
    triangle-inequality consequence of the order norm.
    """
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must lie in [0, 1]")
    grid = k.grid
    nt, M = k.values.shape
    gen = rng_for(seed, 90)
    zeta = k.claimed_order
    zn = _znorm_eps(nt, grid)
    i1 = gen.integers(0, nt, n_pairs)
    j1 = gen.integers(0, M, n_pairs)
    i2 = gen.integers(0, nt, n_pairs)
    j2 = gen.integers(0, M, n_pairs)
    same = (i1 == i2) & (j1 == j2)
    i2[same] = (i2[same] + 1) % nt
    num = np.abs(k.values[i1, j1] - k.values[i2, j2])
    dt_gap = np.abs(i1 - i2) * grid.dt
    dx_gap = np.abs(signed_torus_coordinate(M, grid.eps)[(j1 - j2) % M])
    sep = np.maximum(np.maximum(np.sqrt(dt_gap), dx_gap), grid.eps)
    denom = sep**kappa * (zn[i1, j1] ** (zeta - kappa) + zn[i2, j2] ** (zeta - kappa))
    return float(np.max(num / denom))


def mollification_loss_probe(k: DiscreteKernel, eps_bar_cells: int, kappa: float, m: int = 0) -> float:
    """order_norm(K - K_mollified, zeta - kappa, m) / eps_bar^kappa.

    The mollifier is the parabolic rescaling of the smooth bump to
    eps_bar = eps_bar_cells * eps, sampled on the grid with discrete mass
    one; boundedness across eps_bar values certifies the smoothing loss
    bound.
    """
    if eps_bar_cells < 1:
        raise ValueError("eps_bar must be at least one cell")
    grid = k.grid
    rt, rs = eps_bar_cells**2, eps_bar_cells
    it = np.arange(-rt, rt + 1)
    ix = np.arange(-rs, rs + 1)
    wt = bump(it / float(rt)) if rt > 1 else np.array([1.0])
    wx = bump(ix / float(rs)) if rs > 1 else np.array([1.0])
    w = np.outer(wt, wx)
    w /= grid.eps**3 * w.sum()
    nt, M = k.values.shape
    half_t = (len(wt) - 1) // 2
    padded = np.zeros((nt + 2 * half_t, M))
    padded[half_t : half_t + nt] = k.values
    out = np.zeros_like(k.values)
    for a in range(len(wt)):
        # row n of the shift holds K at time index n - (a - half_t)
        shifted = padded[2 * half_t - a : 2 * half_t - a + nt]
        for b in range(len(wx)):
            out += w[a, b] * np.roll(shifted, b - rs, axis=1)
    mollified = grid.eps**3 * out
    diff = DiscreteKernel(values=k.values - mollified, grid=grid, claimed_order=k.claimed_order - kappa)
    eps_bar = eps_bar_cells * grid.eps
    return order_norm(diff, k.claimed_order - kappa, m) / eps_bar**kappa
