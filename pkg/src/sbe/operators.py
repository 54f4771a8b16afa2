"""Discrete Laplacian, derivative and twisted product, plus the DFT layer.

All three operators act on periodic fields through the family's atomic
measures:

    lap u(x)  = 1/(2 nu_bar eps^2) * sum_j nu(j)  u(x + eps j)
    der u(x)  = 1/eps              * sum_j pi(j)  u(x + eps j)
    B(f,g)(x) =                      sum_{j1,j2} mu(j1,j2) f(x+eps j1) g(x+eps j2)

The DFT convention carries the eps weight on the forward transform,
F u(k) = eps * sum_x u(x) e^{-2 pi i k x}, with the inverse being the plain
mode sum; on the torus the modes are the integers in [-M/2, M/2). Twisted
Parseval: eps * sum_x B(f,g) = sum_k F f(k) F g(-k) mu_hat(-eps k, eps k).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .measures import (
    AtomicMeasure1D,
    AtomicMeasure2D,
    fourier_mu,
    fourier_nu,
    fourier_pi,
    validate_mu,
    validate_nu,
    validate_pi,
)

__all__ = [
    "OperatorFamily",
    "laplacian",
    "derivative",
    "twisted_product",
    "dft",
    "idft",
    "modes",
    "laplacian_multiplier",
    "derivative_multiplier",
    "check_parseval_twisted",
    "FFT_THRESHOLD",
]

# Stencil evaluation below, spectral convolution at or above this M.
FFT_THRESHOLD = 128


@dataclass(frozen=True)
class OperatorFamily:
    """Validated (nu, pi, mu) triple with the total variation nu_bar cached."""

    nu: AtomicMeasure1D
    pi: AtomicMeasure1D
    mu: AtomicMeasure2D
    nu_bar: float = 0.0

    def __post_init__(self):
        problems = []
        for label, report in (
            ("nu", validate_nu(self.nu)),
            ("pi", validate_pi(self.pi)),
            ("mu", validate_mu(self.mu)),
        ):
            problems += [f"{label}.{v.check}={v.measured:g}" for v in report.violations]
        if problems:
            raise ValueError("inadmissible family: " + "; ".join(problems))
        object.__setattr__(self, "nu_bar", self.nu.total_variation())

    def fingerprint(self) -> str:
        blob = "|".join([self.nu.canonical(), self.pi.canonical(), self.mu.canonical()])
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _check_support(measure_radius: int, M: int):
    if measure_radius >= M / 2:
        raise ValueError(f"measure radius {measure_radius} wraps on M={M} torus")


def _stencil_apply(offsets, weights, u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u, dtype=np.float64)
    for j, w in zip(offsets, weights):
        out += w * np.roll(u, -int(j), axis=-1)
    return out


def modes(M: int) -> np.ndarray:
    """Integer torus frequencies in FFT order: 0..M/2-1, -M/2..-1."""
    return np.rint(np.fft.fftfreq(M) * M).astype(np.int64)


def dft(u: np.ndarray, eps: float) -> np.ndarray:
    """Forward transform with the eps weight, acting on the last axis."""
    return eps * np.fft.fft(u, axis=-1)


def idft(spectrum: np.ndarray, eps: float) -> np.ndarray:
    """Mode-sum inverse; returns a complex array (round trip <= 1e-12)."""
    return np.fft.ifft(spectrum, axis=-1) / eps


def laplacian_multiplier(fam: OperatorFamily, eps: float, M: int) -> np.ndarray:
    """Eigenvalues nu_hat(eps k) / (2 nu_bar eps^2) over FFT-ordered modes."""
    k = modes(M)
    return fourier_nu(fam.nu, eps * k) / (2.0 * fam.nu_bar * eps**2)


def derivative_multiplier(fam: OperatorFamily, eps: float, M: int) -> np.ndarray:
    """Eigenvalues pi_hat(-eps k) / eps over FFT-ordered modes."""
    k = modes(M)
    return fourier_pi(fam.pi, -eps * k) / eps


def _convolve(fam_measure, coeff: float, u: np.ndarray, eps: float, multiplier, method: str) -> np.ndarray:
    M = u.shape[-1]
    _check_support(max(abs(int(j)) for j in fam_measure.offsets), M)
    if method == "auto":
        method = "spectral" if M >= FFT_THRESHOLD else "stencil"
    if method == "stencil":
        return coeff * _stencil_apply(fam_measure.offsets, fam_measure.weights, u)
    if method == "spectral":
        return np.fft.ifft(multiplier * np.fft.fft(u, axis=-1), axis=-1).real
    raise ValueError(f"unknown method {method!r}")


def laplacian(fam: OperatorFamily, u: np.ndarray, eps: float, method: str = "auto") -> np.ndarray:
    """Periodic discrete Laplacian of one slice (or along the last axis)."""
    u = np.asarray(u, dtype=np.float64)
    mult = laplacian_multiplier(fam, eps, u.shape[-1]) if method != "stencil" else None
    return _convolve(fam.nu, 1.0 / (2.0 * fam.nu_bar * eps**2), u, eps, mult, method)


def derivative(fam: OperatorFamily, u: np.ndarray, eps: float, method: str = "auto") -> np.ndarray:
    """Periodic discrete derivative; output has exact zero spatial mean."""
    u = np.asarray(u, dtype=np.float64)
    mult = derivative_multiplier(fam, eps, u.shape[-1]) if method != "stencil" else None
    return _convolve(fam.pi, 1.0 / eps, u, eps, mult, method)


def twisted_product(fam: OperatorFamily, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """B(f, g) under mu; bilinear, symmetric when mu is exchange-symmetric."""
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape != g.shape:
        raise ValueError("twisted product needs matching shapes")
    M = f.shape[-1]
    _check_support(fam.mu.radius, M)
    out = np.zeros_like(f)
    # Group atoms by the first offset so each roll of f is reused.
    by_j1: dict[int, list[tuple[int, float]]] = {}
    for (j1, j2), w in fam.mu.atoms:
        by_j1.setdefault(j1, []).append((j2, w))
    for j1, pairs in by_j1.items():
        acc = np.zeros_like(g)
        for j2, w in pairs:
            acc += w * np.roll(g, -j2, axis=-1)
        out += np.roll(f, -j1, axis=-1) * acc
    return out


def check_parseval_twisted(fam: OperatorFamily, f: np.ndarray, g: np.ndarray, eps: float) -> float:
    """Residual of the twisted Parseval identity (torus mode sum form)."""
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    M = f.shape[-1]
    lhs = eps * np.sum(twisted_product(fam, f, g))
    Ff = dft(f, eps)
    Fg = dft(g, eps)
    k = modes(M)
    Fg_neg = Fg[(-k) % M]
    mu_hat = fourier_mu(fam.mu, -eps * k, eps * k)
    rhs = np.sum(Ff * Fg_neg * mu_hat)
    return float(abs(lhs - rhs))
