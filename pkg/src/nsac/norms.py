"""Sobolev, negative-Sobolev and Lebesgue norms on periodic grids.

All ``L^2``-type norms are evaluated on the Fourier side, ``||Lambda^l f||``
standing in for ``||nabla^l f||``; ``L^p`` norms use the rectangle rule, which
is exact for trigonometric integrands of degree below the grid size.
Scalar fields have shape ``grid.shape``; vector fields ``(d, *grid.shape)``
and their norms combine components in ``l^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = [
    "NormSpec",
    "lambda_norm",
    "sobolev_norm",
    "neg_sobolev_norm",
    "lp_norm",
    "interpolation_check",
]

KINDS = ("L2", "Lp", "Hk", "HomHs", "GradL2")
TARGETS = ("rho", "u", "chi", "gradchi")


@dataclass(frozen=True)
class NormSpec:
    """A norm applied to one unknown.

    ``param`` is ``p`` for ``Lp`` (``inf`` allowed), ``k`` for ``Hk``, ``s``
    for ``HomHs`` (the norm of ``Lambda^{-s} f``) and ``l`` for ``GradL2``.
    """

    kind: str
    target: str
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown norm kind {self.kind!r}")
        if self.target not in TARGETS:
            raise InputError(f"unknown norm target {self.target!r}")
        p = self.param
        if self.kind == "Lp" and not p > 1:
            raise InputError(f"Lp needs p in (1, inf], got {p}")
        if self.kind in ("Hk", "GradL2") and (p < 0 or p != int(p)):
            raise InputError(f"{self.kind} needs a nonnegative integer order, got {p}")
        if self.kind == "HomHs" and not 0 <= p < 1.5:
            raise InputError(f"HomHs needs s in [0, 1.5), got {p}")

    @property
    def id(self):
        if self.kind == "L2":
            tag = "L2"
        elif self.kind == "Lp":
            tag = "Linf" if np.isinf(self.param) else f"L{self.param:g}"
        elif self.kind == "Hk":
            tag = f"H{int(self.param)}"
        elif self.kind == "HomHs":
            tag = f"Hneg{self.param:g}"
        else:
            tag = f"grad{int(self.param)}"
        return f"{tag}:{self.target}"

    @classmethod
    def parse(cls, text):
        """Inverse of :attr:`id`, e.g. ``"Hneg0.5:u"`` or ``"H3:rho"``."""
        try:
            tag, target = text.split(":")
        except ValueError:
            raise InputError(f"bad norm id {text!r}") from None
        if tag == "L2":
            return cls("L2", target)
        if tag == "Linf":
            return cls("Lp", target, float("inf"))
        if tag.startswith("Hneg"):
            return cls("HomHs", target, float(tag[4:]))
        if tag.startswith("grad"):
            return cls("GradL2", target, int(tag[4:]))
        if tag.startswith("H"):
            return cls("Hk", target, int(tag[1:]))
        if tag.startswith("L"):
            return cls("Lp", target, float(tag[1:]))
        raise InputError(f"bad norm id {text!r}")


def lambda_norm(grid, f, s, spectral=False):
    """``||Lambda^s f||_{L^2}``; ``f`` may be given by its coefficients."""
    c = f if spectral else grid.forward(f)
    if s < 0:
        c = grid.apply_lambda(c, s)
        return np.sqrt(grid.l2sq(c))
    return np.sqrt(grid.l2sq(c * grid.lambda_multiplier(s)))


def sobolev_norm(grid, f, k, spectral=False):
    """``(sum_{l<=k} ||Lambda^l f||^2)^(1/2)``."""
    if k < 0 or k != int(k):
        raise InputError(f"Sobolev order must be a nonnegative integer, got {k}")
    c = f if spectral else grid.forward(f)
    weight = sum(grid.k2**l for l in range(int(k) + 1))
    return np.sqrt(grid.l2sq(c * np.sqrt(weight)))


def neg_sobolev_norm(grid, f, s, spectral=False):
    """``||f||_{H^{-s}}`` (homogeneous), i.e. ``||Lambda^{-s} f||``; needs zero mean."""
    if not 0 < s < 1.5:
        raise InputError(f"negative Sobolev index must lie in (0, 1.5), got {s}")
    return lambda_norm(grid, f, -s, spectral=spectral)


def lp_norm(grid, f, p):
    f = grid.check_real(f)
    if f.ndim > grid.dim:
        f = np.sqrt(np.sum(f**2, axis=0))
    if np.isinf(p):
        return float(np.max(np.abs(f)))
    if not p > 1:
        raise InputError(f"p must lie in (1, inf], got {p}")
    return float((np.sum(np.abs(f) ** p) * grid.cell_volume) ** (1.0 / p))


def interpolation_check(grid, f, l, k, s, spectral=False):
    """Both sides of ``||Lambda^l f|| <= ||Lambda^{l+k} f||^(1-t) ||Lambda^{-s} f||^t``.

    ``t = k / (l + k + s)``.  On a grid this is Hoelder's inequality for the
    weighted coefficient sums, so the constant is exactly one.  Returns
    ``(lhs, rhs, lhs / rhs)``; a vanishing field gives ``(0, 0, 0)``.
    """
    if l < 0 or k < 1 or s < 0:
        raise InputError(f"need l >= 0, k >= 1, s >= 0, got {(l, k, s)}")
    c = f if spectral else grid.forward(f)
    theta = k / (l + k + s)
    lhs = lambda_norm(grid, c, l, spectral=True)
    top = lambda_norm(grid, c, l + k, spectral=True)
    bottom = lambda_norm(grid, c, -s, spectral=True)
    rhs = top ** (1 - theta) * bottom**theta
    if rhs == 0.0:
        return 0.0, 0.0, 0.0
    return lhs, rhs, lhs / rhs
