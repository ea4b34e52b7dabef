"""Measured constants of the functional inequalities used in the energy method.

Each probe draws seeded random band-limited fields, evaluates both sides of
one inequality and reports the ratio ``lhs / rhs``.  The constants hidden in
the ``<~`` of the analysis are unspecified, so nothing here asserts a bound:
the report archives the observed maximum for regression tracking.

Derivatives of integer order are measured as the pointwise magnitude of the
full derivative tensor, ``|nabla^m f| = (sum_beta |d^beta f|^2)^(1/2)`` over
ordered multi-indices; fractional orders use ``|Lambda^s f|``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InputError, InvalidExponents, NonFiniteData
from .grid import make_grid, random_field
from .norms import lambda_norm, lp_norm

__all__ = ["InequalityReport", "inequality_lab", "INEQUALITIES"]

_EPS = 1e-12


@dataclass
class InequalityReport:
    id: str
    trials: int
    seed: int
    max_ratio: float
    mean_ratio: float
    exponents: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise InputError("an inequality report needs at least one trial")
        if not np.isfinite(self.max_ratio):
            raise NonFiniteData(f"{self.id}: non-finite sampled ratio")

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def _inv(p):
    return 0.0 if np.isinf(p) else 1.0 / p


def _close(a, b):
    return abs(a - b) <= 1e-12


def _deriv_field(grid, c, order):
    """Pointwise ``|nabla^order f|`` from coefficients ``c``."""
    if order == 0:
        return np.abs(grid.inv(c))
    if float(order).is_integer():
        total = np.zeros(grid.shape)
        for beta in itertools.product(range(grid.dim), repeat=int(order)):
            mult = 1.0
            for axis in beta:
                mult = mult * (1j * grid.kd[axis])
            total += grid.inv(mult * c) ** 2
        return np.sqrt(total)
    return np.abs(grid.inv(c * grid.lambda_multiplier(order)))


def _commutator_field(grid, f, g, order):
    """Pointwise ``|nabla^m (f g) - f nabla^m g|`` (``Lambda`` for fractional m)."""
    cfg = grid.fwd(f * g)
    cg = grid.fwd(g)
    if float(order).is_integer():
        total = np.zeros(grid.shape)
        for beta in itertools.product(range(grid.dim), repeat=int(order)):
            mult = 1.0
            for axis in beta:
                mult = mult * (1j * grid.kd[axis])
            total += (grid.inv(mult * cfg) - f * grid.inv(mult * cg)) ** 2
        return np.sqrt(total)
    mult = grid.lambda_multiplier(order)
    return np.abs(grid.inv(mult * cfg) - f * grid.inv(mult * cg))


def _lp(grid, f, p):
    return lp_norm(grid, f, p)


def _ratio(lhs, rhs):
    if rhs > 0:
        return lhs / rhs
    return 0.0 if lhs <= _EPS else float("inf")


# -- exponent validation ---------------------------------------------------


def _gn_exponents(d, alpha=1, m=0, l=2, p=2.0, q=2.0, r=2.0, theta=None):
    if not (0 <= m <= l and 0 <= alpha <= l):
        raise InvalidExponents(f"need 0 <= m, alpha <= l, got m={m}, alpha={alpha}, l={l}")
    lhs = alpha / d - _inv(p)
    a, b = m / d - _inv(q), l / d - _inv(r)
    if theta is None:
        if _close(a, b):
            raise InvalidExponents("scaling relation does not determine theta")
        theta = (lhs - a) / (b - a)
    if not -1e-12 <= theta <= 1 + 1e-12:
        raise InvalidExponents(f"theta must lie in [0, 1], got {theta}")
    if not _close(lhs, a * (1 - theta) + b * theta):
        raise InvalidExponents("Gagliardo-Nirenberg scaling relation violated")
    if np.isinf(p) and not 0 < theta < 1:
        raise InvalidExponents("p = inf requires 0 < theta < 1")
    return dict(alpha=alpha, m=m, l=l, p=p, q=q, r=r, theta=theta)


def _holder_split(p, a, b, names):
    if not _close(_inv(p), _inv(a) + _inv(b)):
        raise InvalidExponents(f"1/p = 1/{names[0]} + 1/{names[1]} violated")


def _kp_exponents(d, s=1.0, p=2.0, p1=float("inf"), p2=2.0, q1=4.0, q2=4.0, variant="K-2"):
    if s <= 0:
        raise InvalidExponents(f"need s > 0, got {s}")
    if variant not in ("K-1", "K-2"):
        raise InvalidExponents(f"unknown Kato-Ponce variant {variant!r}")
    for name, val in (("p", p), ("p2", p2), ("q2", q2)):
        if not 1 < val < np.inf:
            raise InvalidExponents(f"{name} must lie in (1, inf), got {val}")
    _holder_split(p, p1, p2, ("p1", "p2"))
    _holder_split(p, q1, q2, ("q1", "q2"))
    return dict(s=s, p=p, p1=p1, p2=p2, q1=q1, q2=q2, variant=variant)


def _comm_exponents(d, m=1, p=2.0, p1=float("inf"), p2=2.0, p3=2.0, p4=float("inf")):
    if m < 1 or m != int(m):
        raise InvalidExponents(f"commutator order must be an integer >= 1, got {m}")
    for name, val in (("p", p), ("p2", p2), ("p3", p3)):
        if not 1 < val < np.inf:
            raise InvalidExponents(f"{name} must lie in (1, inf), got {val}")
    _holder_split(p, p1, p2, ("p1", "p2"))
    _holder_split(p, p3, p4, ("p3", "p4"))
    return dict(m=int(m), p=p, p1=p1, p2=p2, p3=p3, p4=p4)


def _hls_exponents(d, s=0.5, p=None):
    if not 0 <= s < d / 2:
        raise InvalidExponents(f"need 0 <= s < d/2, got {s}")
    if p is None:
        p = 1.0 / (0.5 + s / d)
    if not 1 < p <= 2:
        raise InvalidExponents(f"need p in (1, 2], got {p}")
    if not _close(0.5 + s / d, 1.0 / p):
        raise InvalidExponents("1/2 + s/d = 1/p violated")
    return dict(s=s, p=p)


_COMPOSITIONS = {
    "h": lambda r: r / (r + 1.0),
    "phi": lambda r: 1.0 / (r + 1.0),
    "varphi": lambda r: r * (r + 2.0) / (r + 1.0) ** 2,
}


def _comp_exponents(d, m=1, p=2.0, function="h", sup=0.5):
    if m < 1 or m != int(m):
        raise InvalidExponents(f"derivative order must be an integer >= 1, got {m}")
    if not p > 1:
        raise InvalidExponents(f"need p > 1, got {p}")
    if function not in _COMPOSITIONS:
        raise InvalidExponents(f"unknown composition function {function!r}")
    if not 0 < sup <= 1:
        raise InvalidExponents(f"need 0 < sup|rho| <= 1, got {sup}")
    return dict(m=int(m), p=p, function=function, sup=sup)


# -- probes -----------------------------------------------------------------


def _probe_gn(grid, rng, e):
    c = grid.fwd(random_field(grid, rng))
    lhs = _lp(grid, _deriv_field(grid, c, e["alpha"]), e["p"])
    low = _lp(grid, _deriv_field(grid, c, e["m"]), e["q"])
    high = _lp(grid, _deriv_field(grid, c, e["l"]), e["r"])
    return _ratio(lhs, low ** (1 - e["theta"]) * high ** e["theta"])


def _probe_kp(grid, rng, e):
    f = random_field(grid, rng, zero_mean=False)
    g = random_field(grid, rng, zero_mean=False)
    return _kp_ratio(grid, f, g, e)


def _kp_ratio(grid, f, g, e):
    s = e["s"]
    cf, cg = grid.fwd(f), grid.fwd(g)
    if e["variant"] == "K-2":
        lhs = _lp(grid, _deriv_field(grid, grid.fwd(f * g), s), e["p"])
        rhs = _lp(grid, np.abs(f), e["p1"]) * _lp(grid, _deriv_field(grid, cg, s), e["p2"])
    else:
        lhs = _lp(grid, _commutator_field(grid, f, g, s), e["p"])
        rhs = _lp(grid, _deriv_field(grid, cf, 1), e["p1"]) * _lp(
            grid, _deriv_field(grid, cg, s - 1), e["p2"]
        )
    rhs += _lp(grid, _deriv_field(grid, cf, s), e["q1"]) * _lp(grid, np.abs(g), e["q2"])
    return _ratio(lhs, rhs)


def _probe_comm(grid, rng, e):
    f = random_field(grid, rng, zero_mean=False)
    g = random_field(grid, rng, zero_mean=False)
    return _comm_ratio(grid, f, g, e)


def _comm_ratio(grid, f, g, e):
    m = e["m"]
    cf, cg = grid.fwd(f), grid.fwd(g)
    lhs = _lp(grid, _commutator_field(grid, f, g, m), e["p"])
    rhs = _lp(grid, _deriv_field(grid, cf, 1), e["p1"]) * _lp(grid, _deriv_field(grid, cg, m - 1), e["p2"])
    rhs += _lp(grid, _deriv_field(grid, cf, m), e["p3"]) * _lp(grid, np.abs(g), e["p4"])
    return _ratio(lhs, rhs)


def _probe_hls(grid, rng, e):
    f = random_field(grid, rng)
    return _ratio(lambda_norm(grid, f, -e["s"]), _lp(grid, f, e["p"]))


def _probe_comp(grid, rng, e):
    rho = random_field(grid, rng)
    rho *= e["sup"] / np.max(np.abs(rho))
    return _comp_ratio(grid, rho, e)


def _comp_ratio(grid, rho, e):
    fun = _COMPOSITIONS[e["function"]]
    lhs = _lp(grid, _deriv_field(grid, grid.fwd(fun(rho)), e["m"]), e["p"])
    rhs = _lp(grid, _deriv_field(grid, grid.fwd(rho), e["m"]), e["p"])
    return _ratio(lhs, rhs)


INEQUALITIES = {
    "GN": (_gn_exponents, _probe_gn),
    "KatoPonce": (_kp_exponents, _probe_kp),
    "Commutator": (_comm_exponents, _probe_comm),
    "HLS": (_hls_exponents, _probe_hls),
    "Composition": (_comp_exponents, _probe_comp),
}


def validate_exponents(ineq, dim, **exponents):
    """Fill in defaults and check the admissibility relations of ``ineq``."""
    try:
        check, _ = INEQUALITIES[ineq]
    except KeyError:
        raise InputError(f"unknown inequality {ineq!r}; choose from {sorted(INEQUALITIES)}") from None
    return check(dim, **exponents)


def inequality_lab(ineq, trials=100, seed=0, grid=None, **exponents):
    """Sample ``lhs / rhs`` of one inequality over ``trials`` random fields.

    ``grid`` defaults to ``16^3`` points on ``[0, 2 pi)^3``.  Extra keyword
    arguments override the default exponents of the chosen inequality; an
    inadmissible combination raises :class:`InvalidExponents`.
    """
    if trials < 1:
        raise InputError("trials must be >= 1")
    if grid is None:
        grid = make_grid(3, [16] * 3, [2 * np.pi] * 3)
    e = validate_exponents(ineq, grid.dim, **exponents)
    probe = INEQUALITIES[ineq][1]
    rng = np.random.default_rng(seed)
    ratios = np.array([probe(grid, rng, e) for _ in range(trials)])
    return InequalityReport(
        id=ineq,
        trials=trials,
        seed=seed,
        max_ratio=float(np.max(ratios)),
        mean_ratio=float(np.mean(ratios)),
        exponents={k: (v if not (isinstance(v, float) and np.isinf(v)) else "inf") for k, v in e.items()},
    )
