"""Binary checkpoints with bit-exact round trips.

Layout (all little-endian)::

    magic      4 bytes  b"NSAC"
    version    u32      FORMAT_VERSION
    dim        u32
    sizes      dim x u32
    lengths    dim x f64
    t          f64
    step       u64      fixed steps taken (restarts recompute t = base + step dt)
    formulation u32     0 perturbation, 1 conservative
    params     7 x f64  mu, lam, gamma, ell, pressure_scale, vacuum_floor, smallness_delta
    levels     u32      1, or 2 when the previous step is stored for BDF2
    t_prev     f64      only when levels = 2: time of the previous level
    payload    levels x (d + 2) x prod(sizes) x f64, row-major, each level in
               order (rho, u_1..u_d, chi) or (rho, m_1..m_d, rho chi); the
               current level comes first
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import FormatError
from .grid import Grid
from .model import CONSERVATIVE, PERTURBATION, ModelParams, State

__all__ = ["save", "load", "FORMAT_VERSION", "Checkpoint"]

MAGIC = b"NSAC"
FORMAT_VERSION = 1
_FORMS = {PERTURBATION: 0, CONSERVATIVE: 1}
_PARAMS = ("mu", "lam", "gamma", "ell", "pressure_scale", "vacuum_floor", "smallness_delta")


class Checkpoint:
    """Loaded checkpoint: current state, optional previous state and parameters."""

    def __init__(self, state, params, previous=None):
        self.state = state
        self.params = params
        self.previous = previous


def _pack_state(state):
    return b"".join(np.ascontiguousarray(f, dtype="<f8").tobytes() for f in state.fields())


def save(state, path, params, previous=None):
    """Write ``state`` (and the BDF2 history level ``previous``) to ``path``."""
    g = state.grid
    levels = [state] if previous is None else [state, previous]
    header = [MAGIC, struct.pack("<II", FORMAT_VERSION, g.dim)]
    header.append(struct.pack(f"<{g.dim}I", *g.sizes))
    header.append(struct.pack(f"<{g.dim}d", *g.lengths))
    header.append(struct.pack("<dQI", float(state.t), int(state.step), _FORMS[state.formulation]))
    header.append(struct.pack("<7d", *(float(getattr(params, k)) for k in _PARAMS)))
    header.append(struct.pack("<I", len(levels)))
    if previous is not None:
        header.append(struct.pack("<d", float(previous.t)))
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(b"".join(header))
        for s in levels:
            fh.write(_pack_state(s))
    os.replace(tmp, path)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, fmt):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise FormatError("checkpoint truncated in header")
        out = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return out


def load(path):
    """Read a checkpoint; raises :class:`FormatError` on any inconsistency."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise FormatError("bad magic bytes; not an NSAC checkpoint")
    r = _Reader(data)
    r.pos = 4
    version, dim = r.take("<II")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version} (expected {FORMAT_VERSION})")
    if dim not in (1, 2, 3):
        raise FormatError(f"invalid dimension {dim} in header")
    sizes = r.take(f"<{dim}I")
    lengths = r.take(f"<{dim}d")
    t, step, form = r.take("<dQI")
    values = r.take("<7d")
    (levels,) = r.take("<I")
    if form not in (0, 1):
        raise FormatError(f"unknown formulation tag {form}")
    if levels not in (1, 2):
        raise FormatError(f"invalid level count {levels}")
    times = [t] + ([r.take("<d")[0]] if levels == 2 else [])
    try:
        grid = Grid(dim, sizes, lengths)
        params = ModelParams(**dict(zip(_PARAMS, values)))
    except Exception as exc:  # invalid header contents
        raise FormatError(f"invalid checkpoint header: {exc}") from exc
    npts = grid.npoints
    nfields = dim + 2
    expected = levels * nfields * npts * 8
    payload = data[r.pos :]
    if len(payload) != expected:
        raise FormatError(f"payload has {len(payload)} bytes, header implies {expected}")
    arr = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape((levels, nfields) + grid.shape)
    formulation = CONSERVATIVE if form == 1 else PERTURBATION
    states = []
    for lev in range(levels):
        block = arr[lev]
        st = State(
            grid,
            block[0].copy(),
            block[1 : dim + 1].copy(),
            block[dim + 1].copy(),
            t=times[lev],
            formulation=formulation,
            step=int(step) - lev,
        )
        states.append(st)
    return Checkpoint(states[0], params, states[1] if levels == 2 else None)
