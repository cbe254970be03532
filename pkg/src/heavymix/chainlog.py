"""Append-only binary log of kept sampler iterations.

One record per snapshot: iteration index, scalar block, then the
variable-length weight/atom arrays.  The file opens with a 4-byte magic
header that doubles as the format version; readers refuse anything
else.  Records are self-delimiting, so a crashed run leaves a readable
prefix (a trailing partial record is ignored).
"""

from __future__ import annotations

import struct

import numpy as np

from .exceptions import InputError

MAGIC = b"HMX1"

_HEAD = struct.Struct("<Qddd")       # iteration, discount, lam, residual
_LENS = struct.Struct("<IIIIIB")     # d, n_weights, atom_rows, atom_cols, coef_cols, atoms_ndim


class SnapshotWriter:
    """Streams snapshots to an append-only binary file."""

    def __init__(self, path):
        self._fh = open(path, "wb")
        self._fh.write(MAGIC)

    def write(self, snap):
        alpha0 = np.asarray(snap.alpha0, dtype="<f8")
        weights = (
            np.empty(0, dtype="<f8")
            if snap.weights is None
            else np.asarray(snap.weights, dtype="<f8")
        )
        atoms = np.asarray(snap.atoms, dtype="<f8")
        ndim = atoms.ndim
        atoms2 = atoms if ndim == 2 else atoms[:, None]
        stick_u = (
            np.empty(0, dtype="<f8")
            if snap.stick_u is None
            else np.asarray(snap.stick_u, dtype="<f8")
        )
        coefs = (
            np.empty((atoms2.shape[0], 0), dtype="<f8")
            if snap.coefs is None
            else np.asarray(snap.coefs, dtype="<f8")
        )
        resid = float("nan") if snap.residual is None else float(snap.residual)
        self._fh.write(_HEAD.pack(snap.iteration, float(snap.discount), float(snap.lam), resid))
        self._fh.write(
            _LENS.pack(
                alpha0.size, weights.size, atoms2.shape[0], atoms2.shape[1],
                coefs.shape[1], ndim,
            )
        )
        self._fh.write(struct.pack("<I", stick_u.size))
        for arr in (alpha0, weights, np.ascontiguousarray(atoms2), stick_u,
                    np.ascontiguousarray(coefs)):
            self._fh.write(arr.astype("<f8").tobytes())

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_snapshots(path):
    """Read every complete record from a snapshot log.

    Returns a list of :class:`heavymix.mcmc.Snapshot`.  A truncated
    trailing record (crash mid-write) is dropped silently; a bad magic
    header raises :class:`InputError`.
    """
    from .mcmc import Snapshot

    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise InputError(f"not a snapshot log (magic {blob[:4]!r})")
    out = []
    pos = 4
    total = len(blob)
    while True:
        if pos + _HEAD.size + _LENS.size + 4 > total:
            break
        iteration, discount, lam, resid = _HEAD.unpack_from(blob, pos)
        pos_h = pos + _HEAD.size
        d, n_w, a_rows, a_cols, c_cols, ndim = _LENS.unpack_from(blob, pos_h)
        (n_su,) = struct.unpack_from("<I", blob, pos_h + _LENS.size)
        body = pos_h + _LENS.size + 4
        n_float = d + n_w + a_rows * a_cols + n_su + a_rows * c_cols
        end = body + 8 * n_float
        if end > total:
            break
        buf = np.frombuffer(blob, dtype="<f8", count=n_float, offset=body)
        i = 0
        alpha0 = buf[i : i + d].copy(); i += d
        weights = buf[i : i + n_w].copy(); i += n_w
        atoms = buf[i : i + a_rows * a_cols].reshape(a_rows, a_cols).copy()
        i += a_rows * a_cols
        stick_u = buf[i : i + n_su].copy(); i += n_su
        coefs = buf[i : i + a_rows * c_cols].reshape(a_rows, c_cols).copy() if c_cols else None
        out.append(
            Snapshot(
                iteration=int(iteration),
                discount=discount,
                lam=lam,
                alpha0=alpha0,
                weights=weights if n_w else None,
                residual=None if np.isnan(resid) else resid,
                atoms=atoms if ndim == 2 else atoms[:, 0],
                stick_u=stick_u if n_su else None,
                coefs=coefs,
            )
        )
        pos = end
    return out
