"""Dense complex matrices: Haar sampling, planar decomposition, embedding.

Matrices are plain ``numpy`` complex arrays.  The helpers here validate,
generate and transform them; nothing mutates its input.

Rotation convention
-------------------
A two-mode rotation on modes ``(i, j)`` with angles ``(theta, phi)`` acts on
those two modes as::

    T(theta, phi) = [[exp(1j*phi) * cos(theta), -sin(theta)],
                     [exp(1j*phi) * sin(theta),  cos(theta)]]

and as the identity elsewhere.  A phase operation on mode ``i`` multiplies
that mode by ``exp(1j*phi)``.  A :class:`PlanarDecomposition` lists its
operations in the order light meets them, so the network matrix is
``M_L @ ... @ M_2 @ M_1``.  Decompositions produced here use
``theta`` in ``[0, pi/2]`` and ``phi`` in ``(-pi, pi]``.  Mode indices are
0-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._random import STREAM_EMBED, STREAM_NOISE, make_rng
from .errors import DimensionError, ParameterError, PreconditionError

UNITARY_TOL = 1e-10
EMBED_SAFETY = 0.5


def as_matrix(a, *, square: bool = False) -> np.ndarray:
    """Return ``a`` as a finite 2-d complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ParameterError("matrix entries must be finite")
    return m


def unitarity_error(u) -> float:
    """Max-entry norm of ``U^dagger U - I``."""
    u = np.asarray(u, dtype=complex)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and unitarity_error(u) <= tol


def check_unitary(u, tol: float = UNITARY_TOL) -> np.ndarray:
    u = as_matrix(u, square=True)
    err = unitarity_error(u)
    if err > tol:
        raise PreconditionError(f"matrix is not unitary: max |U^dag U - I| = {err:.3e} > {tol:g}")
    return u


def _haar(m: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def haar_unitary(m: int, seed: int) -> np.ndarray:
    """Haar-random ``m x m`` unitary.

    Draws a complex Ginibre matrix and orthonormalises it by QR, fixing the
    phases of ``R``'s diagonal so the result is exactly Haar distributed
    (Mezzadri, 2007).
    """
    if m < 1:
        raise DimensionError(f"mode count must be >= 1, got {m}")
    return _haar(int(m), make_rng(seed))


# -- planar decomposition ---------------------------------------------------

@dataclass(frozen=True)
class Rotation:
    modes: tuple[int, int]
    theta: float
    phi: float

    kind = "rotation"

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        e = complex(math.cos(self.phi), math.sin(self.phi))
        return np.array([[e * c, -s], [e * s, c]], dtype=complex)


@dataclass(frozen=True)
class Phase:
    mode: int
    phi: float

    kind = "phase"

    @property
    def modes(self) -> tuple[int]:
        return (self.mode,)


@dataclass(frozen=True)
class PlanarDecomposition:
    """Beamsplitter/phase-shifter network on ``m`` modes."""

    m: int
    operations: tuple

    def rotations(self) -> list[Rotation]:
        return [op for op in self.operations if isinstance(op, Rotation)]

    def to_list(self) -> list[dict]:
        out = []
        for op in self.operations:
            if isinstance(op, Rotation):
                out.append({"kind": "rotation", "modes": list(op.modes), "theta": op.theta, "phi": op.phi})
            else:
                out.append({"kind": "phase", "modes": [op.mode], "phi": op.phi})
        return out

    @classmethod
    def from_list(cls, m: int, items: Iterable[dict]) -> "PlanarDecomposition":
        ops = []
        for item in items:
            kind = item.get("kind")
            modes = [int(x) for x in item.get("modes", [])]
            if kind == "rotation" and len(modes) == 2:
                ops.append(Rotation((modes[0], modes[1]), float(item["theta"]), float(item["phi"])))
            elif kind == "phase" and len(modes) == 1:
                ops.append(Phase(modes[0], float(item["phi"])))
            else:
                raise ParameterError(f"malformed decomposition entry: {item!r}")
        return cls(int(m), tuple(ops))


def _null_angles(a: complex, b: complex) -> tuple[float, float]:
    """Angles of the rotation that sends ``(a, b)`` to ``(*, 0)``."""
    if abs(b) == 0.0:
        return 0.0, 0.0
    theta = math.atan2(abs(b), abs(a))
    phi = float(np.angle(-b * np.conj(a))) if abs(a) > 0 else 0.0
    return theta, phi


def reck_decompose(u) -> PlanarDecomposition:
    """Triangular (Reck-style) decomposition into adjacent-mode rotations.

    Works on ``V = U^dagger``: rotations on rows ``(r-1, r)`` are applied
    from the left to zero ``V``'s sub-diagonal, column by column, leaving a
    diagonal phase matrix ``D``.  Then ``U = D^* T_K ... T_1``, i.e. the
    rotations in the order found followed by the output phases.
    """
    u = check_unitary(u)
    m = u.shape[0]
    v = u.conj().T.copy()
    ops: list = []
    for col in range(m - 1):
        for row in range(m - 1, col, -1):
            theta, phi = _null_angles(v[row - 1, col], v[row, col])
            rot = Rotation((row - 1, row), theta, phi)
            v[row - 1 : row + 1, :] = rot.matrix() @ v[row - 1 : row + 1, :]
            v[row, col] = 0.0
            ops.append(rot)
    for i in range(m):
        ops.append(Phase(i, -float(np.angle(v[i, i]))))
    return PlanarDecomposition(m, tuple(ops))


def reck_reconstruct(d: PlanarDecomposition) -> np.ndarray:
    """Multiply out a decomposition, first operation applied first."""
    m = d.m
    if m < 1:
        raise DimensionError(f"mode count must be >= 1, got {m}")
    u = np.eye(m, dtype=complex)
    for op in d.operations:
        if any(not 0 <= k < m for k in op.modes):
            raise ParameterError(f"operation {op!r} addresses a mode outside 0..{m - 1}")
        if isinstance(op, Rotation):
            i, j = op.modes
            if i == j:
                raise ParameterError(f"rotation needs two distinct modes, got {op.modes}")
            u[[i, j], :] = op.matrix() @ u[[i, j], :]
        else:
            u[op.mode, :] *= complex(math.cos(op.phi), math.sin(op.phi))
    return u


# -- embedding and perturbation ----------------------------------------------

def _psd_sqrt(h: np.ndarray) -> np.ndarray:
    w, q = np.linalg.eigh(h)
    return (q * np.sqrt(np.clip(w, 0.0, None))) @ q.conj().T


def embed_scaled(a, m: int, seed: int):
    """Embed ``eps * A`` as a block of an ``m x m`` unitary.

    Returns ``(U, eps, rows, cols)`` with ``U[np.ix_(rows, cols)] == eps * A``.
    ``eps = EMBED_SAFETY / sigma_max(A)`` (1 for a zero matrix).  The block
    sits in a Halmos dilation, padded with a Haar block, and the rows and
    columns outside the block are then mixed by independent Haar unitaries.
    The placement is a uniformly random pair of sorted index sets.
    """
    a = as_matrix(a, square=True)
    n = a.shape[0]
    if m < 2 * n:
        raise DimensionError(f"embedding an {n}x{n} matrix needs m >= {2 * n}, got {m}")
    smax = float(np.linalg.norm(a, 2)) if n else 0.0
    eps = EMBED_SAFETY / smax if smax > 0 else 1.0
    k = eps * a
    dilation = np.block(
        [
            [k, _psd_sqrt(np.eye(n) - k @ k.conj().T)],
            [_psd_sqrt(np.eye(n) - k.conj().T @ k), -k.conj().T],
        ]
    )
    rng = make_rng(seed, STREAM_EMBED)
    core = np.zeros((m, m), dtype=complex)
    core[: 2 * n, : 2 * n] = dilation
    if m > 2 * n:
        core[2 * n :, 2 * n :] = _haar(m - 2 * n, rng)
    # mix everything outside the block rows (left) and block columns (right)
    left = np.eye(m, dtype=complex)
    right = np.eye(m, dtype=complex)
    if m > n:
        left[n:, n:] = _haar(m - n, rng)
        right[n:, n:] = _haar(m - n, rng)
    core = left @ core @ right
    rows = np.sort(rng.choice(m, size=n, replace=False))
    cols = np.sort(rng.choice(m, size=n, replace=False))
    row_order = np.concatenate([rows, np.setdiff1d(np.arange(m), rows)])
    col_order = np.concatenate([cols, np.setdiff1d(np.arange(m), cols)])
    u = np.empty_like(core)
    u[np.ix_(row_order, col_order)] = core
    return u, eps, rows, cols


def nearest_unitary(a) -> np.ndarray:
    """Polar-decomposition projection onto the unitary group."""
    w, _, vh = np.linalg.svd(as_matrix(a, square=True))
    return w @ vh


def perturb_unitary(u, sigma: float, seed: int) -> np.ndarray:
    """Add complex Gaussian noise (``E|z|^2 = sigma^2``) entrywise, then project back."""
    if not sigma >= 0:
        raise ParameterError(f"sigma must be >= 0, got {sigma}")
    u = as_matrix(u, square=True)
    if sigma == 0:
        return u.copy()
    rng = make_rng(seed, STREAM_NOISE)
    shape = u.shape
    noise = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * (sigma / math.sqrt(2.0))
    return nearest_unitary(u + noise)


# -- serialisation ---------------------------------------------------------------

def matrix_to_dict(a) -> dict:
    a = as_matrix(a)
    return {
        "rows": a.shape[0],
        "cols": a.shape[1],
        "re": [float(x) for x in a.real.ravel()],
        "im": [float(x) for x in a.imag.ravel()],
    }


def matrix_from_dict(doc: dict) -> np.ndarray:
    try:
        rows, cols = int(doc["rows"]), int(doc["cols"])
        re = np.asarray(doc["re"], dtype=float)
        im = np.asarray(doc.get("im", [0.0] * (rows * cols)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParameterError(f"malformed matrix document: {exc}") from exc
    if re.size != rows * cols or im.size != rows * cols:
        raise DimensionError(f"matrix document has {re.size}/{im.size} entries, expected {rows * cols}")
    return as_matrix((re + 1j * im).reshape(rows, cols))


def matrix_to_json(a) -> str:
    return json.dumps(matrix_to_dict(a))


def matrix_from_json(text: str) -> np.ndarray:
    return matrix_from_dict(json.loads(text))


def beamsplitter(theta: float = math.pi / 4, phi: float = 0.0) -> np.ndarray:
    return Rotation((0, 1), theta, phi).matrix()


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    p = np.zeros((len(perm), len(perm)))
    p[np.arange(len(perm)), list(perm)] = 1.0
    return p
