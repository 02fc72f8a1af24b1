"""Numerical geometry of the symmetric space SL(d,R)/SO(d).

The base point ``o`` is the identity coset, so the Cartan vector of the pair
``(o, g.o)`` is the vector of sorted log singular values of ``g`` and the
Riemannian distance is its Euclidean norm.  The translation vector of an
axial element is the vector of sorted log eigenvalue moduli.

Weyl-chamber vectors are plain ``numpy`` arrays of length ``d`` sorted in
non-increasing order with zero sum.  Most functions accept a single
``(d, d)`` matrix or a stack ``(..., d, d)`` and broadcast accordingly.

Long words in a Schottky group are badly conditioned: the smallest singular
values and eigenvalue moduli of ``g`` are lost to rounding long before the
largest ones are.  The projections below therefore read the upper half of
the spectrum off ``g`` and the lower half off ``g^-1`` (whose largest values
are the reciprocals of the smallest values of ``g``), and fill the middle
coordinate for odd ``d`` from the zero-sum constraint.  Callers that carry
the inverse product along (the census does) should pass it in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NonFiniteResult,
    NotRegular,
    NotUnimodular,
    ZeroModulus,
    ZeroVector,
)

__all__ = [
    "Tolerances",
    "Flag",
    "check_special_linear",
    "inverse",
    "cartan_projection",
    "orbit_distance",
    "jordan_projection",
    "translation_length",
    "is_regular_axial",
    "fixed_flags",
    "cartan_flag",
    "cartan_frames",
    "flag_distance",
    "is_transverse",
    "chamber_angle",
    "orthonormalize",
]


@dataclass(frozen=True)
class Tolerances:
    det: float = 1e-9
    orth: float = 1e-9
    gap: float = 1e-6
    transverse: float = 1e-8

    def to_dict(self) -> dict:
        return {"det": self.det, "orth": self.orth, "gap": self.gap,
                "transverse": self.transverse}

    @classmethod
    def from_dict(cls, data: dict | None) -> "Tolerances":
        if not data:
            return cls()
        unknown = set(data) - {"det", "orth", "gap", "transverse"}
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in data.items()})


DEFAULT_TOLERANCES = Tolerances()


def orthonormalize(frame: np.ndarray) -> np.ndarray:
    """Gram-Schmidt on the columns of ``frame`` (or a stack of frames), in order.

    Signs are fixed so that the triangular factor has a positive diagonal,
    which makes the result a deterministic function of the input.
    """
    q, r = np.linalg.qr(frame)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs = np.where(signs == 0, 1.0, signs)
    return q * signs[..., None, :]


@dataclass(frozen=True, eq=False)
class Flag:
    """A full flag in R^d stored as an orthonormal frame.

    The leading ``i`` columns of ``frame`` span the ``i``-dimensional member
    of the flag.
    """

    frame: np.ndarray

    def __post_init__(self):
        frame = np.array(self.frame, dtype=float)
        if frame.ndim != 2 or frame.shape[0] != frame.shape[1]:
            raise DimensionMismatch(f"flag frame must be square, got shape {frame.shape}")
        frame.setflags(write=False)
        object.__setattr__(self, "frame", frame)

    @property
    def dim(self) -> int:
        return self.frame.shape[0]

    def subspace(self, i: int) -> np.ndarray:
        return self.frame[:, :i]

    def act(self, g: np.ndarray) -> "Flag":
        """Image of the flag under ``g`` (projective action on nested subspaces)."""
        return Flag(orthonormalize(np.asarray(g, dtype=float) @ self.frame))

    def is_orthonormal(self, tol: float = DEFAULT_TOLERANCES.orth) -> bool:
        d = self.dim
        return bool(np.max(np.abs(self.frame.T @ self.frame - np.eye(d))) <= tol)

    @classmethod
    def standard(cls, d: int) -> "Flag":
        return cls(np.eye(d))

    @classmethod
    def reversed_standard(cls, d: int) -> "Flag":
        return cls(np.eye(d)[:, ::-1])

    def __repr__(self):
        return f"Flag(d={self.dim})"


def check_special_linear(g, tol_det: float = DEFAULT_TOLERANCES.det) -> np.ndarray:
    """Return ``g`` as a float array after checking it lies in SL(d,R)."""
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 2:
        raise DimensionMismatch(f"expected a square matrix of size >= 2, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise NonFiniteResult("matrix has non-finite entries")
    det = np.linalg.det(g)
    if abs(det - 1.0) > tol_det:
        raise NotUnimodular(f"determinant {det!r} differs from 1 by more than {tol_det}")
    return g


def inverse(g: np.ndarray) -> np.ndarray:
    """Inverse of a matrix (or stack); exact adjugate formula for d = 2."""
    g = np.asarray(g, dtype=float)
    if g.shape[-1] == 2:
        det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
        inv = np.empty_like(g)
        inv[..., 0, 0] = g[..., 1, 1]
        inv[..., 1, 1] = g[..., 0, 0]
        inv[..., 0, 1] = -g[..., 0, 1]
        inv[..., 1, 0] = -g[..., 1, 0]
        return inv / det[..., None, None]
    return np.linalg.inv(g)


def _combine_halves(top: np.ndarray, bottom_inv: np.ndarray, d: int) -> np.ndarray:
    # top: upper half of the log-spectrum of g, descending; bottom_inv: the
    # same for g^-1.  Coordinate d-1-i of g is -bottom_inv[i].
    h = d // 2
    out = np.empty(top.shape[:-1] + (d,))
    out[..., :h] = top[..., :h]
    out[..., d - h:] = -bottom_inv[..., :h][..., ::-1]
    if d % 2:
        out[..., h] = -(out[..., :h].sum(axis=-1) + out[..., d - h:].sum(axis=-1))
    # rounding can break the ordering by a few ulps
    return -np.sort(-out, axis=-1) + 0.0


def _top_logs(values: np.ndarray, what: str) -> np.ndarray:
    # only the upper half of a spectrum is ever used; the lower half may
    # legitimately have underflowed
    d = values.shape[-1]
    top = -np.sort(-values, axis=-1)[..., : d // 2]
    if not np.all(np.isfinite(top)):
        raise NonFiniteResult(f"non-finite {what}")
    if np.any(top <= np.finfo(float).tiny):
        raise (ZeroModulus if what == "eigenvalue modulus" else NonFiniteResult)(
            f"{what} underflows")
    return np.log(top)


def _log_singular_values(g: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(g)):
        raise NonFiniteResult("matrix has non-finite entries")
    try:
        s = np.linalg.svd(g, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NonFiniteResult(f"singular value decomposition failed: {exc}") from exc
    return _top_logs(s, "singular value")


def cartan_projection(g, inv=None) -> np.ndarray:
    """Cartan vector H(o, g.o): log singular values of ``g``, sorted descending.

    ``inv`` is an optional precomputed inverse of ``g`` used for the lower
    half of the spectrum.
    """
    g = np.asarray(g, dtype=float)
    if inv is None:
        inv = inverse(g)
    return _combine_halves(_log_singular_values(g), _log_singular_values(np.asarray(inv)),
                           g.shape[-1])


def orbit_distance(g, inv=None):
    """Riemannian distance d(o, g.o)."""
    return np.linalg.norm(cartan_projection(g, inv), axis=-1)


def _log_moduli(g: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(g)):
        raise NonFiniteResult("matrix has non-finite entries")
    try:
        ev = np.linalg.eigvals(g)
    except np.linalg.LinAlgError as exc:
        raise NonFiniteResult(f"eigenvalue computation failed: {exc}") from exc
    return _top_logs(np.abs(ev), "eigenvalue modulus")


def jordan_projection(g, inv=None) -> np.ndarray:
    """Translation vector L(g): log eigenvalue moduli sorted descending.

    Complex conjugate pairs contribute two equal coordinates.
    """
    g = np.asarray(g, dtype=float)
    if inv is None:
        inv = inverse(g)
    return _combine_halves(_log_moduli(g), _log_moduli(np.asarray(inv)), g.shape[-1])


def translation_length(g, inv=None):
    return np.linalg.norm(jordan_projection(g, inv), axis=-1)


def is_regular_axial(g, gap_tol: float = DEFAULT_TOLERANCES.gap, inv=None):
    jp = jordan_projection(g, inv)
    result = np.all(-np.diff(jp, axis=-1) > gap_tol, axis=-1)
    return bool(result) if np.ndim(result) == 0 else result


def fixed_flags(g, gap_tol: float = DEFAULT_TOLERANCES.gap) -> tuple[Flag, Flag]:
    """Attracting and repelling flags of a regular axial element.

    The attracting flag is built from eigenvectors ordered by decreasing
    eigenvalue modulus; the repelling flag is the attracting flag of
    ``g^-1``, i.e. the same eigenvectors in increasing order.
    """
    g = np.asarray(g, dtype=float)
    if not is_regular_axial(g, gap_tol):
        raise NotRegular("element is not regular axial; fixed flags are undefined")
    vals, vecs = np.linalg.eig(g)
    order = np.argsort(-np.abs(vals), kind="stable")
    # distinct moduli force real eigenvalues and real eigenvectors
    vecs = np.real(vecs[:, order])
    attracting = Flag(orthonormalize(vecs))
    repelling = Flag(orthonormalize(vecs[:, ::-1]))
    return attracting, repelling


def cartan_frames(g, gap_tol: float = DEFAULT_TOLERANCES.gap, inv=None):
    """Batch helper: left Cartan factors ``k1`` and a mask of regular Cartan vectors.

    Returns ``(frames, regular)`` where ``frames[..., :, :i]`` spans the top-i
    left singular directions.
    """
    g = np.asarray(g, dtype=float)
    h = cartan_projection(g, inv)
    regular = np.all(-np.diff(h, axis=-1) > gap_tol, axis=-1)
    u, _, _ = np.linalg.svd(g)
    return u, regular


def cartan_flag(g, gap_tol: float = DEFAULT_TOLERANCES.gap) -> Flag:
    """Direction flag of the orbit point g.o: the factor k1 of g = k1 e^H k2."""
    frames, regular = cartan_frames(g, gap_tol)
    if not bool(regular):
        raise NotRegular("Cartan vector is not regular; the direction flag is ill-defined")
    return Flag(frames)


def _frames(f) -> np.ndarray:
    return f.frame if isinstance(f, Flag) else np.asarray(f, dtype=float)


def flag_distance(f1, f2):
    """Max over i of the sine of the largest principal angle between the
    i-dimensional members of two flags.

    Either argument may be a :class:`Flag`, a frame, or a stack of frames.
    """
    a, b = _frames(f1), _frames(f2)
    if a.shape[-1] != b.shape[-1] or a.shape[-2] != b.shape[-2]:
        raise DimensionMismatch(f"flags of different dimension: {a.shape} vs {b.shape}")
    d = a.shape[-1]
    # sin(theta_max)(V_i, W_i) = || W_i^perp^T V_i ||_2
    m = np.swapaxes(b, -1, -2) @ a
    worst = None
    for i in range(1, d):
        block = m[..., i:, :i]
        if block.shape[-1] == 1 or block.shape[-2] == 1:
            s = np.linalg.norm(block, axis=(-2, -1))
        else:
            s = np.linalg.norm(block, ord=2, axis=(-2, -1))
        worst = s if worst is None else np.maximum(worst, s)
    worst = np.minimum(worst, 1.0)
    return float(worst) if np.ndim(worst) == 0 else worst


def is_transverse(f1, f2, tol: float = DEFAULT_TOLERANCES.transverse) -> bool:
    """True iff the flags are in general position."""
    a, b = _frames(f1), _frames(f2)
    if a.shape != b.shape:
        raise DimensionMismatch(f"flags of different dimension: {a.shape} vs {b.shape}")
    d = a.shape[-1]
    for i in range(1, d):
        joined = np.concatenate([a[:, :i], b[:, :d - i]], axis=1)
        if np.linalg.svd(joined, compute_uv=False)[-1] <= tol:
            return False
    return True


def transversality_margin(f1, f2) -> float:
    """Smallest singular value over all complementary pairs (0 means not transverse)."""
    a, b = _frames(f1), _frames(f2)
    d = a.shape[-1]
    return float(min(
        np.linalg.svd(np.concatenate([a[:, :i], b[:, :d - i]], axis=1), compute_uv=False)[-1]
        for i in range(1, d)
    ))


def chamber_angle(h1, h2) -> float:
    h1 = np.asarray(h1, dtype=float)
    h2 = np.asarray(h2, dtype=float)
    n1, n2 = np.linalg.norm(h1), np.linalg.norm(h2)
    if n1 == 0 or n2 == 0:
        raise ZeroVector("angle with the zero vector is undefined")
    c = float(np.dot(h1, h2) / (n1 * n2))
    return float(np.arccos(min(1.0, max(-1.0, c))))
