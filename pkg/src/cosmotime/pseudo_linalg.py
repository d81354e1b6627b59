"""Pseudo-Euclidean linear algebra for the forms Q_{2,n-1} and Q_{1,n}.

Time coordinates come first. ``Signature(2, n+1)`` is the anti-de Sitter
ambient form, ``Signature(1, n+1)`` the de Sitter one. Most of the library
works on raw coordinate arrays together with the diagonal ``eps`` of the form;
:class:`AmbientVector` is the typed carrier used at API boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidInputError

TOL_NULL = 1e-9
TOL_PROJ = 1e-9


@dataclass(frozen=True)
class Signature:
    negatives: int
    dimension: int

    def __post_init__(self):
        if self.negatives not in (1, 2):
            raise InvalidInputError(f"negatives must be 1 or 2, got {self.negatives}")
        if self.dimension < 3:
            raise InvalidInputError(f"dimension must be >= 3, got {self.dimension}")

    @property
    def eps(self) -> np.ndarray:
        return form_diagonal(self.negatives, self.dimension)

    @classmethod
    def ads(cls, n: int) -> "Signature":
        """Ambient form of AdS_n, living in R^{n+1}."""
        return cls(2, n + 1)

    @classmethod
    def ds(cls, n: int) -> "Signature":
        """Ambient form of dS_n, living in R^{n+1}."""
        return cls(1, n + 1)


@dataclass(frozen=True, eq=False)
class AmbientVector:
    coords: np.ndarray
    sig: Signature

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float).reshape(-1)
        if c.shape[0] != self.sig.dimension:
            raise InvalidInputError(
                f"expected {self.sig.dimension} coordinates, got {c.shape[0]}")
        if not np.all(np.isfinite(c)):
            raise InvalidInputError("coordinates must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def __repr__(self):
        return f"AmbientVector({np.array2string(self.coords, precision=6)}, neg={self.sig.negatives})"


VectorLike = Union[AmbientVector, np.ndarray, list, tuple]


def form_diagonal(negatives: int, dimension: int) -> np.ndarray:
    eps = np.ones(dimension)
    eps[:negatives] = -1.0
    return eps


def as_coords(x: VectorLike) -> np.ndarray:
    if isinstance(x, AmbientVector):
        return x.coords
    return np.asarray(x, dtype=float)


def inner(x: AmbientVector, y: AmbientVector) -> float:
    """The pseudo-scalar product of two vectors with the same signature."""
    if not isinstance(x, AmbientVector) or not isinstance(y, AmbientVector):
        raise InvalidInputError("inner expects AmbientVector arguments")
    if x.sig != y.sig:
        raise InvalidInputError(f"signature mismatch: {x.sig} vs {y.sig}")
    return float(np.sum(x.sig.eps * x.coords * y.coords))


def inner_eps(x, y, eps) -> np.ndarray:
    """Batched form evaluation on raw arrays; broadcasts over leading axes."""
    return np.sum(np.asarray(x) * np.asarray(y) * eps, axis=-1)


def quad(x, eps) -> np.ndarray:
    return inner_eps(x, x, eps)


def classify(x: AmbientVector, tol_null: float = TOL_NULL) -> str:
    """'timelike', 'null' or 'spacelike', with a null band relative to |x|^2."""
    c = x.coords
    scale = float(np.dot(c, c))
    if scale == 0.0:
        raise InvalidInputError("zero vector has no causal type")
    q = float(np.sum(x.sig.eps * c * c)) / scale
    if q < -tol_null:
        return "timelike"
    if q <= tol_null:
        return "null"
    return "spacelike"


def projective_normalize(x) -> np.ndarray:
    """Unit Euclidean representative of the ray through x (positive homothety)."""
    c = as_coords(x)
    nrm = float(np.linalg.norm(c))
    if nrm == 0.0:
        raise InvalidInputError("zero vector is not a projective point")
    return c / nrm


def canonical_line_representative(x) -> np.ndarray:
    """Unit representative of the line through x, first nonzero coordinate positive."""
    c = projective_normalize(x)
    nz = np.flatnonzero(np.abs(c) > TOL_PROJ)
    if c[nz[0]] < 0:
        c = -c
    return c


def projective_equal(x: VectorLike, y: VectorLike, tol_proj: float = TOL_PROJ) -> bool:
    """True iff y = lambda x for some lambda > 0, on normalized representatives."""
    a = projective_normalize(x)
    b = projective_normalize(y)
    if a.shape != b.shape:
        raise InvalidInputError("dimension mismatch")
    return bool(np.max(np.abs(a - b)) <= tol_proj)


def orthonormal_complement(vectors: np.ndarray, eps: np.ndarray, count: int) -> np.ndarray:
    """Q-orthonormal vectors orthogonal to ``vectors`` (Gram-Schmidt on the standard basis).

    ``vectors`` must be Q-orthonormal and non-null. Returns ``count`` spacelike or
    timelike unit vectors, whichever the complement yields first.
    """
    basis = [np.asarray(v, dtype=float) for v in vectors]
    norms = [float(quad(v, eps)) for v in basis]
    out = []
    for e in np.eye(len(eps)):
        w = e.copy()
        for b, s in zip(basis, norms):
            w = w - inner_eps(w, b, eps) / s * b
        q = float(quad(w, eps))
        if abs(q) > 1e-8:
            w = w / np.sqrt(abs(q))
            basis.append(w)
            norms.append(np.sign(q))
            out.append(w)
            if len(out) == count:
                break
    if len(out) < count:
        raise InvalidInputError("could not complete the frame")
    return np.array(out)


def spherical_distance(p, q) -> np.ndarray:
    """Angle between unit vectors, 2 atan2(|p - q|, |p + q|), accurate at 0 and pi."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return 2.0 * np.arctan2(np.linalg.norm(p - q, axis=-1), np.linalg.norm(p + q, axis=-1))
