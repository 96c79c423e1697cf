"""Dense tensors of type (r, s) in dimension 2 or 3 with weight bookkeeping.

Components are stored row-major with all upper indices before all lower
indices.  The ``weight`` flag distinguishes true tensors from pseudotensors:
a pseudotensor picks up an extra sign(det S) under a change of basis, the
product of two pseudotensors is a tensor, and mixing the two kinds under
addition is rejected.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import TensorShapeError

__all__ = [
    "Tensor", "BasisChange",
    "add", "tensor_product", "contract", "transpose",
    "symmetrize", "alternate", "change_basis",
    "raise_index", "lower_index",
    "levi_civita", "volume_tensor", "cross_product", "mixed_product",
]

TENSOR = "tensor"
PSEUDOTENSOR = "pseudotensor"

_METRIC_SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class Tensor:
    """Immutable dense tensor of type (r, s) in dimension 2 or 3."""

    dim: int
    r: int
    s: int
    components: np.ndarray
    weight: str = TENSOR

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise TensorShapeError(f"dimension must be 2 or 3, got {self.dim}")
        if self.weight not in (TENSOR, PSEUDOTENSOR):
            raise TensorShapeError(f"bad weight flag {self.weight!r}")
        comp = np.asarray(self.components, dtype=float)
        expected = (self.dim,) * (self.r + self.s)
        if comp.shape != expected:
            raise TensorShapeError(
                f"component shape {comp.shape} does not match type "
                f"({self.r},{self.s}) in dimension {self.dim}")
        comp = comp.copy()
        comp.setflags(write=False)
        object.__setattr__(self, "components", comp)

    @property
    def rank(self) -> tuple[int, int]:
        return (self.r, self.s)

    def item(self) -> float:
        """The single component of a type (0,0) tensor."""
        if self.r or self.s:
            raise TensorShapeError("item() requires a scalar tensor")
        return float(self.components)

    def _like(self, components, weight=None) -> "Tensor":
        return Tensor(self.dim, self.r, self.s, components,
                      weight if weight is not None else self.weight)


@dataclass(frozen=True)
class BasisChange:
    """Direct and inverse transition matrices of a basis change."""

    dim: int
    S: np.ndarray
    T: np.ndarray = field(default=None)

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        if S.shape != (self.dim, self.dim):
            raise TensorShapeError("transition matrix has the wrong shape")
        det = np.linalg.det(S)
        if det == 0.0 or not math.isfinite(det):
            raise TensorShapeError("transition matrix is singular")
        T = np.linalg.inv(S) if self.T is None else np.asarray(self.T, float)
        if np.max(np.abs(S @ T - np.eye(self.dim))) > 1e-12:
            raise TensorShapeError("S and T are not inverse to 1e-12")
        S = S.copy()
        T = T.copy()
        S.setflags(write=False)
        T.setflags(write=False)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "T", T)

    @property
    def det_sign(self) -> float:
        return 1.0 if np.linalg.det(self.S) > 0 else -1.0

    def inverse(self) -> "BasisChange":
        return BasisChange(self.dim, self.T, self.S)


def _check_same_kind(a: Tensor, b: Tensor):
    if a.dim != b.dim:
        raise TensorShapeError("dimension mismatch")
    if a.rank != b.rank:
        raise TensorShapeError(f"type mismatch: {a.rank} vs {b.rank}")
    if a.weight != b.weight:
        raise TensorShapeError(
            "adding a tensor and a pseudotensor is not defined")


def add(a: Tensor, b: Tensor) -> Tensor:
    """Componentwise sum of two fields of the same type and weight."""
    _check_same_kind(a, b)
    return a._like(a.components + b.components)


def scale(a: Tensor, factor: float) -> Tensor:
    return a._like(a.components * float(factor))


def _product_weight(wa: str, wb: str) -> str:
    return PSEUDOTENSOR if (wa == PSEUDOTENSOR) != (wb == PSEUDOTENSOR) \
        else TENSOR


def tensor_product(a: Tensor, b: Tensor) -> Tensor:
    """Tensor product; upper indices of both factors precede all lower ones."""
    if a.dim != b.dim:
        raise TensorShapeError("dimension mismatch")
    comp = np.tensordot(a.components, b.components, axes=0)
    # current order: a-upper, a-lower, b-upper, b-lower
    na, nb = a.r + a.s, b.r + b.s
    axes = (list(range(a.r))
            + list(range(na, na + b.r))
            + list(range(a.r, na))
            + list(range(na + b.r, na + nb)))
    comp = comp.transpose(axes) if axes else comp
    return Tensor(a.dim, a.r + b.r, a.s + b.s, comp,
                  _product_weight(a.weight, b.weight))


def contract(a: Tensor, m: int, n: int) -> Tensor:
    """Trace over the m-th upper and n-th lower index (1-based positions)."""
    if a.r < 1 or a.s < 1:
        raise TensorShapeError("contraction needs an upper and a lower index")
    if not (1 <= m <= a.r) or not (1 <= n <= a.s):
        raise TensorShapeError(f"index position out of range: ({m},{n})")
    comp = np.trace(a.components, axis1=m - 1, axis2=a.r + n - 1)
    return Tensor(a.dim, a.r - 1, a.s - 1, comp, a.weight)


def transpose(a: Tensor, sigma: Sequence[int] = (),
              tau: Sequence[int] = ()) -> Tensor:
    """Rearrange indices: new index k takes old position sigma[k] (1-based)."""
    sigma = tuple(sigma) if sigma else tuple(range(1, a.r + 1))
    tau = tuple(tau) if tau else tuple(range(1, a.s + 1))
    if sorted(sigma) != list(range(1, a.r + 1)):
        raise TensorShapeError("sigma is not a permutation of the upper slots")
    if sorted(tau) != list(range(1, a.s + 1)):
        raise TensorShapeError("tau is not a permutation of the lower slots")
    axes = [p - 1 for p in sigma] + [a.r + q - 1 for q in tau]
    return a._like(a.components.transpose(axes) if axes else a.components)


def _parity(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def _average_over_group(a: Tensor, signed: bool) -> Tensor:
    terms = []
    for sig in itertools.permutations(range(a.r)):
        for tau in itertools.permutations(range(a.s)):
            axes = list(sig) + [a.r + q for q in tau]
            term = a.components.transpose(axes) if axes else a.components
            if signed:
                term = term * (_parity(sig) * _parity(tau))
            terms.append(term)
    count = len(terms)
    out = np.empty_like(a.components)
    # per-entry accumulation in sorted order keeps the average canonical
    # across an index orbit, which makes the operation exactly idempotent
    for index in np.ndindex(out.shape):
        values = sorted(term[index] for term in terms)
        if values[0] == values[-1]:
            out[index] = values[0]
        else:
            out[index] = math.fsum(values) / count
    return a._like(out)


def symmetrize(a: Tensor) -> Tensor:
    """Average over all permutations of upper and of lower indices."""
    return _average_over_group(a, signed=False)


def alternate(a: Tensor) -> Tensor:
    """Signed average over all permutations of upper and of lower indices."""
    return _average_over_group(a, signed=True)


def change_basis(a: Tensor, c: BasisChange) -> Tensor:
    """Apply one S factor per upper index and one T factor per lower index.

    Pseudotensors gain the extra factor sign(det S).
    """
    if a.dim != c.dim:
        raise TensorShapeError("dimension mismatch")
    comp = a.components
    for ax in range(a.r):
        comp = np.moveaxis(np.tensordot(c.S, comp, axes=(1, ax)), 0, ax)
    for ax in range(a.r, a.r + a.s):
        comp = np.moveaxis(np.tensordot(c.T, comp, axes=(0, ax)), 0, ax)
    if a.weight == PSEUDOTENSOR:
        comp = comp * c.det_sign
    return a._like(comp)


def _check_metric(g: Tensor, rank: tuple[int, int], dim: int):
    if g.dim != dim or g.rank != rank:
        raise TensorShapeError("metric has the wrong type or dimension")
    m = g.components
    if np.max(np.abs(m - m.T)) > _METRIC_SYMMETRY_TOL:
        raise TensorShapeError("metric is not symmetric")


def lower_index(a: Tensor, g: Tensor, m: int, n: int) -> Tensor:
    """Move the m-th upper index down to lower position n via the metric."""
    _check_metric(g, (0, 2), a.dim)
    if not (1 <= m <= a.r):
        raise TensorShapeError(f"upper position {m} out of range")
    if not (1 <= n <= a.s + 1):
        raise TensorShapeError(f"lower position {n} out of range")
    comp = np.tensordot(a.components, g.components, axes=(m - 1, 0))
    comp = np.moveaxis(comp, -1, (a.r - 1) + (n - 1))
    return Tensor(a.dim, a.r - 1, a.s + 1, comp, a.weight)


def raise_index(a: Tensor, g_inv: Tensor, n: int, m: int) -> Tensor:
    """Move the n-th lower index up to upper position m via the inverse metric."""
    _check_metric(g_inv, (2, 0), a.dim)
    if not (1 <= n <= a.s):
        raise TensorShapeError(f"lower position {n} out of range")
    if not (1 <= m <= a.r + 1):
        raise TensorShapeError(f"upper position {m} out of range")
    comp = np.tensordot(a.components, g_inv.components,
                        axes=(a.r + n - 1, 0))
    comp = np.moveaxis(comp, -1, m - 1)
    return Tensor(a.dim, a.r + 1, a.s - 1, comp, a.weight)


def levi_civita(dim: int) -> np.ndarray:
    """Permutation symbol as a raw array; not itself a transformable value."""
    if dim not in (2, 3):
        raise TensorShapeError("dimension must be 2 or 3")
    eps = np.zeros((dim,) * dim)
    for perm in itertools.permutations(range(dim)):
        eps[perm] = _parity(perm)
    eps.setflags(write=False)
    return eps


def volume_tensor(g: Tensor, orientation) -> Tensor:
    """Volume (dim 3) or area (dim 2) form scaled by sqrt(det g).

    ``orientation`` is +1 or -1 for an oriented space (result is a true
    tensor) or the string "pseudo" for the orientation-free pseudotensor.
    """
    _check_metric(g, (0, 2), g.dim)
    det = np.linalg.det(g.components)
    if det <= 0.0:
        raise TensorShapeError(f"metric determinant must be positive, "
                               f"got {det!r}")
    eigmin = np.min(np.linalg.eigvalsh(g.components))
    if eigmin <= 0.0:
        raise TensorShapeError("metric is not positive-definite")
    if orientation == "pseudo":
        xi, weight = 1.0, PSEUDOTENSOR
    elif orientation in (1, -1, 1.0, -1.0):
        xi, weight = float(orientation), TENSOR
    else:
        raise TensorShapeError(f"bad orientation flag {orientation!r}")
    comp = xi * math.sqrt(det) * levi_civita(g.dim)
    return Tensor(g.dim, 0, g.dim, comp, weight)


def cross_product(x: Tensor, y: Tensor, g: Tensor, omega: Tensor) -> Tensor:
    """Vector product of two vectors via the volume form and the metric."""
    if x.dim != 3 or y.dim != 3:
        raise TensorShapeError("cross product requires dimension 3")
    if x.rank != (1, 0) or y.rank != (1, 0):
        raise TensorShapeError("cross product expects two vectors")
    _check_metric(g, (0, 2), 3)
    if omega.rank != (0, 3) or omega.dim != 3:
        raise TensorShapeError("volume form has the wrong type")
    g_inv = np.linalg.inv(g.components)
    comp = np.einsum("qi,ijk,j,k->q", g_inv, omega.components,
                     x.components, y.components)
    weight = _product_weight(_product_weight(x.weight, y.weight),
                             omega.weight)
    return Tensor(3, 1, 0, comp, weight)


def mixed_product(x: Tensor, y: Tensor, z: Tensor, omega: Tensor) -> Tensor:
    """Triple (mixed) product of three vectors via the volume form."""
    for v in (x, y, z):
        if v.dim != 3 or v.rank != (1, 0):
            raise TensorShapeError("mixed product expects three 3-d vectors")
    if omega.rank != (0, 3) or omega.dim != 3:
        raise TensorShapeError("volume form has the wrong type")
    value = np.einsum("ijk,i,j,k->", omega.components, x.components,
                      y.components, z.components)
    weight = omega.weight
    for v in (x, y, z):
        weight = _product_weight(weight, v.weight)
    return Tensor(3, 0, 0, np.asarray(value), weight)
