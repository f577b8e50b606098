"""Left-invariant vector fields and sub-Laplacians as finite-difference operators.

Two frames are in circulation for the generating horizontal fields, and both
are kept behind :class:`FieldConvention`:

* ``H3`` -- three coordinates ``(y_1, y_2, tau)``::

      X = d/dy_1 - 2 y_2 d/dtau,   Y = d/dy_2 + 2 y_1 d/dtau,   [X, Y] = T = 4 d/dtau

* ``HN`` -- coordinates ``(x_1..x_n, y_1..y_n, t)``::

      X_j = d/dx_j + 2 y_j d/dt,   Y_j = d/dy_j - 2 x_j d/dt,   [X_j, Y_k] = -4 delta_jk d/dt

The sub-Laplacian comes in the positive-operator sign ``L = -sum(X_j^2 + Y_j^2)``
(default) and the geometer sign ``Delta_H = +sum(X_j^2 + Y_j^2) = div_H D_H``.
Complex fields on the H3 frame::

      Z = d/dz - 2 i conj(z) d/dtau,   Zbar = d/dzbar + 2 i z d/dtau,

where ``d/dz = d/dy_1 - i d/dy_2`` and ``d/dzbar = d/dy_1 + i d/dy_2`` carry no
1/2 factor (so ``d/dz z = 2``); with these, ``L = -(Z Zbar + Zbar Z)/2`` holds
exactly, even at the stencil level.

Discretization: central second-order differences on a :class:`~heislab.grid.BoxGrid`
with zero (Dirichlet) ghost values.  Every operator also accepts a
:class:`~heislab.polyfield.PolyField`, in which case derivatives are exact.

The principal symbol of ``L`` on H3 is

      sigma(y; xi, eta, gamma) = (xi - 2 y_2 gamma)^2 + (eta + 2 y_1 gamma)^2,

which vanishes on the covector ``(2 y_2 gamma, -2 y_1 gamma, gamma)`` at every
point: the operator is nowhere elliptic, yet hypoelliptic by the bracket
condition above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError, SingularGradientError
from .geometry import HeisPoint
from .grid import BoxGrid, HorizontalVectorField, ScalarField
from .polyfield import PolyField

__all__ = [
    "FieldConvention",
    "H3",
    "HN",
    "apply_X",
    "apply_Y",
    "apply_T",
    "apply_Z",
    "apply_Zbar",
    "commutator_check",
    "horizontal_gradient",
    "horizontal_divergence",
    "sublaplacian",
    "sublaplacian_expanded",
    "twisted_laplacian",
    "p_sublaplacian",
    "symbol_L",
    "null_covector",
]


# ---------------------------------------------------------------------------
# stencils
# ---------------------------------------------------------------------------


def _shifted(values: np.ndarray, axis: int, step: int) -> np.ndarray:
    """values[..., i+step, ...] with zeros streaming in at the boundary."""
    out = np.zeros_like(values)
    src = [slice(None)] * values.ndim
    dst = [slice(None)] * values.ndim
    if step == 1:
        dst[axis] = slice(0, -1)
        src[axis] = slice(1, None)
    elif step == -1:
        dst[axis] = slice(1, None)
        src[axis] = slice(0, -1)
    else:
        raise ValueError("step must be +-1")
    out[tuple(dst)] = values[tuple(src)]
    return out


def first_diff(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Central first difference, O(h^2)."""
    return (_shifted(values, axis, 1) - _shifted(values, axis, -1)) / (2.0 * h)


def second_diff(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Direct central second difference, O(h^2)."""
    return (_shifted(values, axis, 1) - 2.0 * values + _shifted(values, axis, -1)) / (h * h)


# ---------------------------------------------------------------------------
# conventions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldConvention:
    """Frame selector for the generating horizontal fields.

    ``pair(j, n)`` returns ``(a, b, sx, sy)`` meaning::

        X_j = D_a + 2 * sx * coord_b * D_t        (D = first difference along an axis)
        Y_j = D_b + 2 * sy * coord_a * D_t

    and ``commutator_sign`` is the sign in ``[X_j, Y_j] = sign * T``.
    """

    name: str

    def __post_init__(self) -> None:
        if self.name not in ("hn", "h3"):
            raise ValueError(f"unknown convention {self.name!r}")

    @property
    def commutator_sign(self) -> float:
        return 1.0 if self.name == "h3" else -1.0

    @property
    def t_scale(self) -> float:
        """T = t_scale * d/dt."""
        return 4.0

    def n_of(self, ndim: int) -> int:
        if ndim < 3 or ndim % 2 == 0:
            raise DimensionMismatchError(f"group fields need odd ndim >= 3, got {ndim}")
        n = (ndim - 1) // 2
        if self.name == "h3" and n != 1:
            raise DimensionMismatchError("the h3 frame is defined on 3 coordinates only")
        return n

    def pair(self, j: int, n: int) -> tuple[int, int, float, float]:
        if not 0 <= j < n:
            raise DimensionMismatchError(f"field index {j} out of range for n={n}")
        if self.name == "h3":
            return 0, 1, -1.0, 1.0
        return j, n + j, 1.0, -1.0

    def t_axis(self, ndim: int) -> int:
        return ndim - 1


HN = FieldConvention("hn")
H3 = FieldConvention("h3")


# ---------------------------------------------------------------------------
# first-order fields (grid + polynomial modes)
# ---------------------------------------------------------------------------


def _poly_first_order(u: PolyField, deriv_axis: int, coeff_axis: int | None, coeff: float) -> PolyField:
    out = u.diff(deriv_axis)
    if coeff_axis is not None:
        t_ax = u.nvars - 1
        out = out + coeff * PolyField.variable(coeff_axis, u.nvars) * u.diff(t_ax)
    return out


def apply_X(j: int, u, conv: FieldConvention = HN):
    """Apply the horizontal field X_j (zero-based j)."""
    if isinstance(u, PolyField):
        n = conv.n_of(u.nvars)
        a, b, sx, _ = conv.pair(j, n)
        return _poly_first_order(u, a, b, 2.0 * sx)
    n = conv.n_of(u.ndim)
    a, b, sx, _ = conv.pair(j, n)
    g = u.grid
    tax = conv.t_axis(g.ndim)
    vals = first_diff(u.values, a, g.spacing[a])
    vals = vals + (2.0 * sx) * g.axis_mesh(b) * first_diff(u.values, tax, g.spacing[tax])
    return u._new(vals)


def apply_Y(j: int, u, conv: FieldConvention = HN):
    """Apply the horizontal field Y_j (zero-based j)."""
    if isinstance(u, PolyField):
        n = conv.n_of(u.nvars)
        a, b, _, sy = conv.pair(j, n)
        return _poly_first_order(u, b, a, 2.0 * sy)
    n = conv.n_of(u.ndim)
    a, b, _, sy = conv.pair(j, n)
    g = u.grid
    tax = conv.t_axis(g.ndim)
    vals = first_diff(u.values, b, g.spacing[b])
    vals = vals + (2.0 * sy) * g.axis_mesh(a) * first_diff(u.values, tax, g.spacing[tax])
    return u._new(vals)


def apply_T(u, conv: FieldConvention = HN):
    """Apply the central field T = 4 d/dt."""
    if isinstance(u, PolyField):
        conv.n_of(u.nvars)
        return conv.t_scale * u.diff(u.nvars - 1)
    conv.n_of(u.ndim)
    g = u.grid
    tax = conv.t_axis(g.ndim)
    return u._new(conv.t_scale * first_diff(u.values, tax, g.spacing[tax]))


def commutator_check(j: int, k: int, u, conv: FieldConvention = HN) -> float:
    """Max deviation of ([X_j, Y_k] - expected) u; exact (up to rounding) for polynomials.

    Expected: ``commutator_sign * T`` for j == k, zero otherwise.
    """
    xu = apply_X(j, apply_Y(k, u, conv), conv)
    yu = apply_Y(k, apply_X(j, u, conv), conv)
    if isinstance(u, PolyField):
        dev = xu - yu
        if j == k:
            dev = dev - conv.commutator_sign * apply_T(u, conv)
        return dev.max_abs_on_lattice()
    dev = xu.values - yu.values
    if j == k:
        dev = dev - conv.commutator_sign * apply_T(u, conv).values
    return float(np.max(np.abs(dev)))


# ---------------------------------------------------------------------------
# gradient / divergence / sub-Laplacians
# ---------------------------------------------------------------------------


def horizontal_gradient(u, conv: FieldConvention = HN):
    """D_H u = (X_1 u, ..., X_n u, Y_1 u, ..., Y_n u)."""
    if isinstance(u, PolyField):
        n = conv.n_of(u.nvars)
        return tuple(apply_X(j, u, conv) for j in range(n)) + tuple(
            apply_Y(j, u, conv) for j in range(n)
        )
    n = conv.n_of(u.ndim)
    comps = [apply_X(j, u, conv) for j in range(n)] + [apply_Y(j, u, conv) for j in range(n)]
    return HorizontalVectorField(tuple(comps))


def horizontal_divergence(F, conv: FieldConvention = HN):
    """div_H F = sum_j (X_j F_j + Y_j F_{n+j}) for a 2n-component field."""
    if isinstance(F, (tuple, list)) and F and isinstance(F[0], PolyField):
        n = len(F) // 2
        if len(F) != 2 * n or n == 0:
            raise DimensionMismatchError("horizontal fields need an even, positive component count")
        out = apply_X(0, F[0], conv)
        for j in range(1, n):
            out = out + apply_X(j, F[j], conv)
        for j in range(n):
            out = out + apply_Y(j, F[n + j], conv)
        return out
    if not isinstance(F, HorizontalVectorField):
        raise DimensionMismatchError("expected a HorizontalVectorField or tuple of PolyField")
    n = F.n
    acc = apply_X(0, F.components[0], conv).values.copy()
    for j in range(1, n):
        acc += apply_X(j, F.components[j], conv).values
    for j in range(n):
        acc += apply_Y(j, F.components[n + j], conv).values
    return ScalarField(F.grid, acc)


def sublaplacian(u, conv: FieldConvention = HN, sign: str = "positive"):
    """Sub-Laplacian by composing the first-order stencils.

    ``sign="positive"`` gives L = -sum(X_j^2 + Y_j^2) (nonnegative quadratic
    form); ``sign="geometer"`` gives Delta_H = +sum(...) = div_H D_H.
    """
    if sign not in ("positive", "geometer"):
        raise ValueError(f"sign must be 'positive' or 'geometer', got {sign!r}")
    s = -1.0 if sign == "positive" else 1.0
    if isinstance(u, PolyField):
        n = conv.n_of(u.nvars)
        out = None
        for j in range(n):
            xx = apply_X(j, apply_X(j, u, conv), conv)
            yy = apply_Y(j, apply_Y(j, u, conv), conv)
            out = xx + yy if out is None else out + xx + yy
        return s * out
    n = conv.n_of(u.ndim)
    acc = None
    for j in range(n):
        xx = apply_X(j, apply_X(j, u, conv), conv).values
        yy = apply_Y(j, apply_Y(j, u, conv), conv).values
        acc = xx + yy if acc is None else acc + xx + yy
    return u._new(s * acc)


def sublaplacian_expanded(u: ScalarField, conv: FieldConvention = HN, sign: str = "positive") -> ScalarField:
    """Sub-Laplacian from the expanded formula with direct second-difference stencils.

    For H3 (positive sign) this is
    ``-Delta - 4 (y_1^2 + y_2^2) d^2/dtau^2 + 4 (y_2 d/dy_1 - y_1 d/dy_2) d/dtau``;
    for HN the analogous 2n+1 dimensional expansion.  It matches
    :func:`sublaplacian` to O(h^2) (different stencils for the pure second
    derivatives), which is exactly what the operator-identity checks measure.
    """
    if sign not in ("positive", "geometer"):
        raise ValueError(f"sign must be 'positive' or 'geometer', got {sign!r}")
    if isinstance(u, PolyField):
        raise DimensionMismatchError("expanded form is a grid discretization; use sublaplacian()")
    n = conv.n_of(u.ndim)
    g = u.grid
    tax = conv.t_axis(g.ndim)
    ht = g.spacing[tax]
    dt_u = first_diff(u.values, tax, ht)
    dtt_u = second_diff(u.values, tax, ht)

    acc = np.zeros_like(u.values)
    z2 = np.zeros((), dtype=float)
    for j in range(n):
        a, b, sx, sy = conv.pair(j, n)
        acc = acc + second_diff(u.values, a, g.spacing[a])
        acc = acc + second_diff(u.values, b, g.spacing[b])
        ca = g.axis_mesh(a)
        cb = g.axis_mesh(b)
        z2 = z2 + ca * ca + cb * cb
        acc = acc + 4.0 * (
            sx * cb * first_diff(dt_u, a, g.spacing[a])
            + sy * ca * first_diff(dt_u, b, g.spacing[b])
        )
    acc = acc + 4.0 * z2 * dtt_u
    s = -1.0 if sign == "positive" else 1.0
    return u._new(s * acc)


# ---------------------------------------------------------------------------
# complex fields (H3 frame)
# ---------------------------------------------------------------------------


def _require_complex(u: ScalarField, opname: str) -> None:
    if not u.is_complex:
        raise DimensionMismatchError(
            f"{opname} produces complex values; store the field as complex128 "
            "(real-only storage rejected)"
        )


def apply_Z(u, conv: FieldConvention = H3):
    """Z = d/dz - 2 i zbar d/dtau with d/dz = d/dy_1 - i d/dy_2 (no 1/2 factor)."""
    if conv.name != "h3":
        raise DimensionMismatchError("complex fields are defined on the h3 frame")
    if isinstance(u, PolyField):
        conv.n_of(u.nvars)
        y1 = PolyField.variable(0, 3)
        y2 = PolyField.variable(1, 3)
        zbar = y1 - 1j * y2
        return u.diff(0) - 1j * u.diff(1) + (-2j) * zbar * u.diff(2)
    _require_complex(u, "apply_Z")
    conv.n_of(u.ndim)
    g = u.grid
    d1 = first_diff(u.values, 0, g.spacing[0])
    d2 = first_diff(u.values, 1, g.spacing[1])
    dt = first_diff(u.values, 2, g.spacing[2])
    zbar = g.axis_mesh(0) - 1j * g.axis_mesh(1)
    return u._new(d1 - 1j * d2 - 2j * zbar * dt)


def apply_Zbar(u, conv: FieldConvention = H3):
    """Zbar = d/dzbar + 2 i z d/dtau with d/dzbar = d/dy_1 + i d/dy_2."""
    if conv.name != "h3":
        raise DimensionMismatchError("complex fields are defined on the h3 frame")
    if isinstance(u, PolyField):
        conv.n_of(u.nvars)
        y1 = PolyField.variable(0, 3)
        y2 = PolyField.variable(1, 3)
        z = y1 + 1j * y2
        return u.diff(0) + 1j * u.diff(1) + 2j * z * u.diff(2)
    _require_complex(u, "apply_Zbar")
    conv.n_of(u.ndim)
    g = u.grid
    d1 = first_diff(u.values, 0, g.spacing[0])
    d2 = first_diff(u.values, 1, g.spacing[1])
    dt = first_diff(u.values, 2, g.spacing[2])
    z = g.axis_mesh(0) + 1j * g.axis_mesh(1)
    return u._new(d1 + 1j * d2 + 2j * z * dt)


# ---------------------------------------------------------------------------
# twisted Laplacian and p-sub-Laplacian
# ---------------------------------------------------------------------------


def twisted_laplacian(u: ScalarField, tau: float, angular_sign: int = 1) -> ScalarField:
    """Planar twisted Laplacian at vertical frequency tau:

        L_tau u = -Delta u + 4 |y|^2 tau^2 u + angular_sign * 4 i tau (y_1 d/dy_2 - y_2 d/dy_1) u

    on a 2-d grid with coordinates (y_1, y_2).
    """
    if tau == 0:
        raise ValueError("twisted Laplacian needs tau != 0")
    if angular_sign not in (1, -1):
        raise ValueError("angular_sign must be +1 or -1")
    if u.ndim != 2:
        raise DimensionMismatchError("twisted Laplacian acts on 2-d fields")
    _require_complex(u, "twisted_laplacian")
    g = u.grid
    y1 = g.axis_mesh(0)
    y2 = g.axis_mesh(1)
    lap = second_diff(u.values, 0, g.spacing[0]) + second_diff(u.values, 1, g.spacing[1])
    pot = 4.0 * tau * tau * (y1 * y1 + y2 * y2) * u.values
    ang = (
        4j
        * tau
        * angular_sign
        * (y1 * first_diff(u.values, 1, g.spacing[1]) - y2 * first_diff(u.values, 0, g.spacing[0]))
    )
    return u._new(-lap + pot + ang)


def p_sublaplacian(
    u,
    p: float,
    eps_reg: float | None = None,
    conv: FieldConvention = HN,
):
    """Delta_{H,p} u = div_H(|D_H u|^{p-2} D_H u) with optional regularization.

    The weight is computed as ``(|D_H u|^2 + eps_reg)^{(p-2)/2}``.  Defaults:
    eps_reg = 0 for p >= 2 and 1e-12 for p < 2.  With p < 2 and eps_reg = 0,
    nodes where the horizontal gradient vanishes are collected and reported
    via :class:`SingularGradientError`.
    """
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    if eps_reg is None:
        eps_reg = 0.0 if p >= 2 else 1e-12
    if eps_reg < 0:
        raise ValueError("eps_reg must be nonnegative")
    if isinstance(u, PolyField):
        if p != 4:
            raise DimensionMismatchError(
                "polynomial mode supports the p = 4 case only (integer weight power)"
            )
        grad = horizontal_gradient(u, conv)
        n = len(grad) // 2
        w = None
        for comp in grad:
            sq = comp * comp
            w = sq if w is None else w + sq
        weighted = tuple(w * c for c in grad)
        return horizontal_divergence(weighted, conv)
    grad = horizontal_gradient(u, conv)
    norm2 = np.zeros(u.grid.counts, dtype=float)
    for c in grad.components:
        norm2 += np.abs(c.values) ** 2
    if p < 2 and eps_reg == 0.0:
        sing = np.argwhere(norm2 == 0.0)
        if sing.size:
            raise SingularGradientError([tuple(int(i) for i in row) for row in sing])
    weight = (norm2 + eps_reg) ** ((p - 2.0) / 2.0)
    weighted = HorizontalVectorField(
        tuple(ScalarField(u.grid, weight * c.values) for c in grad.components)
    )
    return horizontal_divergence(weighted, conv)


# ---------------------------------------------------------------------------
# principal symbol
# ---------------------------------------------------------------------------


def _h3_coords(pt: HeisPoint) -> tuple[float, float]:
    if pt.n != 1 or pt.batch_shape != ():
        raise DimensionMismatchError("symbol helpers take a single H_1 point")
    return float(pt.x[0]), float(pt.y[0])


def symbol_L(pt: HeisPoint, covector) -> float:
    """Principal symbol of L at an H_1 point ((y_1, y_2, tau) frame).

    covector = (xi, eta, gamma) dual to (y_1, y_2, tau).
    """
    y1, y2 = _h3_coords(pt)
    xi, eta, gamma = (float(c) for c in covector)
    a = xi - 2.0 * y2 * gamma
    b = eta + 2.0 * y1 * gamma
    return a * a + b * b


def null_covector(pt: HeisPoint, gamma: float = 1.0) -> tuple[float, float, float]:
    """A covector with vanishing symbol at pt: (2 y_2 gamma, -2 y_1 gamma, gamma)."""
    y1, y2 = _h3_coords(pt)
    return (2.0 * y2 * gamma, -2.0 * y1 * gamma, gamma)
