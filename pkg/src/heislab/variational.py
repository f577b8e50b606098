"""Variational toolkit for critical Kirchhoff-type problems on the Heisenberg group.

The energy functional on the truncated (Dirichlet box) horizontal Sobolev
space is

    J(u) = (1/p) * Mprim(T(u)) - lambda * int a(xi) |u|^{r_g} / r_g - (1/p*) int |u|^{p*}

with T(u) = ||D_H u||_p^p + int V |u|^p, Mprim the primitive of the Kirchhoff
coefficient M, and p* = Q p / (Q - p) the critical exponent for the
homogeneous dimension Q = 2n + 2.

Design notes that matter for correctness:

* The discrete gradient is the *exact* gradient of the discrete energy: the
  quasilinear term is assembled as -div_H(|D_H u|^{p-2} D_H u) with the
  divergence stencil the exact negative adjoint of the gradient stencil
  (zero-fill differences), so <gradient(u), v> equals the directional
  derivative of energy at machine precision up to the O(eps^2) of the probe.
* Every term is odd in u through sign(u)|u|^{q-1} factors and even through
  |u|-powers, so energy(-u) == energy(u) and gradient(-u) == -gradient(u)
  hold bitwise.
* Fields must vanish identically on the boundary ring (Dirichlet truncation);
  helpers below build such fields.
* The derivative implemented is the Gateaux derivative of the energy itself,
  i.e. the nonlinear term contributes int a |u|^{r_g-2} u v (not an extra
  factor of u).

The mountain-pass solver deforms a discrete path from 0 to a negative-energy
endpoint: the energy-maximal interior node takes line-searched descent steps
orthogonal to the local path tangent, with periodic arclength re-spacing; the
logged (energy, gradient-norm) sequence is the Palais-Smale sequence the
monitor inspects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .grid import BoxGrid, ScalarField
from .operators import HN, FieldConvention, horizontal_gradient, p_sublaplacian

__all__ = [
    "KirchhoffM",
    "GrowthNonlinearity",
    "KirchhoffProblem",
    "MPResult",
    "FSResult",
    "validate_exponents",
    "zero_boundary",
    "dirichlet_field",
    "random_dirichlet_field",
    "hw_norm",
    "energy",
    "gradient",
    "folland_stein_constant",
    "mp_threshold",
    "ray_scan",
    "mountain_pass_solve",
    "mp_geometry_check",
    "ps_monitor",
]


# ---------------------------------------------------------------------------
# problem data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KirchhoffM:
    """Kirchhoff coefficient M and its closed-form primitive.

    ``nondegenerate``: M(t) = m0 + b t^(kappa-1) with m0 > 0, b >= 0,
    kappa >= 1 (so inf M = m0 > 0).
    ``degenerate``:    M(t) = m1 t^(kappa-1) with m1 > 0, kappa > 1
    (so M(0) = 0).

    Both satisfy kappa * Mprim(t) >= M(t) * t for t >= 0 (with equality for
    the degenerate family); checked numerically on a log-spaced sample at
    construction.
    """

    kind: str
    m0: float = 0.0
    b: float = 0.0
    m1: float = 0.0
    kappa: float = 1.0

    def __post_init__(self) -> None:
        if self.kind == "nondegenerate":
            if not self.m0 > 0:
                raise ValueError("nondegenerate family needs m0 > 0")
            if self.b < 0:
                raise ValueError("nondegenerate family needs b >= 0")
            if self.kappa < 1:
                raise ValueError("nondegenerate family needs kappa >= 1")
        elif self.kind == "degenerate":
            if not self.m1 > 0:
                raise ValueError("degenerate family needs m1 > 0")
            if not self.kappa > 1:
                raise ValueError("degenerate family needs kappa > 1")
        else:
            raise ValueError(f"unknown Kirchhoff kind {self.kind!r}")
        ts = np.logspace(-6, 6, 25)
        prim = self.kappa * np.array([self.primitive(t) for t in ts])
        mt = np.array([self.m(t) for t in ts]) * ts
        scale = np.maximum(np.abs(prim), np.abs(mt)) + 1.0
        if np.min((prim - mt) / scale) < -1e-12:
            raise ValueError("kappa * Mprim(t) >= M(t) t fails on the sample")

    @classmethod
    def nondegenerate(cls, m0: float, b: float = 0.0, kappa: float = 1.0) -> "KirchhoffM":
        return cls("nondegenerate", m0=float(m0), b=float(b), kappa=float(kappa))

    @classmethod
    def degenerate(cls, m1: float, kappa: float) -> "KirchhoffM":
        return cls("degenerate", m1=float(m1), kappa=float(kappa))

    def m(self, t: float) -> float:
        t = float(t)
        if t < 0:
            raise ValueError("M is defined on [0, infinity)")
        if self.kind == "nondegenerate":
            return self.m0 + self.b * t ** (self.kappa - 1.0)
        return self.m1 * t ** (self.kappa - 1.0)

    def primitive(self, t: float) -> float:
        """Mprim(t) = integral of M from 0 to t, in closed form."""
        t = float(t)
        if t < 0:
            raise ValueError("Mprim is defined on [0, infinity)")
        if self.kind == "nondegenerate":
            return self.m0 * t + self.b * t ** self.kappa / self.kappa
        return self.m1 * t ** self.kappa / self.kappa

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "kappa": self.kappa}
        if self.kind == "nondegenerate":
            out.update(m0=self.m0, b=self.b)
        else:
            out.update(m1=self.m1)
        return out


@dataclass(frozen=True)
class GrowthNonlinearity:
    """Power nonlinearity f(xi, t) = a(xi) |t|^{r_g - 2} t with AR exponent theta.

    ``weight`` is a nonnegative bounded a(xi): a constant or a callable taking
    the grid coordinate meshes.  theta <= r_g is enforced: for the power
    nonlinearity the superlinearity inequality theta * F <= f * t (t > 0)
    holds exactly when theta <= r_g.
    """

    r_g: float
    theta: float
    weight: float | Callable = 1.0

    def __post_init__(self) -> None:
        if not self.r_g > 1:
            raise ValueError("growth exponent r_g must exceed 1")
        if not 0 < self.theta <= self.r_g:
            raise ValueError(
                "superlinearity needs 0 < theta <= r_g "
                f"(got theta={self.theta}, r_g={self.r_g})"
            )
        if not callable(self.weight) and float(self.weight) < 0:
            raise ValueError("weight must be nonnegative")

    def weight_values(self, grid: BoxGrid):
        return _profile_values(self.weight, grid, "weight", minimum=0.0)

    def f(self, a, uvals: np.ndarray) -> np.ndarray:
        return a * np.sign(uvals) * np.abs(uvals) ** (self.r_g - 1.0)

    def big_f(self, a, uvals: np.ndarray) -> np.ndarray:
        return a * np.abs(uvals) ** self.r_g / self.r_g

    def to_dict(self) -> dict:
        return {
            "r_g": self.r_g,
            "theta": self.theta,
            "weight": "callable" if callable(self.weight) else float(self.weight),
        }


def _profile_values(spec, grid: BoxGrid, name: str, minimum: float | None = None):
    """Evaluate a constant-or-callable coefficient on the grid."""
    if callable(spec):
        vals = np.broadcast_to(np.asarray(spec(*grid.meshes()), dtype=float), grid.counts)
        if minimum is not None and float(np.min(vals)) < minimum:
            raise ValueError(f"{name} drops below its lower bound {minimum} on the grid")
        return np.array(vals)
    v = float(spec)
    if minimum is not None and v < minimum:
        raise ValueError(f"{name} drops below its lower bound {minimum}")
    return v


@dataclass(frozen=True)
class KirchhoffProblem:
    """Critical Kirchhoff problem data on a Dirichlet-truncated box.

    Fields: group size n (Q = 2n + 2), exponent p in (1, Q), parameter
    lambda >= 0, Kirchhoff coefficient, growth nonlinearity, potential
    V >= v0 > 0 (constant or callable on the meshes), and the computational
    grid (2n + 1 dimensional).  p* is computed, never stored.
    """

    n: int
    p: float
    lam: float
    kirchhoff: KirchhoffM
    nonlinearity: GrowthNonlinearity
    grid: BoxGrid
    potential: float | Callable = 1.0
    v0: float | None = None
    conv: FieldConvention = HN

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if not 1 < self.p < self.Q:
            raise ValueError(f"need 1 < p < Q = {self.Q}, got p = {self.p}")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.grid.ndim != 2 * self.n + 1:
            raise ValueError(
                f"grid must be {2 * self.n + 1}-dimensional for n = {self.n}"
            )
        if self.v0 is None:
            if callable(self.potential):
                raise ValueError("callable potentials need an explicit lower bound v0")
            object.__setattr__(self, "v0", float(self.potential))
        if not self.v0 > 0:
            raise ValueError("need v0 > 0")
        _profile_values(self.potential, self.grid, "potential", minimum=self.v0 - 1e-12)
        self.nonlinearity.weight_values(self.grid)

    @property
    def Q(self) -> int:
        return 2 * self.n + 2

    @property
    def p_star(self) -> float:
        return self.Q * self.p / (self.Q - self.p)

    def potential_values(self):
        return _profile_values(self.potential, self.grid, "potential", minimum=0.0)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "Q": self.Q,
            "p": self.p,
            "p_star": self.p_star,
            "lambda": self.lam,
            "kirchhoff": self.kirchhoff.to_dict(),
            "nonlinearity": self.nonlinearity.to_dict(),
            "potential": "callable" if callable(self.potential) else float(self.potential),
            "v0": self.v0,
            "grid": self.grid.descriptor(),
            "convention": self.conv.name,
        }


def validate_exponents(problem: KirchhoffProblem) -> dict:
    """Itemized pass/fail report on the exponent windows (report-only)."""
    p, Q, ps = problem.p, problem.Q, problem.p_star
    kappa = problem.kirchhoff.kappa
    r_g = problem.nonlinearity.r_g
    theta = problem.nonlinearity.theta
    checks = {
        "p_below_Q": p < Q,
        "kappa_window": 1.0 <= kappa < ps / p,
        "growth_window": p * kappa < r_g < ps,
        "ar_window": p * kappa < theta < ps,
        "ar_compatible": theta <= r_g,
    }
    return {
        "checks": checks,
        "all_ok": all(checks.values()),
        "values": {
            "Q": Q,
            "p": p,
            "p_star": ps,
            "p_kappa": p * kappa,
            "kappa": kappa,
            "r_g": r_g,
            "theta": theta,
        },
    }


# ---------------------------------------------------------------------------
# admissible fields
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _boundary_mask(counts: tuple) -> np.ndarray:
    mask = np.zeros(counts, dtype=bool)
    for ax in range(len(counts)):
        sl = [slice(None)] * len(counts)
        sl[ax] = 0
        mask[tuple(sl)] = True
        sl[ax] = -1
        mask[tuple(sl)] = True
    mask.setflags(write=False)
    return mask


def zero_boundary(u: ScalarField) -> ScalarField:
    """Return u with the boundary ring set to exact zeros."""
    vals = u.values.copy()
    vals[_boundary_mask(u.grid.counts)] = 0.0
    return ScalarField(u.grid, vals)


def dirichlet_field(grid: BoxGrid, fn) -> ScalarField:
    """Evaluate fn on the coordinate meshes and zero the boundary ring."""
    vals = np.asarray(fn(*grid.meshes()), dtype=float)
    vals = np.array(np.broadcast_to(vals, grid.counts))
    vals[_boundary_mask(grid.counts)] = 0.0
    return ScalarField(grid, vals)


def random_dirichlet_field(
    grid: BoxGrid, seed: int = 0, bumps: int = 3, rough: float = 0.0
) -> ScalarField:
    """Random superposition of Gaussian bumps (plus optional node noise)."""
    rng = np.random.default_rng(seed)
    meshes = grid.meshes()
    vals = np.zeros(grid.counts)
    spans = [hi - lo for lo, hi in zip(grid.lo, grid.hi)]
    for _ in range(max(1, bumps)):
        expo = np.zeros(grid.counts)
        for mesh, lo, hi, span in zip(meshes, grid.lo, grid.hi, spans):
            center = rng.uniform(lo + 0.3 * span, hi - 0.3 * span)
            width = rng.uniform(0.08, 0.25) * span
            expo += ((mesh - center) / width) ** 2
        vals += rng.normal() * np.exp(-expo)
    if rough > 0:
        vals += rough * rng.standard_normal(grid.counts)
    vals[_boundary_mask(grid.counts)] = 0.0
    return ScalarField(grid, vals)


def _check_admissible(u: ScalarField, problem: KirchhoffProblem) -> None:
    if u.grid != problem.grid:
        raise ValueError("field lives on a different grid than the problem")
    if u.is_complex:
        raise ValueError("the energy functional is defined for real fields")
    ring = u.values[_boundary_mask(u.grid.counts)]
    if np.any(ring != 0.0):
        raise ValueError(
            "Dirichlet truncation requires exact zeros on the boundary ring; "
            "build fields with dirichlet_field / zero_boundary"
        )


# ---------------------------------------------------------------------------
# energy, norm, gradient
# ---------------------------------------------------------------------------


def _norm_terms(u: ScalarField, problem: KirchhoffProblem) -> tuple[float, float]:
    """(||D_H u||_p^p, int V |u|^p) by grid quadrature."""
    w = u.grid.cell_volume
    grad = horizontal_gradient(u, problem.conv)
    norm2 = np.zeros(u.grid.counts)
    for c in grad.components:
        norm2 += c.values * c.values
    s = float(np.sum(norm2 ** (problem.p / 2.0)) * w)
    V = problem.potential_values()
    pot = float(np.sum(V * np.abs(u.values) ** problem.p) * w)
    return s, pot


def hw_norm(u: ScalarField, problem: KirchhoffProblem) -> float:
    """Discrete HW_V^{1,p} norm (||D_H u||_p^p + int V |u|^p)^{1/p}."""
    _check_admissible(u, problem)
    s, pot = _norm_terms(u, problem)
    return float((s + pot) ** (1.0 / problem.p))


def energy(u: ScalarField, problem: KirchhoffProblem) -> float:
    """J(u) = Mprim(T)/p - lambda * int a F(u) - (1/p*) int |u|^{p*}."""
    _check_admissible(u, problem)
    w = u.grid.cell_volume
    s, pot = _norm_terms(u, problem)
    term_m = problem.kirchhoff.primitive(s + pot) / problem.p
    a = problem.nonlinearity.weight_values(problem.grid)
    term_f = float(np.sum(problem.nonlinearity.big_f(a, u.values)) * w)
    term_c = float(np.sum(np.abs(u.values) ** problem.p_star) * w) / problem.p_star
    return term_m - problem.lam * term_f - term_c


def gradient(u: ScalarField, problem: KirchhoffProblem) -> ScalarField:
    """Exact gradient of the discrete energy, projected onto the Dirichlet ring.

    <gradient(u), v>_{L^2} equals the directional derivative of energy(u) in
    any ring-zero direction v: the quasilinear part is the exact adjoint
    -div_H(|D_H u|^{p-2} D_H u) of the energy's gradient stencil.
    """
    _check_admissible(u, problem)
    p, ps = problem.p, problem.p_star
    s, pot = _norm_terms(u, problem)
    mval = problem.kirchhoff.m(s + pot)
    ap = -p_sublaplacian(u, p, conv=problem.conv).values
    V = problem.potential_values()
    a = problem.nonlinearity.weight_values(problem.grid)
    au = np.abs(u.values)
    sg = np.sign(u.values)
    core = (
        mval * (ap + V * sg * au ** (p - 1.0))
        - problem.lam * problem.nonlinearity.f(a, u.values)
        - sg * au ** (ps - 1.0)
    )
    core[_boundary_mask(u.grid.counts)] = 0.0
    return ScalarField(u.grid, core)


# ---------------------------------------------------------------------------
# Folland-Stein quotient
# ---------------------------------------------------------------------------


@dataclass
class FSResult:
    """Outcome of the Sobolev-quotient descent (an upper bound on the infimum)."""

    value: float
    minimizer: ScalarField
    history: list[float]
    monotone: bool
    stagnated: bool
    iterations: int
    p: float
    p_star: float

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "iterations": self.iterations,
            "monotone": self.monotone,
            "stagnated": self.stagnated,
            "p": self.p,
            "p_star": self.p_star,
            "history_first": self.history[0] if self.history else None,
            "history_last": self.history[-1] if self.history else None,
        }


def folland_stein_constant(
    grid: BoxGrid,
    p: float,
    iters: int = 400,
    seed: int = 0,
    conv: FieldConvention = HN,
) -> FSResult:
    """Minimize ||D_H u||_p^p / ||u||_{p*}^p over ring-zero grid fields.

    Normalized projected gradient descent from a randomized bump.  Truncation
    and discretization both bias the value upward, so this is an upper bound
    on the continuum best constant; the history is a monotone-descent
    certificate.
    """
    n = conv.n_of(grid.ndim)
    Q = 2 * n + 2
    if not 1 < p < Q:
        raise ValueError(f"need 1 < p < Q = {Q}")
    p_star = Q * p / (Q - p)
    w = grid.cell_volume
    mask = _boundary_mask(grid.counts)

    def quotient_parts(vals: np.ndarray) -> tuple[float, float]:
        fld = ScalarField(grid, vals)
        grad = horizontal_gradient(fld, conv)
        norm2 = np.zeros(grid.counts)
        for c in grad.components:
            norm2 += c.values * c.values
        num = float(np.sum(norm2 ** (p / 2.0)) * w)
        den = float(np.sum(np.abs(vals) ** p_star) * w) ** (p / p_star)
        return num, den

    u = random_dirichlet_field(grid, seed=seed, bumps=2).values
    u = u / float(np.sum(np.abs(u) ** p_star) * w) ** (1.0 / p_star)
    num, den = quotient_parts(u)
    q = num / den
    history = [q]
    step = 0.5
    stagnated = False
    it = 0
    for it in range(1, iters + 1):
        fld = ScalarField(grid, u)
        ap = -p_sublaplacian(fld, p, conv=conv).values
        crit = np.sign(u) * np.abs(u) ** (p_star - 1.0)
        # u is kept ||u||_{p*} = 1, so the quotient gradient reduces to this:
        g = p * (ap - q * crit)
        g[mask] = 0.0
        gn2 = float(np.sum(g * g) * w)
        if gn2 == 0.0:
            break
        accepted = False
        while step > 1e-16:
            trial = u - step * g
            trial = trial / float(np.sum(np.abs(trial) ** p_star) * w) ** (1.0 / p_star)
            tn, td = quotient_parts(trial)
            tq = tn / td
            if tq < q - 1e-12 * (1.0 + abs(q)):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            stagnated = True
            break
        u, q = trial, tq
        history.append(q)
        step = min(step * 2.0, 1e3)
    monotone = bool(np.all(np.diff(history) <= 1e-12 * (1.0 + np.abs(history[:-1]))))
    return FSResult(
        value=float(q),
        minimizer=ScalarField(grid, u),
        history=[float(v) for v in history],
        monotone=monotone,
        stagnated=stagnated,
        iterations=it,
        p=p,
        p_star=p_star,
    )


# ---------------------------------------------------------------------------
# mountain-pass pieces
# ---------------------------------------------------------------------------


def mp_threshold(
    problem: KirchhoffProblem, fs_constant: float, m_coef: float | None = None
) -> float:
    """Compactness threshold (1/theta - 1/p*) * (coef * C^pow)^{p*/(p* - p pow)}.

    Nondegenerate: coef = m0, pow = 1.  Degenerate: pow = kappa and coef
    defaults to the family's own coefficient m1 (a degenerate family has no
    m0); pass m_coef to substitute any other coefficient in either case.
    """
    theta = problem.nonlinearity.theta
    ps = problem.p_star
    if theta >= ps:
        raise ValueError("theta >= p* makes the threshold prefactor nonpositive")
    pref = 1.0 / theta - 1.0 / ps
    K = problem.kirchhoff
    if K.kind == "nondegenerate":
        coef = K.m0 if m_coef is None else float(m_coef)
        base = coef * fs_constant
        expo = ps / (ps - problem.p)
    else:
        if ps <= problem.p * K.kappa:
            raise ValueError("degenerate threshold needs p* > p * kappa")
        coef = K.m1 if m_coef is None else float(m_coef)
        base = coef * fs_constant ** K.kappa
        expo = ps / (ps - problem.p * K.kappa)
    return pref * base ** expo


def ray_scan(
    v0: ScalarField, problem: KirchhoffProblem, t_max: float = 8.0, steps: int = 200
) -> dict:
    """Profile of t -> J(t v0) for a unit-HW-norm direction.

    Returns the sampled profile, the maximizing t_peak, the first t with
    J < 0 (mountain-pass endpoint), and whether the tail past the peak is
    strictly decreasing.  Raises if no sign change occurs before t_max.
    """
    nv = hw_norm(v0, problem)
    if abs(nv - 1.0) > 1e-8:
        raise ValueError(f"v0 must have unit HW norm (got {nv:.6g})")
    if steps < 8:
        raise ValueError("need at least 8 steps")
    ts = np.linspace(0.0, float(t_max), steps + 1)
    js = np.array([energy(ScalarField(v0.grid, t * v0.values), problem) for t in ts])
    ipk = int(np.argmax(js))
    neg = np.nonzero(js < 0.0)[0]
    if neg.size == 0:
        raise ValueError(
            f"J(t v0) stays nonnegative up to t_max = {t_max}; enlarge t_max "
            "(the functional is unbounded below along every ray)"
        )
    return {
        "ts": [float(t) for t in ts],
        "energies": [float(j) for j in js],
        "t_peak": float(ts[ipk]),
        "j_peak": float(js[ipk]),
        "t_negative": float(ts[neg[0]]),
        "tail_decreasing": bool(np.all(np.diff(js[ipk:]) < 0.0)),
    }


@dataclass
class MPResult:
    """Mountain-pass outcome: approximate critical point plus the PS log."""

    u_star: ScalarField
    energy: float
    gradient_norm: float
    energies: list[float]
    gradient_norms: list[float]
    norms: list[float]
    threshold: float
    flags: dict
    iterations: int
    stagnated: bool
    tol: float

    def __post_init__(self) -> None:
        if not (len(self.energies) == len(self.gradient_norms) == len(self.norms)):
            raise ValueError("PS log columns must share one length")
        if any(g < 0 for g in self.gradient_norms):
            raise ValueError("gradient norms must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "gradient_norm": self.gradient_norm,
            "iterations": self.iterations,
            "stagnated": self.stagnated,
            "tol": self.tol,
            "threshold": self.threshold,
            "flags": dict(self.flags),
            "u_star_sup": float(np.max(np.abs(self.u_star.values))),
            "log_length": len(self.energies),
            "energies": list(self.energies),
            "gradient_norms": list(self.gradient_norms),
            "norms": list(self.norms),
        }


def _respace(path: list[np.ndarray], norm) -> list[np.ndarray]:
    """Re-distribute interior nodes uniformly in polygonal arclength."""
    m = len(path) - 1
    seglen = [norm(path[i + 1] - path[i]) for i in range(m)]
    total = sum(seglen)
    if total <= 0:
        return path
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    out = [path[0]]
    for i in range(1, m):
        target = total * i / m
        j = int(np.searchsorted(cum, target, side="right") - 1)
        j = min(max(j, 0), m - 1)
        frac = (target - cum[j]) / seglen[j] if seglen[j] > 0 else 0.0
        out.append(path[j] + frac * (path[j + 1] - path[j]))
    out.append(path[m])
    return out


def _path_descent(
    j_fn,
    grad_fn,
    path: list[np.ndarray],
    inner,
    tol: float | None = None,
    tol_factor: float = 5e-5,
    max_iter: int = 20000,
    c1: float = 1e-4,
    respace_every: int = 10,
    climb: bool = True,
) -> dict:
    """Deform a discrete path (fixed endpoints) until the max node is critical.

    Each iteration acts on the energy-maximal interior node.  While the path
    is slack, the node descends along the negative gradient with its
    path-tangent component removed, under an Armijo line search with two
    safeguards for functionals that are unbounded below: the displacement is
    capped at the local segment scale, and the node may not sink below the
    lower of its two neighbors (past that level it no longer carries the path
    maximum, and descending it further only drags the path off the ridge).
    Nodes are re-spaced by arclength periodically and whenever segment
    lengths grow uneven.

    Once descent is blocked by those fences the path has tightened onto the
    ridge, and the max node switches to saddle refinement: a climbing step
    along the gradient with its tangential component reversed, accepted on
    strict gradient-norm decrease.  The reflected-gradient flow has an
    index-1 saddle as an attracting fixed point, which drives the gradient
    norm to the tolerance instead of plateauing at the path resolution.
    """
    if len(path) < 3:
        raise ValueError("path needs at least one interior node")
    path = [np.asarray(q, dtype=float).copy() for q in path]

    def norm(x):
        return math.sqrt(max(inner(x, x), 0.0))

    js = [j_fn(q) for q in path]
    energies, grad_norms, norms = [], [], []
    alpha = 1.0
    beta = 1.0
    converged = False
    stagnated = False
    climbing = False
    istar = 1
    it = 0
    path_steps = 0
    for it in range(1, max_iter + 1):
        istar = 1 + int(np.argmax(js[1:-1]))
        u = path[istar]
        g = grad_fn(u)
        gn = norm(g)
        energies.append(float(js[istar]))
        grad_norms.append(float(gn))
        norms.append(float(norm(u)))
        if tol is None:
            tol = tol_factor * gn
        if gn <= tol:
            converged = True
            break
        tan = path[istar + 1] - path[istar - 1]
        tn2 = inner(tan, tan)
        local = 0.5 * (
            norm(path[istar + 1] - path[istar]) + norm(path[istar] - path[istar - 1])
        )

        # path mode: fenced perpendicular descent of the max node
        descended = False
        if not climbing:
            d = g - (inner(g, tan) / tn2) * tan if tn2 > 0 else g.copy()
            dn2 = inner(d, d)
            if dn2 > (1e-3 * gn) ** 2 and math.isfinite(dn2):
                j0 = js[istar]
                floor = min(js[istar - 1], js[istar + 1])
                step = min(alpha, local / math.sqrt(dn2)) if local > 0 else alpha
                while step > 1e-16:
                    trial = u - step * d
                    jt = j_fn(trial)
                    if math.isfinite(jt) and floor <= jt <= j0 - c1 * step * dn2:
                        descended = True
                        break
                    step *= 0.5
                if descended and step * math.sqrt(dn2) < 1e-8 * max(local, 1e-30):
                    # the fences only admit a displacement far below the path
                    # resolution: that is creep, not progress -- the path is
                    # taut
                    descended = False
        if descended:
            path[istar] = trial
            js[istar] = jt
            alpha = min(step * 2.0, 2.0)
            path_steps += 1
            seglen = [norm(path[i + 1] - path[i]) for i in range(len(path) - 1)]
            uneven = min(seglen) <= 0 or max(seglen) > 3.0 * min(seglen)
            if uneven or (respace_every and path_steps % respace_every == 0):
                path = _respace(path, norm)
                js = [j_fn(q) for q in path]
            continue

        # refinement mode: climbing step, accepted on gradient-norm decrease.
        # Entered once perpendicular descent of the max node is blocked (the
        # path is taut); the designation is permanent, as in climbing-image
        # path methods, so descent and refinement cannot undo each other.
        if not climb:
            stagnated = True
            break
        climbing = True
        if tn2 > 0:
            that = tan / math.sqrt(tn2)
            force = g - 2.0 * inner(g, that) * that
        else:
            force = g
        fn = norm(force)
        if fn <= 0.0 or not math.isfinite(fn):
            stagnated = True
            break
        step = min(beta, local / fn) if local > 0 else beta
        refined = False
        for _ in range(40):
            if step <= 1e-16:
                break
            trial = u - step * force
            gtn = norm(grad_fn(trial))
            if math.isfinite(gtn) and gtn < gn:
                refined = True
                break
            step *= 0.5
        if not refined:
            stagnated = True
            break
        path[istar] = trial
        js[istar] = j_fn(trial)
        beta = min(step * 2.0, 2.0)
    return {
        "path": path,
        "u_star": path[istar],
        "energy": energies[-1] if energies else js[istar],
        "gradient_norm": grad_norms[-1] if grad_norms else 0.0,
        "energies": energies,
        "gradient_norms": grad_norms,
        "norms": norms,
        "converged": converged,
        "stagnated": stagnated,
        "iterations": it,
        "tol": tol if tol is not None else 0.0,
    }


def _ray_peak(j_fn, w: np.ndarray, t_init: float = 1.0) -> tuple[float, float]:
    """Maximize t -> j_fn(t w) over t > 0: coarse geometric scan, then golden.

    For the energies handled here the ray profile rises from 0 and is
    eventually unbounded below, so a positive peak always exists.
    """
    t0 = max(float(t_init), 1e-300)
    lo, hi = t0 / 8.0, t0 * 8.0
    for _ in range(60):
        ts = np.geomspace(lo, hi, 25)
        vals = np.array([j_fn(t * w) for t in ts])
        i = int(np.argmax(vals))
        if i == 0:
            hi, lo = ts[1], lo / 256.0
        elif i == len(ts) - 1:
            lo, hi = ts[-2], hi * 256.0
        else:
            lo, hi = ts[i - 1], ts[i + 1]
            break
    else:
        raise RuntimeError("ray peak bracketing failed")
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = math.log(lo), math.log(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = j_fn(math.exp(c) * w)
    fd = j_fn(math.exp(d) * w)
    for _ in range(60):
        if b - a <= 1e-12:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = j_fn(math.exp(c) * w)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = j_fn(math.exp(d) * w)
    t_star = math.exp(0.5 * (a + b))
    return t_star, j_fn(t_star * w)


def _nehari_descent(
    j_fn,
    grad_fn,
    inner,
    u0: np.ndarray,
    tol: float,
    max_iter: int,
    energy_window: int = 10,
    energy_tol: float = 1e-6,
) -> dict:
    """Gradient descent constrained to the ray-peak (Nehari) set.

    Every iterate is rescaled to the peak of its own ray, so its energy is a
    path-maximum level (positive once past the ridge geometry) and descent
    cannot escape toward the functional's unbounded-below region.  At the
    constrained minimum the ray-peak constraint is natural and the full
    gradient vanishes, so the loop drives the plain gradient norm to ``tol``.
    Convergence additionally requires the logged energy tail to be Cauchy
    over ``energy_window`` iterations (the certificate ps_monitor checks),
    so the returned log is a complete PS-sequence record.
    """

    def norm(x):
        return math.sqrt(max(inner(x, x), 0.0))

    t_star, j0 = _ray_peak(j_fn, u0, 1.0)
    u = t_star * u0
    energies, grad_norms, norms = [], [], []
    step = 1.0
    converged = False
    stagnated = False
    it = 0
    for it in range(1, max_iter + 1):
        g = grad_fn(u)
        gn = norm(g)
        energies.append(float(j0))
        grad_norms.append(float(gn))
        norms.append(float(norm(u)))
        if gn <= tol and len(energies) >= 3:
            tail = energies[-energy_window:]
            if max(tail) - min(tail) <= energy_tol * (1.0 + abs(energies[-1])):
                converged = True
                break
        accepted = False
        s = step
        for _ in range(60):
            if s <= 1e-18:
                break
            w = u - s * g
            nw = norm(w)
            if nw > 0 and math.isfinite(nw):
                t_s, j_s = _ray_peak(j_fn, w, 1.0)
                if math.isfinite(j_s) and j_s < j0 - 1e-14 * (1.0 + abs(j0)):
                    u = t_s * w
                    j0 = j_s
                    accepted = True
                    break
            s *= 0.5
        if not accepted:
            stagnated = True
            break
        step = min(s * 2.0, 1e3)
    return {
        "u_star": u,
        "energy": j0,
        "gradient_norm": grad_norms[-1] if grad_norms else 0.0,
        "energies": energies,
        "gradient_norms": grad_norms,
        "norms": norms,
        "converged": converged,
        "stagnated": stagnated,
        "iterations": it,
    }


def mountain_pass_solve(
    problem: KirchhoffProblem,
    e: ScalarField,
    nodes: int = 9,
    tol: float | None = None,
    max_iter: int = 20000,
    threshold: float = math.nan,
) -> MPResult:
    """Numerical mountain pass: deform the segment path 0 -> e to a saddle.

    Preconditions: energy(e) < 0 and e != 0 (the endpoint lies beyond the
    mountain ridge).  Two phases share the iteration budget and the PS log:
    fenced path deformation tightens the discrete path onto the ridge, then
    ray-peak-constrained descent from the max node drives the gradient norm
    to the tolerance.  Default tolerance targets a 2e4-fold reduction of the
    initial max-node gradient norm.  ``threshold`` is stored for reporting;
    compare against :func:`mp_threshold`.
    """
    je = energy(e, problem)
    if not je < 0:
        raise ValueError(f"endpoint must have negative energy (got J = {je:.6g})")
    if hw_norm(e, problem) == 0:
        raise ValueError("endpoint must be nonzero")
    if nodes < 3:
        raise ValueError("need at least 3 path nodes")
    grid = problem.grid
    w = grid.cell_volume

    def j_fn(vec: np.ndarray) -> float:
        return energy(ScalarField(grid, vec.reshape(grid.counts)), problem)

    def grad_fn(vec: np.ndarray) -> np.ndarray:
        return gradient(ScalarField(grid, vec.reshape(grid.counts)), problem).values.ravel()

    def inner(xv: np.ndarray, yv: np.ndarray) -> float:
        return float(np.dot(xv, yv) * w)

    base = e.values.ravel()
    path = [(i / (nodes - 1)) * base for i in range(nodes)]
    out = _path_descent(
        j_fn, grad_fn, path, inner, tol=tol, max_iter=max_iter, climb=False
    )
    energies = list(out["energies"])
    grad_norms = list(out["gradient_norms"])
    norms = list(out["norms"])
    final = {
        "u_star": out["u_star"],
        "energy": out["energy"],
        "gradient_norm": out["gradient_norm"],
        "converged": out["converged"],
        "stagnated": out["stagnated"],
        "iterations": out["iterations"],
    }
    budget_left = max_iter - out["iterations"]
    if not out["converged"] and budget_left > 0:
        fine = _nehari_descent(
            j_fn, grad_fn, inner, out["u_star"], out["tol"], budget_left
        )
        energies += fine["energies"]
        grad_norms += fine["gradient_norms"]
        norms += fine["norms"]
        final = {
            "u_star": fine["u_star"],
            "energy": fine["energy"],
            "gradient_norm": fine["gradient_norm"],
            "converged": fine["converged"],
            "stagnated": fine["stagnated"],
            "iterations": out["iterations"] + fine["iterations"],
        }
    u_star = ScalarField(grid, final["u_star"].reshape(grid.counts))
    flags = {
        "converged": final["converged"],
        "positive_norm": hw_norm(u_star, problem) > 1e-10,
        "positive_energy": final["energy"] > 0.0,
        "below_threshold": bool(final["energy"] < threshold)
        if math.isfinite(threshold)
        else None,
    }
    return MPResult(
        u_star=u_star,
        energy=final["energy"],
        gradient_norm=final["gradient_norm"],
        energies=energies,
        gradient_norms=grad_norms,
        norms=norms,
        threshold=threshold,
        flags=flags,
        iterations=final["iterations"],
        stagnated=final["stagnated"],
        tol=out["tol"],
    )


def mp_geometry_check(
    problem: KirchhoffProblem,
    samples: int = 24,
    rhos: tuple[float, ...] | None = None,
    seed: int = 0,
) -> dict:
    """Sampled mountain-ridge certificate: largest rho with min J on the
    HW-sphere of radius rho positive; alpha = half that minimum.

    A sampled certificate, not a proof; ``ok`` False signals exponent or
    parameter misconfiguration (no ridge found on the candidate spheres).
    """
    if rhos is None:
        rhos = tuple(2.0 ** (-i) for i in range(0, 11))
    else:
        rhos = tuple(sorted((float(r) for r in rhos), reverse=True))
    if any(r <= 0 for r in rhos):
        raise ValueError("sphere radii must be positive")
    pool = []
    for i in range(samples):
        fld = random_dirichlet_field(
            problem.grid, seed=seed + 7 * i, bumps=1 + i % 3,
            rough=0.0 if i % 4 else 0.02,
        )
        nv = hw_norm(fld, problem)
        if nv > 0:
            pool.append(fld.values / nv)
    table = []
    for rho in rhos:
        jmin = min(
            energy(ScalarField(problem.grid, rho * vals), problem) for vals in pool
        )
        table.append({"rho": float(rho), "min_energy": float(jmin), "positive": jmin > 0})
        if jmin > 0:
            return {
                "ok": True,
                "rho": float(rho),
                "alpha": float(jmin / 2.0),
                "samples": len(pool),
                "table": table,
            }
    return {"ok": False, "rho": None, "alpha": None, "samples": len(pool), "table": table}


def ps_monitor(
    result: MPResult,
    threshold: float | None = None,
    energy_window: int = 10,
    energy_tol: float = 1e-6,
) -> dict:
    """Palais-Smale bookkeeping on an MPResult log.

    Flags: energies Cauchy over the tail window, gradient norms down to the
    solver tolerance, iterate norms bounded, and final energy strictly below
    the compactness threshold (when one is available).
    """
    es = np.asarray(result.energies, dtype=float)
    gs = np.asarray(result.gradient_norms, dtype=float)
    ns = np.asarray(result.norms, dtype=float)
    if es.size >= 3:
        tail = es[-min(energy_window, es.size):]
        energies_converged = bool(
            np.max(tail) - np.min(tail) <= energy_tol * (1.0 + abs(float(es[-1])))
        )
    else:
        energies_converged = False
    gradients_converged = bool(
        gs.size > 0 and result.tol > 0 and gs[-1] <= result.tol
    )
    norms_bounded = bool(ns.size > 0 and np.all(np.isfinite(ns)) and np.max(ns) < 1e6)
    thr = result.threshold if threshold is None else float(threshold)
    if thr is not None and math.isfinite(thr):
        below = bool(result.energy < thr)
        window = {"energy": result.energy, "threshold": thr, "below": below}
    else:
        below = None
        window = {"energy": result.energy, "threshold": None, "below": None}
    return {
        "energies_converged": energies_converged,
        "gradients_converged": gradients_converged,
        "norms_bounded": norms_bounded,
        "below_threshold": below,
        "window": window,
        "all_ok": bool(energies_converged and gradients_converged and norms_bounded),
    }
