"""Spectral verification lab for the twisted Laplacian and the sub-Laplacian.

What lives here:

* sparse assembly of the twisted operator
  ``L_tau = -Delta + 4 |y|^2 tau^2 + angular_sign * 4 i tau (y_1 d/dy_2 - y_2 d/dy_1)``
  on a Dirichlet box (Hermitian by construction).  The assembled matrix uses
  a gauge-invariant link-phase discretization: complex phases on the hop
  terms carry the whole vector potential, which keeps each Landau level a
  single tight band.  (A naive centered-difference splitting shifts states
  by O((m h)^2) with their angular momentum m, fanning every level into a
  gapless smear that no clustering can segment.)  The centered-difference
  form survives in ``fiber_parts``/``twisted_laplacian``, where the
  polynomial dependence on tau and the exact match with the 3-d
  sub-Laplacian stencil are what matter;
* an iterative lowest-eigenvalue driver with a dense fallback;
* Landau-ladder structure detection: eigenvalue clustering, population
  filtering (Dirichlet edge states sprinkle small clusters into the spectral
  gaps), and the least-squares ladder constant ``kappa0`` in
  ``center_k = kappa0 * (2k+1) * |tau|``;
* the adjudicated eigenfunction family: the raw Fourier-Wigner family
  ``e_{j,k,tau}`` is *not* an eigenfamily of the twisted Laplacian as-is, but
  its symplectic rescaling ``(q, p) -> (s q, p / s)`` with ``s = 2`` is, with
  eigenvalue ``4 |tau| (2k+1)``.  ``convention_search`` adjudicates the scaling
  and the angular sign empirically over a candidate set;
* Gram matrices of the family (orthogonality is exact; the raw
  normalization gives every member L^2 norm 1/2, which is recorded and divided
  out);
* Weyl sequences witnessing [0, inf) as spectrum of the full sub-Laplacian:
  ``u_m = phi(z) e^{i tau_0 t} exp(-t^2 / (2 sigma_m^2))`` with the vertical
  factor integrated analytically, so the reported residuals are exact for the
  semi-discrete operator (discrete in z, continuum in t);
* the vertical-transform bridge sign: with the unitary transform pair of this
  package, ``(L u)-check(tau) = L_tau-with-angular-sign(-1) u-check(tau)``.

Eigenvalues of every assembled operator are real (Hermitian matrices); reports
carry them sorted ascending.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import (
    NoConventionFoundError,
    StructureMismatchError,
)
from .grid import BoxGrid, ScalarField
from .hermite import Profile1D, fourier_wigner_table
from .operators import HN, FieldConvention, sublaplacian, twisted_laplacian

__all__ = [
    "ConventionChoice",
    "GramResult",
    "LadderFit",
    "SpectralReport",
    "WeylProbeResult",
    "assemble_twisted",
    "lowest_eigenvalues",
    "cluster_eigenvalues",
    "landau_structure_fit",
    "tabulate_eigenfunction",
    "eigenfunction_residual",
    "convention_search",
    "gram_matrix",
    "weyl_probe",
    "vertical_bridge_sign",
]


# ---------------------------------------------------------------------------
# result containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConventionChoice:
    """Adjudicated conventions: arguments (s q, p/s) and the angular sign."""

    scaling: float
    angular_sign: int
    residual: float

    def to_dict(self) -> dict:
        return {
            "scaling": self.scaling,
            "angular_sign": self.angular_sign,
            "residual": self.residual,
        }


@dataclass
class LadderFit:
    """Least-squares Landau ladder fit: centers ~ kappa0 * (2k+1) * |tau|."""

    kappa0: float
    max_rel_deviation: float
    centers: list[float]
    populations: list[int]
    tau: float
    rel_gap_used: float = 0.10

    def to_dict(self) -> dict:
        return {
            "kappa0": self.kappa0,
            "max_rel_deviation": self.max_rel_deviation,
            "centers": list(self.centers),
            "populations": list(self.populations),
            "tau": self.tau,
            "rel_gap_used": self.rel_gap_used,
        }


@dataclass
class GramResult:
    """Pairwise L^2 inner products of the normalized family {e_{j,k,tau}}."""

    tau: float
    labels: list[tuple[int, int]]
    matrix: np.ndarray
    max_deviation: float
    family_norm: float
    raw_norms: list[float]
    grid: dict

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "labels": [list(l) for l in self.labels],
            "max_deviation": self.max_deviation,
            "family_norm": self.family_norm,
            "raw_norms": list(self.raw_norms),
            "grid": self.grid,
        }


@dataclass
class WeylProbeResult:
    """Approximate-eigenfunction residuals ||(L - lambda) u_m|| / ||u_m||."""

    lam: float
    widths: list[float]
    residuals: list[float]
    tau0s: list[float]
    probe_lambda: float
    mode: str
    eigen_estimates: list[float]

    def __post_init__(self) -> None:
        w = np.asarray(self.widths, dtype=float)
        if w.size and np.any(np.diff(w) <= 0):
            raise ValueError("envelope widths must be strictly increasing")

    @property
    def strictly_decreasing(self) -> bool:
        r = np.asarray(self.residuals)
        return bool(np.all(np.diff(r) < 0))

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "probe_lambda": self.probe_lambda,
            "mode": self.mode,
            "widths": list(self.widths),
            "residuals": list(self.residuals),
            "tau0s": list(self.tau0s),
            "eigen_estimates": list(self.eigen_estimates),
            "strictly_decreasing": self.strictly_decreasing,
        }


@dataclass
class SpectralReport:
    """One spectral campaign: eigenvalues, ladder fit, residuals, conventions."""

    tau: float
    grid: dict
    eigenvalues: list[float] = field(default_factory=list)
    ladder: LadderFit | None = None
    residuals: dict[str, float] = field(default_factory=dict)
    convention: ConventionChoice | None = None
    runtimes: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.eigenvalues = sorted(float(e) for e in self.eigenvalues)

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "grid": self.grid,
            "eigenvalues": list(self.eigenvalues),
            "ladder": self.ladder.to_dict() if self.ladder else None,
            "residuals": dict(self.residuals),
            "convention": self.convention.to_dict() if self.convention else None,
            "runtimes": dict(self.runtimes),
        }


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


def _diff1(n: int, h: float) -> sp.csr_matrix:
    off = np.full(n - 1, 1.0 / (2.0 * h))
    return sp.diags([off, -off], [1, -1], format="csr")


def _diff2(n: int, h: float) -> sp.csr_matrix:
    main = np.full(n, -2.0 / (h * h))
    off = np.full(n - 1, 1.0 / (h * h))
    return sp.diags([off, main, off], [1, 0, -1], format="csr")


def fiber_parts(grid: BoxGrid) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
    """(K, A, C) with L_tau = K + angular_sign * tau * A + tau^2 * C.

    K = -Delta (Dirichlet), A = 4i (y_1 D_2 - y_2 D_1) Hermitian, C = 4 |y|^2.
    Row-major flattening: an operator along axis 0 is kron(Op, I), along axis 1
    kron(I, Op).
    """
    if grid.ndim != 2:
        raise ValueError("fiber operators live on a 2-d grid")
    n0, n1 = grid.counts
    h0, h1 = grid.spacing
    c0 = grid.axis(0)
    c1 = grid.axis(1)
    i0 = sp.identity(n0, format="csr")
    i1 = sp.identity(n1, format="csr")
    K = -(sp.kron(_diff2(n0, h0), i1) + sp.kron(i0, _diff2(n1, h1)))
    A = 4j * (sp.kron(sp.diags(c0), _diff1(n1, h1)) - sp.kron(_diff1(n0, h0), sp.diags(c1)))
    C = 4.0 * (sp.kron(sp.diags(c0 * c0), i1) + sp.kron(i0, sp.diags(c1 * c1)))
    return K.tocsr().astype(np.complex128), A.tocsr(), C.tocsr().astype(np.complex128)


def assemble_twisted(tau: float, grid: BoxGrid, angular_sign: int = 1) -> sp.csr_matrix:
    """Sparse Hermitian gauge-invariant matrix of the twisted Laplacian.

    L_tau = (-i grad - A)^2 with vector potential A = 2 tau s (-y_2, y_1)
    (s the angular sign) is discretized with link phases (Peierls
    substitution): hop terms carry e^{-i h A(midpoint)} and the diagonal is
    the bare 2/h_1^2 + 2/h_2^2.  This is second-order consistent like the
    centered-difference splitting K + s tau A + tau^2 C, but unlike it the
    link form preserves the Landau degeneracy: every level stays a single
    tight band instead of fanning out with O((m h)^2) per angular momentum m,
    which is what makes spectral clustering possible at practical grids.
    The matrix is Hermitian by construction (unitary hops); the Hermitian
    part is taken anyway to scrub rounding asymmetry.
    """
    if tau == 0:
        raise ValueError("twisted operator needs tau != 0")
    if angular_sign not in (1, -1):
        raise ValueError("angular_sign must be +1 or -1")
    if grid.ndim != 2:
        raise ValueError("twisted operator lives on a 2-d grid")
    if min(grid.counts) < 33:
        warnings.warn(
            f"grid {grid.counts} is coarse (fewer than 33 nodes on an axis); "
            "spectral structure may be under-resolved",
            stacklevel=2,
        )
    n0, n1 = grid.counts
    h0, h1 = grid.spacing
    c0 = grid.axis(0)
    c1 = grid.axis(1)
    s = float(angular_sign) * float(tau)
    shift0 = sp.eye(n0, k=1, format="csr")
    shift1 = sp.eye(n1, k=1, format="csr")
    # A = 2 tau s (-c1, c0); link phase = -h * A(midpoint of the link)
    hop0 = sp.kron(shift0, sp.diags(np.exp(2j * s * h0 * c1)))
    hop1 = sp.kron(sp.diags(np.exp(-2j * s * h1 * c0)), shift1)
    eye = sp.identity(n0 * n1, dtype=np.complex128, format="csr")
    M = (2.0 * eye - hop0 - hop0.getH()) / (h0 * h0)
    M = M + (2.0 * eye - hop1 - hop1.getH()) / (h1 * h1)
    M = (M + M.getH()) * 0.5
    return M.tocsr()


# ---------------------------------------------------------------------------
# eigensolver
# ---------------------------------------------------------------------------


def lowest_eigenvalues(
    op,
    m: int,
    tol: float = 1e-10,
    seed: int = 0,
    dense_cutoff: int = 3000,
    sigma: float | None = 0.0,
    residual_bound: float = 1e-8,
) -> tuple[np.ndarray, np.ndarray]:
    """m smallest eigenvalues (ascending) and eigenvectors of a Hermitian operator.

    Dense solve below ``dense_cutoff`` (also the oracle path); otherwise
    shift-invert Lanczos with a seeded start vector.  Every returned pair is
    residual-checked: ||A v - lambda v|| / ||v|| <= residual_bound.
    """
    A = op if sp.issparse(op) else sp.csr_matrix(op)
    dim = A.shape[0]
    if not 0 < m < dim:
        raise ValueError(f"need 0 < m < dim, got m={m}, dim={dim}")
    if dim <= dense_cutoff:
        dense = A.toarray()
        vals, vecs = scipy.linalg.eigh(dense)
        vals, vecs = vals[:m], vecs[:, :m]
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(dim)
        if A.dtype.kind == "c":
            v0 = v0 + 1j * rng.standard_normal(dim)
        try:
            vals, vecs = spla.eigsh(
                A, k=m, sigma=sigma, which="LM", tol=tol, v0=v0,
                ncv=min(dim - 1, 2 * m + 1),
            )
        except spla.ArpackNoConvergence as exc:
            warnings.warn(
                f"eigensolver converged {len(exc.eigenvalues)}/{m} pairs; "
                "returning the converged subset",
                stacklevel=2,
            )
            vals, vecs = exc.eigenvalues, exc.eigenvectors
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    vals = np.real(vals)
    for i in range(vals.size):
        v = vecs[:, i]
        res = np.linalg.norm(A @ v - vals[i] * v) / np.linalg.norm(v)
        if res > residual_bound:
            raise RuntimeError(
                f"eigenpair {i} residual {res:.3e} exceeds {residual_bound:.1e}"
            )
    return vals, vecs


# ---------------------------------------------------------------------------
# ladder structure
# ---------------------------------------------------------------------------


def cluster_eigenvalues(eigs, rel_gap: float = 0.10) -> list[np.ndarray]:
    """Split a sorted spectrum into clusters at relative gaps above rel_gap."""
    e = np.sort(np.asarray(eigs, dtype=float))
    if e.size == 0:
        return []
    clusters = [[e[0]]]
    for prev, cur in zip(e[:-1], e[1:]):
        scale = max(abs(prev), abs(cur), 1e-300)
        if (cur - prev) / scale > rel_gap:
            clusters.append([])
        clusters[-1].append(cur)
    return [np.asarray(c) for c in clusters]


def _ladder_fit_once(
    eigs,
    tau: float,
    rel_gap: float,
    min_population: int | None,
    n_levels: int,
    spacing_tol: float,
) -> LadderFit:
    clusters = cluster_eigenvalues(eigs, rel_gap=rel_gap)
    if not clusters:
        raise StructureMismatchError("no eigenvalues to cluster")
    pops = [len(c) for c in clusters]
    if min_population is None:
        biggest = max(pops)
        min_population = 1 if biggest < 2 else max(2, math.ceil(0.05 * biggest))
    kept = [c for c in clusters if len(c) >= min_population]
    if len(kept) < n_levels:
        raise StructureMismatchError(
            f"found {len(kept)} populated clusters, need {n_levels} "
            f"(populations {pops}, threshold {min_population})"
        )
    kept = kept[:n_levels]
    centers = [float(np.mean(c)) for c in kept]
    if n_levels >= 2:
        gaps = np.diff(centers)
        mean_gap = float(np.mean(gaps))
        if mean_gap <= 0:
            raise StructureMismatchError("cluster centers are not increasing")
        if n_levels >= 3:
            worst_gap = float(np.max(np.abs(gaps - mean_gap))) / mean_gap
            if worst_gap > spacing_tol:
                raise StructureMismatchError(
                    f"cluster gaps {gaps.tolist()} deviate {worst_gap:.1%} "
                    f"from equal spacing (tolerance {spacing_tol:.0%})"
                )
    x = np.array([(2 * k + 1) * abs(tau) for k in range(n_levels)])
    y = np.asarray(centers)
    kappa0 = float(np.dot(x, y) / np.dot(x, x))
    dev = float(np.max(np.abs(y - kappa0 * x) / (kappa0 * x)))
    return LadderFit(
        kappa0, dev, centers, [len(c) for c in kept], tau, rel_gap_used=rel_gap
    )


def landau_structure_fit(
    eigs,
    tau: float,
    rel_gap: float | None = None,
    min_population: int | None = None,
    n_levels: int = 3,
    spacing_tol: float = 0.05,
) -> LadderFit:
    """Fit the lowest n_levels cluster centers to kappa0 * (2k+1) * |tau|.

    Small clusters (Dirichlet edge states living in the spectral gaps) are
    dropped before the fit: default threshold max(2, 5% of the largest
    population), disabled when every cluster is a singleton (synthetic input).

    With rel_gap=None the split threshold is chosen adaptively: a coarse 10%
    pass is tried first, then 3% and 1%.  Box truncation strings chains of
    edge states across the gaps between levels with consecutive spacings
    below 10%, which welds the whole spectrum into one cluster at the coarse
    threshold; a finer pass still keeps each quasi-degenerate level together
    (intra-level spread is orders of magnitude below 1%) while cutting the
    edge chains into low-population clusters that the filter discards.  The
    threshold that produced the fit is recorded in ``rel_gap_used``.
    """
    if rel_gap is not None:
        return _ladder_fit_once(
            eigs, tau, rel_gap, min_population, n_levels, spacing_tol
        )
    last_err: StructureMismatchError | None = None
    for trial in (0.10, 0.03, 0.01):
        try:
            return _ladder_fit_once(
                eigs, tau, trial, min_population, n_levels, spacing_tol
            )
        except StructureMismatchError as err:
            last_err = err
    raise StructureMismatchError(
        f"no clustering threshold in (0.10, 0.03, 0.01) resolved "
        f"{n_levels} ladder levels; last failure: {last_err}"
    )


# ---------------------------------------------------------------------------
# eigenfunction family and conventions
# ---------------------------------------------------------------------------


def tabulate_eigenfunction(
    j: int,
    k: int,
    tau: float,
    grid: BoxGrid,
    scaling: float = 2.0,
    L: float | None = None,
    N: int | None = None,
) -> ScalarField:
    """Tabulate e_{j,k,tau}(s q, p / s) on a 2-d grid (axis 0 = q, axis 1 = p).

    s = 1 is the raw family; s = 2 is the adjudicated eigenfamily of the
    twisted Laplacian.
    """
    if grid.ndim != 2:
        raise ValueError("eigenfunction tabulation needs a 2-d grid")
    if scaling <= 0:
        raise ValueError("scaling must be positive")
    fj = Profile1D.hermite(j, tau)
    gk = Profile1D.hermite(k, tau)
    table = fourier_wigner_table(
        fj, gk, tau, scaling * grid.axis(0), grid.axis(1) / scaling, L=L, N=N
    )
    return ScalarField(grid, table.astype(np.complex128))


def eigenfunction_residual(
    j: int,
    k: int,
    tau: float,
    grid: BoxGrid,
    scaling: float = 2.0,
    angular_sign: int = 1,
    kappa0: float = 4.0,
    e: ScalarField | None = None,
) -> float:
    """Relative residual ||L_tau e - lam e|| / (lam ||e||), lam = kappa0 (2k+1)|tau|.

    The denominator carries the full adjudicated eigenvalue (including kappa0)
    so the number is the scale-free relative eigen-residual.
    """
    if e is None:
        e = tabulate_eigenfunction(j, k, tau, grid, scaling=scaling)
    if e.sup_norm() < 1e-12:
        raise ValueError("tabulated eigenfunction is below numerical noise")
    lam = kappa0 * (2 * k + 1) * abs(tau)
    le = twisted_laplacian(e, tau, angular_sign=angular_sign)
    num = ScalarField(grid, le.values - lam * e.values).l2_norm()
    return float(num / (lam * e.l2_norm()))


def convention_search(
    j: int,
    k: int,
    tau: float,
    grid: BoxGrid,
    scalings: tuple[float, ...] = (0.5, 1.0, 2.0),
    signs: tuple[int, ...] = (1, -1),
    kappa0: float = 4.0,
    reject_above: float = 0.5,
) -> ConventionChoice:
    """Grid-search the argument scaling and angular sign; smallest residual wins.

    For j == k the family has no angular momentum and the two signs tie
    exactly; the first candidate sign is then reported.
    """
    best: ConventionChoice | None = None
    for s in scalings:
        e = tabulate_eigenfunction(j, k, tau, grid, scaling=s)
        for sign in signs:
            r = eigenfunction_residual(
                j, k, tau, grid, scaling=s, angular_sign=sign, kappa0=kappa0, e=e
            )
            if best is None or r < best.residual:
                best = ConventionChoice(s, sign, r)
    if best is None or best.residual > reject_above:
        raise NoConventionFoundError(
            f"no candidate convention reaches residual <= {reject_above} "
            f"(best: {best})"
        )
    return best


# ---------------------------------------------------------------------------
# Gram matrix
# ---------------------------------------------------------------------------


def gram_matrix(
    J: int,
    K: int,
    tau: float,
    grid: BoxGrid | None = None,
) -> GramResult:
    """L^2(R^2) Gram matrix of the normalized family {e_{j,k,tau} : j<=J, k<=K}.

    The raw family is orthogonal with every member norm 1/2 (recorded in
    ``family_norm`` / ``raw_norms``); the reported deviation is that of the
    normalized family from the identity.
    """
    if grid is None:
        lq = 14.0 / math.sqrt(abs(tau))
        lp = 4.0 / math.sqrt(abs(tau))
        grid = BoxGrid((-lq, -lp), (lq, lp), (161, 161))
    labels = [(j, k) for j in range(J + 1) for k in range(K + 1)]
    nodes = grid.node_count
    members = np.empty((nodes, len(labels)), dtype=np.complex128)
    for col, (j, k) in enumerate(labels):
        fj = Profile1D.hermite(j, tau)
        gk = Profile1D.hermite(k, tau)
        members[:, col] = fourier_wigner_table(
            fj, gk, tau, grid.axis(0), grid.axis(1)
        ).ravel()
    w = grid.cell_volume
    raw = members.conj().T @ members * w
    norms = np.sqrt(np.real(np.diag(raw)))
    normalized = raw / np.outer(norms, norms)
    dev = float(np.max(np.abs(normalized - np.eye(len(labels)))))
    return GramResult(
        tau=tau,
        labels=labels,
        matrix=normalized,
        max_deviation=dev,
        family_norm=float(np.mean(norms)),
        raw_norms=[float(v) for v in norms],
        grid=grid.descriptor(),
    )


# ---------------------------------------------------------------------------
# Weyl spectrum probe
# ---------------------------------------------------------------------------


def _refine_eigvec(
    A: sp.csr_matrix, start: np.ndarray, shift: float, iters: int = 3
) -> tuple[np.ndarray, float]:
    """Rayleigh-quotient inverse iteration from a tabulated start vector."""
    v = start.astype(np.complex128)
    v = v / np.linalg.norm(v)
    s = float(shift)
    n = A.shape[0]
    eye = sp.identity(n, dtype=np.complex128, format="csc")
    for _ in range(iters):
        try:
            lu = spla.splu((A - s * eye).tocsc())
            w = lu.solve(v)
        except RuntimeError:
            lu = spla.splu((A - (s + 1e-8 * max(1.0, abs(s))) * eye).tocsc())
            w = lu.solve(v)
        nw = np.linalg.norm(w)
        if not np.isfinite(nw) or nw == 0.0:
            break
        v = w / nw
        s = float(np.real(np.vdot(v, A @ v)))
    return v, s


def _boundary_fraction(values2d: np.ndarray) -> float:
    edge = max(
        float(np.max(np.abs(values2d[0, :]))),
        float(np.max(np.abs(values2d[-1, :]))),
        float(np.max(np.abs(values2d[:, 0]))),
        float(np.max(np.abs(values2d[:, -1]))),
    )
    return edge / float(np.max(np.abs(values2d)))


def weyl_probe(
    lam: float,
    k: int,
    widths,
    grid3d: BoxGrid,
    j: int = 0,
    kappa0: float = 4.0,
    probe_lambda: float | None = None,
    conv: FieldConvention = HN,
    tau0_start: float = 0.1,
    refine_iters: int = 3,
) -> WeylProbeResult:
    """Approximate-eigenfunction residuals for lambda in the spectrum of L.

    Builds u_m(z, t) = phi(z) e^{i mu tau_0 t} exp(-t^2 / (2 sigma_m^2)) with
    sigma_m = width_m^2 (the squared width matches the anisotropic dilation:
    a vertical extent of gauge size m).  phi is the tabulated adjudicated
    eigenfunction refined by Rayleigh-quotient iteration on the assembled
    fiber operator; the t-direction is integrated in closed form, so each
    residual is exact for the z-discretized operator.

    lam > 0: tau_0 = lam / (kappa0 (2k+1)) puts lam on the ladder.
    lam = 0: a decreasing tau_0 sequence (halving from tau0_start) is paired
    with the widths and phi is the fiber ground state.

    ``probe_lambda`` overrides the lambda used inside the residual (contrast
    controls); the construction still targets ``lam``.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    widths = [float(wd) for wd in widths]
    if len(widths) < 2 or any(b <= a for a, b in zip(widths, widths[1:])):
        raise ValueError("need at least two strictly increasing widths")
    if grid3d.ndim != 3:
        raise ValueError("weyl_probe needs a 3-d grid")
    sigmas = [wd * wd for wd in widths]
    t_half = 0.5 * (grid3d.hi[2] - grid3d.lo[2])
    if t_half < 3.0 * max(sigmas):
        raise ValueError(
            f"vertical box half-width {t_half:g} is below 3x the widest "
            f"envelope sigma={max(sigmas):g}; enlarge the t-extent"
        )
    grid2d = BoxGrid(grid3d.lo[:2], grid3d.hi[:2], grid3d.counts[:2])
    K, A, C = fiber_parts(grid2d)
    mu = 1.0 if conv.name == "hn" else -1.0

    def one_case(tau0: float, jj: int, kk: int, lam_probe: float, sigma: float):
        fiber = (K + (mu * tau0) * A + (tau0 * tau0) * C).tocsr()
        start = tabulate_eigenfunction(jj, kk, tau0, grid2d).values.ravel()
        target = kappa0 * (2 * kk + 1) * tau0
        phi, ray = _refine_eigvec(fiber, start, target, iters=refine_iters)
        if _boundary_fraction(phi.reshape(grid2d.counts)) > 1e-3:
            raise ValueError(
                "fiber eigenfunction does not decay inside the (x, y) box; "
                "enlarge the horizontal extent"
            )
        v0 = fiber @ phi - lam_probe * phi
        v1 = (mu * (A @ phi) + (2.0 * tau0) * (C @ phi))
        v2 = C @ phi
        s2 = 1.0 / (2.0 * sigma * sigma)
        nphi2 = float(np.real(np.vdot(phi, phi)))
        r2 = (
            float(np.real(np.vdot(v0, v0)))
            + s2 * (float(np.real(np.vdot(v1, v1))) + 2.0 * float(np.real(np.vdot(v0, v2))))
            + 3.0 * s2 * s2 * float(np.real(np.vdot(v2, v2)))
        ) / nphi2
        return math.sqrt(max(r2, 0.0)), ray

    residuals: list[float] = []
    tau0s: list[float] = []
    rays: list[float] = []
    if lam > 0:
        tau0 = lam / (kappa0 * (2 * k + 1))
        lam_probe = lam if probe_lambda is None else float(probe_lambda)
        for sigma in sigmas:
            r, ray = one_case(tau0, j, k, lam_probe, sigma)
            residuals.append(r)
            tau0s.append(tau0)
            rays.append(ray)
        mode = "ladder"
    else:
        lam_probe = 0.0 if probe_lambda is None else float(probe_lambda)
        for i, sigma in enumerate(sigmas):
            tau0 = tau0_start / (2.0 ** i)
            r, ray = one_case(tau0, 0, 0, lam_probe, sigma)
            residuals.append(r)
            tau0s.append(tau0)
            rays.append(ray)
        mode = "zero"
    return WeylProbeResult(
        lam=lam,
        widths=widths,
        residuals=residuals,
        tau0s=tau0s,
        probe_lambda=lam_probe,
        mode=mode,
        eigen_estimates=rays,
    )


# ---------------------------------------------------------------------------
# vertical transform bridge
# ---------------------------------------------------------------------------


def vertical_bridge_sign(
    transform: str = "inverse",
    conv: FieldConvention = HN,
    count2d: int = 31,
    half2d: float = 5.0,
    t_count: int = 181,
    t_half: float = 18.0,
    sigma_t: float = 4.0,
) -> int:
    """Which angular sign makes (L u)-transformed(tau) = L_tau u-transformed(tau).

    ``transform="inverse"`` uses the kernel e^{+i t tau} (the check-accent
    partner of the unitary forward transform), ``"forward"`` uses e^{-i t tau}.
    Adjudicated numerically on a bump with unit angular momentum; the winner
    is -1 for the inverse transform and +1 for the forward one.
    """
    if transform not in ("inverse", "forward"):
        raise ValueError("transform must be 'inverse' or 'forward'")
    grid3 = BoxGrid(
        (-half2d, -half2d, -t_half), (half2d, half2d, t_half),
        (count2d, count2d, t_count),
    )
    x = grid3.axis_mesh(0)
    y = grid3.axis_mesh(1)
    t = grid3.axis_mesh(2)
    phi = (x + 1j * y) * np.exp(-(x * x + y * y) / 2.0)
    u = ScalarField(grid3, phi * np.exp(-(t * t) / (2.0 * sigma_t * sigma_t)))
    lu = sublaplacian(u, conv)

    grid2 = BoxGrid((-half2d, -half2d), (half2d, half2d), (count2d, count2d))
    K, A, C = fiber_parts(grid2)
    ts = grid3.axis(2)
    ht = grid3.spacing[2]
    kernel_sign = 1.0 if transform == "inverse" else -1.0
    taus = np.array([-0.5, -0.25, 0.25, 0.5])
    mismatch = {1: 0.0, -1: 0.0}
    for tau in taus:
        ker = np.exp(kernel_sign * 1j * ts * tau) * ht / math.sqrt(2.0 * math.pi)
        u_hat = np.tensordot(u.values, ker, axes=([2], [0])).ravel()
        lu_hat = np.tensordot(lu.values, ker, axes=([2], [0])).ravel()
        for sign in (1, -1):
            fiber = K + (sign * tau) * A + (tau * tau) * C
            mismatch[sign] += float(np.linalg.norm(lu_hat - fiber @ u_hat))
    return 1 if mismatch[1] <= mismatch[-1] else -1
