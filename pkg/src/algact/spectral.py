"""Concrete realizations of lambda(f): Fourier symbols on a torus grid for Z^d
and the regular representation for finite groups, with functional-calculus
inverses built from them.

Grid convention: value(theta) = sum_g f(g) exp(2 pi i g.theta) at theta = j/L,
so values = L^d * ifftn(coefficients placed at g mod L), and coefficients =
fftn(values) / L^d.  All ell^2 quantities on the Z^d backend are computed in the
periodic Z/L realization by Parseval.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .groups import GroupSpec
from .groupring import RingElement, RingMatrix, VectorOverG, as_matrix, as_vector, matmul

DEFAULT_TOL = 1e-9
DEFAULT_TRUNC_REL = 1e-6
DROP_REL = 1e-15
# relative slack on the spectral cutoff so sigma == 1/k survives rounding
CUTOFF_SLACK = 1e-12


class AliasingError(ValueError):
    pass


class SingularSymbolError(ValueError):
    pass


class WindowTooSmallError(ValueError):
    pass


def default_grid(d: int) -> int:
    return {1: 2048, 2: 256}.get(d, 32)


# -- symbols -----------------------------------------------------------------


@dataclass(frozen=True)
class SymbolGrid:
    """Samples of an m x n symbol at the L^d points j/L; ``values`` has shape
    (L,)*d + (m, n)."""

    spec: GroupSpec
    L: int
    values: np.ndarray = field(repr=False)

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def shape(self) -> tuple:
        return self.values.shape[-2:]

    @property
    def axes(self) -> tuple:
        return tuple(range(self.d))

    def at_index(self, j) -> np.ndarray:
        return self.values[tuple(np.atleast_1d(j))]

    def singular_values(self) -> np.ndarray:
        """Per-point singular values, padded with zeros when m < n."""
        s = np.linalg.svd(self.values, compute_uv=False)
        m, n = self.shape
        if m < n:
            pad = np.zeros(s.shape[:-1] + (n - m,))
            s = np.concatenate([s, pad], axis=-1)
        return s

    def coefficients(self) -> np.ndarray:
        return np.fft.fftn(self.values, axes=self.axes) / self.L ** self.d

    def __matmul__(self, other: "SymbolGrid") -> "SymbolGrid":
        return SymbolGrid(self.spec, self.L, self.values @ other.values)

    def l2_norm_sq(self) -> float:
        """ell^2 norm squared of the underlying coefficients (Parseval)."""
        return float(np.sum(np.abs(self.values) ** 2) / self.L ** self.d)


def _centered(L: int) -> np.ndarray:
    idx = np.arange(L)
    return np.where(idx <= L // 2, idx, idx - L)


def build_symbol(f, L: int) -> SymbolGrid:
    """Exact grid evaluation of the symbol of a Z^d ring matrix."""
    f = as_matrix(f)
    spec = f.spec
    if spec.is_finite:
        raise ValueError("build_symbol needs a Z^d backend; use regular_rep for finite groups")
    r = f.radius()
    if L < 2 * r + 1:
        raise AliasingError(f"grid L={L} too small for support radius {r}; need L >= {2 * r + 1}")
    d = spec.d
    m, n = f.shape
    coeff = np.zeros((L,) * d + (m, n), dtype=complex)
    for i in range(m):
        for j in range(n):
            for g, c in f.entries[i][j].coeffs.items():
                coeff[tuple(a % L for a in g) + (i, j)] += float(c)
    values = np.fft.ifftn(coeff, axes=tuple(range(d))) * L ** d
    return SymbolGrid(spec, L, values)


def symbol_of_vector(v, L: int) -> np.ndarray:
    """Grid symbol of a vector over Z^d; shape (L,)*d + (k,)."""
    v = as_vector(v)
    return build_symbol(RingMatrix([[c] for c in v.components], v.spec), L).values[..., 0]


def _coeffs_to_elements(spec: GroupSpec, coeff: np.ndarray, L: int, window: int | None) -> list:
    """Turn a real coefficient array (L,)*d on Z/L into a RingElement over Z^d,
    using centered representatives and dropping negligible entries."""
    d = spec.d
    c = coeff.real
    cmax = float(np.max(np.abs(c))) if c.size else 0.0
    if cmax == 0.0:
        return RingElement.zero(spec)
    cen = _centered(L)
    keep = np.abs(c) >= DROP_REL * cmax
    if window is not None and 2 * window + 1 < L:
        grids = np.meshgrid(*([cen] * d), indexing="ij")
        rad = np.max(np.abs(np.stack(grids)), axis=0)
        keep &= rad <= window
    out = {}
    for idx in zip(*np.nonzero(keep)):
        out[tuple(int(cen[i]) for i in idx)] = float(c[idx])
    return RingElement(spec, out)


def _radial_mass(coeff: np.ndarray, L: int, d: int) -> np.ndarray:
    """mass[r] = sum of |c|^2 (summed over trailing matrix axes) at max-norm radius r."""
    cen = _centered(L)
    grids = np.meshgrid(*([cen] * d), indexing="ij")
    rad = np.max(np.abs(np.stack(grids)), axis=0)
    w = np.sum(np.abs(coeff) ** 2, axis=tuple(range(d, coeff.ndim)))
    return np.bincount(rad.ravel(), weights=w.ravel(), minlength=L // 2 + 1)


def _choose_window(coeff, L, d, window, trunc_rel, max_truncation):
    """Return (window, discarded relative mass); window None keeps the whole torus."""
    mass = _radial_mass(coeff, L, d)
    total = mass.sum()
    tail = total - np.cumsum(mass)
    rel = tail / total if total > 0 else np.zeros_like(tail)
    rel = np.maximum(rel, 0.0)
    if window is None:
        hits = np.nonzero(rel <= trunc_rel)[0]
        w = int(hits[0]) if len(hits) else len(rel) - 1
    else:
        w = int(window)
    lost = float(rel[w]) if w < len(rel) else 0.0
    if max_truncation is not None and lost > max_truncation:
        raise WindowTooSmallError(f"window {w} discards {lost:.3g} of the ell^2 mass "
                                  f"(limit {max_truncation:.3g})")
    if w >= L // 2:
        return None, 0.0
    return w, lost


def _truncate_coeffs(coeff: np.ndarray, L: int, d: int, window: int | None) -> np.ndarray:
    if window is None:
        return coeff
    cen = _centered(L)
    grids = np.meshgrid(*([cen] * d), indexing="ij")
    rad = np.max(np.abs(np.stack(grids)), axis=0)
    mask = (rad <= window).reshape(rad.shape + (1,) * (coeff.ndim - d))
    return np.where(mask, coeff, 0)


def _matrix_from_coeffs(spec, coeff, L, window) -> RingMatrix:
    d = spec.d
    m, n = coeff.shape[-2:]
    return RingMatrix([[_coeffs_to_elements(spec, coeff[..., i, j], L, window) for j in range(n)]
                       for i in range(m)], spec)


def _eye_like(values: np.ndarray, n: int) -> np.ndarray:
    return np.broadcast_to(np.eye(n), values.shape[:-2] + (n, n))


def _l2_dist_to_identity(values: np.ndarray, L: int, d: int) -> float:
    n = values.shape[-1]
    return math.sqrt(float(np.sum(np.abs(values - _eye_like(values, n)) ** 2) / L ** d))


# -- finite backend ----------------------------------------------------------


def regular_rep(f, exact: bool = False):
    """Matrix of lambda(f) on ell^2(G)^n for f m x n over a finite group.

    Row (j, x) -> j*N + x, column (l, y) -> l*N + y; entry f_jl(x y^-1).
    """
    f = as_matrix(f)
    spec = f.spec
    if not spec.is_finite:
        raise ValueError("regular_rep needs a finite group")
    N = spec.order
    m, n = f.shape
    T = spec.table_array
    inv = spec.inverse_array
    # xy[x, y] = x y^-1
    xy = T[:, inv]
    if exact:
        import sympy
        M = sympy.zeros(N * m, N * n)
        for j in range(m):
            for l in range(n):
                e = f.entries[j][l]
                for x in range(N):
                    for y in range(N):
                        c = e[int(xy[x, y])]
                        if c:
                            M[j * N + x, l * N + y] = sympy.Rational(Fraction(c).numerator,
                                                                     Fraction(c).denominator)
        return M
    M = np.zeros((N * m, N * n))
    for j in range(m):
        for l in range(n):
            vec = np.zeros(N)
            for g, c in f.entries[j][l].coeffs.items():
                vec[g] = float(c)
            M[j * N:(j + 1) * N, l * N:(l + 1) * N] = vec[xy]
    return M


def _matrix_from_regular(spec: GroupSpec, X: np.ndarray, rows: int, cols: int) -> RingMatrix:
    """Read xi_lj(g) = X[l*N + g, j*N + e] off an equivariant operator matrix."""
    N = spec.order
    e = spec.identity_index
    out = []
    for l in range(rows):
        row = []
        for j in range(cols):
            col = X[l * N:(l + 1) * N, j * N + e]
            cmax = float(np.max(np.abs(col))) if col.size else 0.0
            row.append(RingElement(spec, {g: float(col[g]) for g in range(N)
                                          if cmax and abs(col[g]) >= DROP_REL * cmax}))
        out.append(row)
    return RingMatrix(out, spec)


# -- injectivity -------------------------------------------------------------


def injectivity_report(f, L: int | None = None, tol: float = DEFAULT_TOL) -> dict:
    """Grid diagnostic for injectivity of lambda(f).

    Z^d: injective when the smallest singular value over the grid exceeds
    ``tol``, or when refining the grid shrinks the fraction of near-zero
    points (a measure-zero zero set).  Finite groups: exact kernel dimension.
    """
    f = as_matrix(f)
    spec = f.spec
    m, n = f.shape
    if spec.is_finite:
        exact = f.is_exact()
        M = regular_rep(f, exact=exact)
        rank = int(M.rank()) if exact else int(np.linalg.matrix_rank(M, tol=tol))
        kernel = spec.order * n - rank
        smin = float(np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)[-1]) \
            if m * spec.order >= n * spec.order else 0.0
        return {"backend": "finite", "kernel_dim": kernel, "injective": kernel == 0,
                "min_singular_value": smin if kernel == 0 else 0.0, "exact": exact}
    L = L or default_grid(spec.d)
    sym = build_symbol(f, L)
    s = sym.singular_values()
    smin_pt = s[..., -1]
    smin = float(smin_pt.min())
    zero1 = int(np.count_nonzero(smin_pt < tol))
    frac1 = zero1 / L ** spec.d
    rep = {"backend": "grid", "grid": L, "min_singular_value": smin, "zero_fraction": frac1,
           "tol": tol, "refined": False, "dimension_hint": None, "positive_dim_zero_set": False}
    if zero1 == 0:
        rep["injective"] = True
        return rep
    sym2 = build_symbol(f, 2 * L)
    s2 = sym2.singular_values()[..., -1]
    zero2 = int(np.count_nonzero(s2 < tol))
    frac2 = zero2 / (2 * L) ** spec.d
    rep.update(refined=True, refined_grid=2 * L, refined_zero_fraction=frac2,
               min_singular_value=min(smin, float(s2.min())))
    rep["injective"] = frac2 <= 0.75 * frac1
    if zero2 > 0:
        hint = math.log2(zero2 / zero1)
        rep["dimension_hint"] = hint
        rep["positive_dim_zero_set"] = spec.d >= 2 and hint > 0.5
    return rep


# -- inverses ----------------------------------------------------------------


@dataclass(frozen=True)
class ApproxInverse:
    k: float
    xi: RingMatrix
    residual_left: float
    residual_right: float
    op_norm_bound: float
    truncation_mass: float
    window: int | None
    grid: int | None
    backend: str
    op_norm_truncated: float = float("nan")
    truncation_l2: float = 0.0

    def report(self) -> dict:
        return {"k": self.k, "residual_left": self.residual_left,
                "residual_right": self.residual_right, "op_norm_bound": self.op_norm_bound,
                "op_norm_truncated": self.op_norm_truncated,
                "xi_truncation_mass": self.truncation_mass, "xi_truncation_l2": self.truncation_l2,
                "window": self.window,
                "grid": self.grid, "backend": self.backend}


def _cutoff_pinv(values: np.ndarray, k: float):
    """Pointwise V phi_k(Sigma) U^H with phi_k(s) = 1[s >= 1/k] / s."""
    U, s, Vh = np.linalg.svd(values, full_matrices=False)
    keep = s >= (1.0 / k) * (1 - CUTOFF_SLACK)
    phi = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    V = np.conj(np.swapaxes(Vh, -1, -2))
    Uh = np.conj(np.swapaxes(U, -1, -2))
    return (V * phi[..., None, :]) @ Uh


def approximate_inverse(f, k: float, L: int | None = None, window: int | None = None,
                        max_truncation: float | None = None,
                        trunc_rel: float = DEFAULT_TRUNC_REL) -> ApproxInverse:
    """Spectral cutoff inverse xi_k = phi_k(|lambda(f)|) v^* of an m x n matrix f.

    The same xi_k (n x m) is reported against both sides: xi_k f and f xi_k.
    Residuals use the windowed xi_k. ``op_norm_bound`` is the grid supremum of
    the untruncated xi_k f; ``op_norm_truncated`` is the same for the windowed one.
    With ``window=None`` the smallest max-norm window keeping all but
    ``trunc_rel`` of the ell^2 mass is used; the whole torus counts as a window.
    """
    f = as_matrix(f)
    spec = f.spec
    m, n = f.shape
    if k <= 0:
        raise ValueError("k must be positive")
    if spec.is_finite:
        M = regular_rep(f)
        N = spec.order
        X = _cutoff_pinv(M[None], k)[0].real
        xi = _matrix_from_regular(spec, X, n, m)
        left = matmul(xi, f) - RingMatrix.identity(spec, n)
        right = matmul(f, xi) - RingMatrix.identity(spec, m)
        op = float(np.linalg.norm(regular_rep(matmul(xi, f)), 2))
        return ApproxInverse(k, xi, left.l2_norm(), right.l2_norm(), op, 0.0, None, None, "finite", op)
    L = L or default_grid(spec.d)
    d = spec.d
    sym = build_symbol(f, L)
    xsym = _cutoff_pinv(sym.values, k)
    coeff = np.fft.fftn(xsym, axes=tuple(range(d))) / L ** d
    w, lost = _choose_window(coeff, L, d, window, trunc_rel, max_truncation)
    coeff_t = _truncate_coeffs(coeff, L, d, w)
    xsym_t = np.fft.ifftn(coeff_t, axes=tuple(range(d))) * L ** d
    left = xsym_t @ sym.values
    right = sym.values @ xsym_t
    # the construction itself: xi_k f is the spectral projection 1[|lambda(f)| >= 1/k]
    op = float(np.linalg.svd(xsym @ sym.values, compute_uv=False)[..., 0].max())
    op_t = float(np.linalg.svd(left, compute_uv=False)[..., 0].max()) if w is not None else op
    xi = _matrix_from_coeffs(spec, coeff_t, L, w)
    tl2 = math.sqrt(lost * float(np.sum(np.abs(coeff) ** 2)))
    return ApproxInverse(k, xi, _l2_dist_to_identity(left, L, d), _l2_dist_to_identity(right, L, d),
                         op, lost, w, L, "grid", op_t, tl2)


@dataclass(frozen=True)
class FormalInverse:
    xi: RingMatrix
    residual: float
    truncation_mass: float
    window: int | None
    grid: int
    min_singular_value: float
    truncation_l2: float = 0.0


def l2_formal_inverse(f, L: int | None = None, window: int | None = None, tol: float = DEFAULT_TOL,
                      max_truncation: float | None = None,
                      trunc_rel: float = DEFAULT_TRUNC_REL) -> FormalInverse:
    """xi with xi f = delta_1 (x) id: inverse DFT of the pointwise inverse symbol.

    The residual ||xi f - delta_1 (x) id||_2 is computed with exact group-ring
    arithmetic on the truncated xi (no periodization).
    """
    f = as_matrix(f)
    spec = f.spec
    m, n = f.shape
    if m != n:
        raise ValueError("l2_formal_inverse needs a square matrix")
    if spec.is_finite:
        M = regular_rep(f)
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] < tol:
            raise SingularSymbolError(f"regular representation is singular (sigma_min={s[-1]:.3g})")
        xi = _matrix_from_regular(spec, np.linalg.inv(M), n, n)
        res = (matmul(xi, f) - RingMatrix.identity(spec, n)).l2_norm()
        return FormalInverse(xi, res, 0.0, None, spec.order, float(s[-1]))
    L = L or default_grid(spec.d)
    d = spec.d
    sym = build_symbol(f, L)
    smin = float(sym.singular_values()[..., -1].min())
    if smin < tol:
        raise SingularSymbolError(f"symbol is singular on the grid (sigma_min={smin:.3g})")
    inv = np.linalg.inv(sym.values)
    coeff = np.fft.fftn(inv, axes=tuple(range(d))) / L ** d
    w, lost = _choose_window(coeff, L, d, window, trunc_rel, max_truncation)
    xi = _matrix_from_coeffs(spec, _truncate_coeffs(coeff, L, d, w), L, w)
    res = (matmul(xi, f) - RingMatrix.identity(spec, n)).l2_norm()
    tl2 = math.sqrt(lost * float(np.sum(np.abs(coeff) ** 2)))
    return FormalInverse(xi, res, lost, w, L, smin, tl2)


# -- applying inverses to dual vectors ---------------------------------------


def apply_cutoff_inverse(f, alpha, k: float, L: int | None = None) -> VectorOverG:
    """r(xi_k) alpha, computed exactly in the periodic realization (Z^d) or by
    group-ring arithmetic (finite)."""
    f = as_matrix(f)
    alpha = as_vector(alpha)
    spec = f.spec
    m, n = f.shape
    if alpha.k != n:
        raise ValueError(f"alpha needs {n} components, got {alpha.k}")
    if spec.is_finite:
        from .groupring import right_apply
        return right_apply(approximate_inverse(f, k).xi, alpha)
    L = L or default_grid(spec.d)
    d = spec.d
    sym = build_symbol(f, L)
    xsym = _cutoff_pinv(sym.values, k)
    a = symbol_of_vector(alpha, L)
    # (r(xi) alpha)_j = sum_l alpha_l * xi_lj  ->  xi^T alpha on symbols
    b = np.einsum("...lj,...l->...j", xsym, a)
    coeff = np.fft.fftn(b, axes=tuple(range(d))) / L ** d
    return VectorOverG([_coeffs_to_elements(spec, coeff[..., j], L, None) for j in range(m)], spec)


def cutoff_inverse_norm(f, alpha, k: float, L: int | None = None) -> float:
    """||r(xi_k) alpha||_2 via Parseval (Z^d) or exactly (finite)."""
    f = as_matrix(f)
    alpha = as_vector(alpha)
    if f.spec.is_finite:
        return apply_cutoff_inverse(f, alpha, k).l2_norm()
    L = L or default_grid(f.spec.d)
    sym = build_symbol(f, L)
    xsym = _cutoff_pinv(sym.values, k)
    a = symbol_of_vector(alpha, L)
    b = np.einsum("...lj,...l->...j", xsym, a)
    return math.sqrt(float(np.sum(np.abs(b) ** 2) / L ** f.spec.d))


def membership_divergence(f, alpha, k_list, L: int | None = None) -> list:
    """Trajectory of ||r(xi_k) alpha||_2 over ``k_list`` (raw, not smoothed)."""
    return [{"k": k, "norm": cutoff_inverse_norm(f, alpha, k, L)} for k in k_list]
