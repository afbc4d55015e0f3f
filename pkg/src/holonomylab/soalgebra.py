"""Matrix algebra of so(n+1,1) in an isotropic basis, and holonomy templates.

Basis convention: indices 0, 1..n, n+1 with quadratic form

    J = [[0, 0, 1],
         [0, I_n, 0],
         [1, 0, 0]]   (antidiagonal light-cone pairing, Euclidean middle block)

The stabilizer of the isotropic direction e_0 consists of matrices

    [[ a,  X,   0 ],
     [ 0,  A, -X^T],
     [ 0,  0,  -a ]]    with A in so(n), a real, X a row n-vector,

written (a, A, X) throughout: a scaling ("boost") part, a rotation part, and
an abelian ideal of translations.  Holonomy algebras of the metrics built in
`lorentz` live inside this stabilizer and fall into four template families,
distinguished by whether the boost is free, absent, or tied to the center of
the rotation algebra, and whether designated flat translation components are
tied to that center.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ClassificationError, NotInStabilizerError, ToleranceError


def iso_gram(n: int) -> np.ndarray:
    j = np.zeros((n + 2, n + 2))
    j[0, n + 1] = j[n + 1, 0] = 1.0
    j[1:n + 1, 1:n + 1] = np.eye(n)
    return j


def so_residual(mat: np.ndarray, n: int) -> float:
    j = iso_gram(n)
    low = j @ mat
    return float(np.max(np.abs(low + low.T)))


def stabilizer_residual(mat: np.ndarray, n: int) -> float:
    """Distance of an so(n+1,1) matrix from the e_0-stabilizer pattern."""
    lower_left = np.max(np.abs(mat[1:n + 1, 0]))
    bottom = np.max(np.abs(mat[n + 1, 1:n + 1]))
    return float(max(lower_left, bottom, abs(mat[n + 1, 0]), abs(mat[0, n + 1])))


def assemble(a: float, rot: np.ndarray, x: np.ndarray) -> np.ndarray:
    rot = np.asarray(rot, dtype=float)
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    m = np.zeros((n + 2, n + 2))
    m[0, 0] = a
    m[n + 1, n + 1] = -a
    m[0, 1:n + 1] = x
    m[1:n + 1, n + 1] = -x
    m[1:n + 1, 1:n + 1] = rot
    return m


def decompose(mat: np.ndarray, n: int, tol: float = 1e-8):
    """Split a stabilizer element into (a, A, X); reject other so matrices."""
    mat = np.asarray(mat, dtype=float)
    scale = max(1.0, float(np.max(np.abs(mat))))
    if so_residual(mat, n) > tol * scale:
        raise NotInStabilizerError(
            f"matrix is not in so({n + 1},1): residual {so_residual(mat, n):.2e}")
    if stabilizer_residual(mat, n) > tol * scale:
        raise NotInStabilizerError(
            "matrix does not stabilize the isotropic direction: "
            f"residual {stabilizer_residual(mat, n):.2e}")
    return float(mat[0, 0]), mat[1:n + 1, 1:n + 1].copy(), mat[0, 1:n + 1].copy()


def project_stabilizer(mat: np.ndarray, n: int) -> np.ndarray:
    """Nearest stabilizer element: average the X copies, drop forbidden blocks."""
    mat = np.asarray(mat, dtype=float)
    a = 0.5 * (mat[0, 0] - mat[n + 1, n + 1])
    rot = 0.5 * (mat[1:n + 1, 1:n + 1] - mat[1:n + 1, 1:n + 1].T)
    x = 0.5 * (mat[0, 1:n + 1] - mat[1:n + 1, n + 1])
    return assemble(a, rot, x)


def pr_boost(mat: np.ndarray, n: int) -> float:
    return float(project_stabilizer(mat, n)[0, 0])


def pr_rotation(mat: np.ndarray, n: int) -> np.ndarray:
    return project_stabilizer(mat, n)[1:n + 1, 1:n + 1]


def pr_translation(mat: np.ndarray, n: int) -> np.ndarray:
    return project_stabilizer(mat, n)[0, 1:n + 1]


def bracket(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y - y @ x


# --- block structure of the Riemannian factor ------------------------------

@dataclass(frozen=True)
class BlockSplit:
    """How the n frame directions of M split into factor blocks.

    kahler_blocks: (offset, K) pairs — K is the complex-structure matrix of a
    curved factor carrying a one-dimensional rotation center; the center
    coordinate of a rotation A on that block is tr(K^T A_block)/tr(K^T K).
    flat: (offset, size) of the designated flat factor (Type 4), or None.
    """

    n: int
    kahler_blocks: tuple = ()
    flat: tuple | None = None

    @property
    def r(self) -> int:
        return len(self.kahler_blocks)

    def center_coords(self, rot: np.ndarray) -> np.ndarray:
        out = np.empty(self.r)
        for i, (off, k) in enumerate(self.kahler_blocks):
            size = k.shape[0]
            sub = rot[off:off + size, off:off + size]
            out[i] = np.einsum("ab,ab->", k, sub) / np.einsum("ab,ab->", k, k)
        return out

    def flat_components(self, x: np.ndarray) -> np.ndarray:
        if self.flat is None:
            return np.zeros(0)
        off, size = self.flat
        return np.asarray(x, dtype=float)[off:off + size]

    def curved_indices(self) -> list[int]:
        if self.flat is None:
            return list(range(self.n))
        off, size = self.flat
        return [i for i in range(self.n) if not off <= i < off + size]


def embed_block(small: np.ndarray, n: int, offset: int) -> np.ndarray:
    out = np.zeros((n, n))
    k = small.shape[0]
    out[offset:offset + k, offset:offset + k] = small
    return out


# --- spans, subalgebras, closure -------------------------------------------

REL_RANK_TOL = 1e-8


def span_basis(mats, rel_tol: float = REL_RANK_TOL, drop_tol: float = 1e-8):
    """Orthonormal (Frobenius) basis of the span; also returns singular values.

    Inputs are normalized individually first so that small-but-independent
    directions are not drowned by large generators.  Inputs whose norm is
    negligible next to the largest one (relative factor ``drop_tol``) are
    discarded before normalizing: such matrices are floating-point (or
    finite-difference) residue of exact cancellations (e.g. brackets of
    commuting elements), and blowing them up to unit norm would inject junk
    directions into the span.
    """
    arrays = [np.asarray(m, dtype=float) for m in mats]
    norms = [float(np.linalg.norm(m)) for m in arrays]
    floor = drop_tol * max(norms, default=0.0)
    rows = []
    shape = None
    for m, norm in zip(arrays, norms):
        shape = m.shape
        if norm > floor and norm > 0:
            rows.append((m / norm).ravel())
    if not rows:
        return [], np.zeros(0)
    a = np.array(rows)
    _, svals, vt = np.linalg.svd(a, full_matrices=False)
    rank = int(np.sum(svals > rel_tol * svals[0]))
    basis = [vt[i].reshape(shape) for i in range(rank)]
    return basis, svals


@dataclass
class Subalgebra:
    """Span of matrices, orthonormal under the trace pairing."""

    basis: list
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    closed: bool = False

    @property
    def dim(self) -> int:
        return len(self.basis)

    def project(self, mat: np.ndarray) -> np.ndarray:
        out = np.zeros_like(np.asarray(mat, dtype=float))
        for b in self.basis:
            out += np.einsum("ab,ab->", b, mat) * b
        return out

    def residual(self, mat: np.ndarray) -> float:
        """Relative distance of mat from the span."""
        mat = np.asarray(mat, dtype=float)
        norm = np.linalg.norm(mat)
        if norm == 0:
            return 0.0
        return float(np.linalg.norm(mat - self.project(mat)) / norm)

    def contains(self, mat: np.ndarray, tol: float = 1e-6) -> bool:
        return self.residual(mat) < tol

    def contains_all(self, other: "Subalgebra", tol: float = 1e-6) -> bool:
        return all(self.contains(b, tol) for b in other.basis)

    def gram_residual(self) -> float:
        k = self.dim
        g = np.empty((k, k))
        for i, bi in enumerate(self.basis):
            for j, bj in enumerate(self.basis):
                g[i, j] = np.einsum("ab,ab->", bi, bj)
        return float(np.max(np.abs(g - np.eye(k)))) if k else 0.0

    def bracket_residual(self) -> float:
        worst = 0.0
        for i, bi in enumerate(self.basis):
            for bj in self.basis[i + 1:]:
                worst = max(worst, self.residual(bracket(bi, bj)))
        return worst


def lie_closure(mats, rel_tol: float = REL_RANK_TOL, max_iter: int = 12) -> Subalgebra:
    """Close a generator list under brackets; dimension must stabilize."""
    basis, svals = span_basis(mats, rel_tol)
    if not basis:
        return Subalgebra([], np.zeros(0), closed=True)
    dims = [len(basis)]
    for _ in range(max_iter):
        brackets = [bracket(x, y) for i, x in enumerate(basis) for y in basis[i + 1:]]
        new_basis, svals = span_basis(list(basis) + brackets, rel_tol)
        dims.append(len(new_basis))
        if dims[-1] == dims[-2]:
            sub = Subalgebra(new_basis, svals, closed=True)
            return sub
        basis = new_basis
    raise ToleranceError(
        f"Lie closure dimension did not stabilize: {dims}; "
        "the rank tolerance may be too tight for these generators")


# --- the four admissible templates ------------------------------------------

@dataclass
class HolonomyTemplate:
    """One of the four stabilizer subalgebra families, with its parameters."""

    type_tag: int
    n: int
    h_basis: list            # n x n antisymmetric matrices
    split: BlockSplit
    phi: np.ndarray | None = None   # boost = phi . center  (Type 3)
    psi: np.ndarray | None = None   # flat X block = psi @ center  (Type 4)

    @property
    def dim_h(self) -> int:
        return len(self.h_basis)

    @property
    def dim(self) -> int:
        n = self.n
        if self.type_tag == 1:
            return 1 + n + self.dim_h
        if self.type_tag in (2, 3):
            return n + self.dim_h
        m = n - self.split.flat[1]
        return m + self.dim_h

    def basis(self) -> list:
        """Explicit full-matrix basis of the template algebra."""
        n = self.n
        out = []
        if self.type_tag == 1:
            out.append(assemble(1.0, np.zeros((n, n)), np.zeros(n)))
        for h in self.h_basis:
            z = self.split.center_coords(h)
            a = float(self.phi @ z) if self.type_tag == 3 else 0.0
            x = np.zeros(n)
            if self.type_tag == 4:
                off, size = self.split.flat
                x[off:off + size] = self.psi @ z
            out.append(assemble(a, h, x))
        free = range(n) if self.type_tag != 4 else self.split.curved_indices()
        for k in free:
            e = np.zeros(n)
            e[k] = 1.0
            out.append(assemble(0.0, np.zeros((n, n)), e))
        return out

    def span(self) -> Subalgebra:
        basis, svals = span_basis(self.basis())
        sub = Subalgebra(basis, svals)
        sub.closed = sub.bracket_residual() < 1e-8
        return sub


def classify(sub: Subalgebra, split: BlockSplit, tol: float = 1e-5,
             zero_functional: float = 1e-6):
    """Match a closed stabilizer subalgebra against the four templates.

    Returns (HolonomyTemplate, fit_report).  The fit report carries every
    residual that went into the decision; if no template is consistent, a
    ClassificationError with that table is raised.
    """
    n = split.n
    report: dict = {"n": n, "dim": sub.dim}
    if sub.dim == 0:
        raise ClassificationError("zero algebra matches no template", residuals=report)

    try:
        decomposed = [decompose(b, n) for b in sub.basis]
    except NotInStabilizerError as exc:
        # A numerically degenerate closure (e.g. generators starved down to
        # the rank cutoff) can escape the stabilizer entirely; that is a
        # classification failure, not a caller bug.
        report["stabilizer_residuals"] = [so_residual(b, n) for b in sub.basis]
        raise ClassificationError(
            f"closure basis left the isotropy stabilizer: {exc}",
            residuals=report) from exc
    boosts = np.array([d[0] for d in decomposed])
    rots = [d[1] for d in decomposed]
    xs = [d[2] for d in decomposed]

    h_basis, h_svals = span_basis(rots)
    dim_h = len(h_basis)
    h_sub = Subalgebra(h_basis, h_svals)
    h_closure = lie_closure(h_basis) if h_basis else Subalgebra([], closed=True)
    report.update({
        "dim_h": dim_h,
        "h_closure_dim": h_closure.dim,
        "max_boost": float(np.max(np.abs(boosts))),
        "rotation_singular_values": h_svals.tolist(),
    })
    if h_closure.dim != dim_h:
        raise ClassificationError(
            "rotation parts do not span a closed algebra", residuals=report)

    centers = np.array([split.center_coords(a) for a in rots])  # (k, r)
    boost_present = report["max_boost"] > tol

    phi = psi = None
    if boost_present:
        if split.r > 0:
            phi_fit, res, *_ = np.linalg.lstsq(centers, boosts, rcond=None)
            pred = centers @ phi_fit
            rel = float(np.linalg.norm(boosts - pred) / np.linalg.norm(boosts))
            report["phi_fit_residual"] = rel
            report["phi"] = phi_fit.tolist()
            if rel < tol and np.linalg.norm(phi_fit) > zero_functional:
                phi = phi_fit
        type_tag = 3 if phi is not None else 1
    else:
        flat = np.array([split.flat_components(x) for x in xs])  # (k, n_flat)
        if split.flat is not None and split.r > 0 and flat.size:
            psi_fit, *_ = np.linalg.lstsq(centers, flat, rcond=None)  # (r, n_flat)
            psi_fit = psi_fit.T  # (n_flat, r)
            pred = centers @ psi_fit.T
            denom = float(np.linalg.norm(flat))
            rel = float(np.linalg.norm(flat - pred) / denom) if denom > 0 else 1.0
            report["psi_fit_residual"] = rel
            report["psi"] = psi_fit.tolist()
            surjective = (np.linalg.matrix_rank(psi_fit, tol=zero_functional)
                          == split.flat[1])
            report["psi_surjective"] = bool(surjective)
            if (rel < tol and np.linalg.norm(psi_fit) > zero_functional
                    and surjective and denom > zero_functional):
                psi = psi_fit
        type_tag = 4 if psi is not None else 2

    template = HolonomyTemplate(type_tag, n, h_basis, split, phi=phi, psi=psi)
    report["type_tag"] = type_tag
    report["template_dim"] = template.dim

    tspan = template.span()
    report["template_span_dim"] = tspan.dim
    containment = max(tspan.residual(b) for b in sub.basis)
    report["containment_residual"] = containment
    if sub.dim != tspan.dim or containment > max(tol, 1e-6):
        raise ClassificationError(
            f"algebra (dim {sub.dim}) does not match template type {type_tag} "
            f"(dim {tspan.dim}, containment residual {containment:.2e})",
            residuals=report)
    return template, report
