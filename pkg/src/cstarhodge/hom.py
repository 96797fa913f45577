"""Adjointable module maps as matrices over the algebra.

A morphism T: A^m -> A^n is an m x n matrix (t_ij) of algebra elements acting
on the right:

    (T u)_j = sum_i u_i t_ij

Right multiplication commutes with the left algebra action, so every such map
is automatically A-linear, and its adjoint for the A-valued inner product is
the entrywise-starred transpose.

Numerics run on the concrete shadow: flattening each module by
ModuleVector.vec turns T into a complex (n*d) x (m*d) matrix whose Hermitian
conjugate represents T*.  The Moore-Penrose pseudoinverse is computed there
by SVD with a relative cutoff, then pulled back to an algebra matrix by
orthogonally projecting onto the commutant (blockwise diagonal averaging).
Acting on the right keeps the pullback exactly A-linear; the tests check the
re-embedded result against the shadow pseudoinverse directly.
"""

from __future__ import annotations

import numpy as np

from .algebra import AlgebraElement, AlgebraSpec
from .errors import SpecMismatch
from .module import ModuleSpec, ModuleVector

__all__ = [
    "Morphism",
    "identity_morphism",
    "morphism_from_concrete",
    "random_morphism",
    "singular_rank",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def singular_rank(svals: np.ndarray, cutoff: float):
    """Rank decision on a singular spectrum with a relative cutoff.

    Returns (rank, margin) where margin says how decisively the values split:
    the factor by which the smallest kept value clears cutoff*smax and the
    largest dropped value stays below it.  margin = inf for an empty or
    unambiguous split (all kept or all dropped with room to spare is still
    reported by its ratio; only an empty spectrum gives inf).
    """
    svals = np.asarray(svals, dtype=float)
    if svals.size == 0 or svals[0] <= 0.0:
        return 0, float("inf")
    thresh = cutoff * svals[0]
    rank = int(np.count_nonzero(svals > thresh))
    margins = []
    if rank > 0:
        margins.append(svals[rank - 1] / thresh)
    if rank < svals.size and svals[rank] > 0.0:
        margins.append(thresh / svals[rank])
    return rank, (min(margins) if margins else float("inf"))


class Morphism:
    """Matrix of algebra elements from source to target, acting on the right."""

    def __init__(self, source: ModuleSpec, target: ModuleSpec, blocks):
        if source.algebra != target.algebra:
            raise SpecMismatch("source and target live over different algebras")
        self.source = source
        self.target = target
        self.algebra = source.algebra
        checked = []
        for nb, arr in zip(self.algebra.block_sizes, blocks):
            arr = np.asarray(arr, dtype=complex)
            if arr.shape != (source.rank, target.rank, nb, nb):
                raise SpecMismatch(
                    f"block array of shape {arr.shape}, expected "
                    f"{(source.rank, target.rank, nb, nb)}"
                )
            checked.append(_freeze(arr.copy()))
        self.blocks = tuple(checked)
        self._embed = None
        self._svals = None

    # -- constructors ----------------------------------------------------------

    @classmethod
    def from_entries(cls, source: ModuleSpec, target: ModuleSpec, rows) -> "Morphism":
        """Build from an m x n nested list of AlgebraElement, m = source rank."""
        spec = source.algebra
        m, n = source.rank, target.rank
        if len(rows) != m:
            raise SpecMismatch(f"expected {m} rows, got {len(rows)}")
        blocks = []
        for b, nb in enumerate(spec.block_sizes):
            arr = np.zeros((m, n, nb, nb), dtype=complex)
            for i, row in enumerate(rows):
                if len(row) != n:
                    raise SpecMismatch(f"row {i} has {len(row)} entries, expected {n}")
                for j, e in enumerate(row):
                    if e.spec != spec:
                        raise SpecMismatch("entry over a different algebra spec")
                    arr[i, j] = e.blocks[b]
            blocks.append(arr)
        return cls(source, target, blocks)

    @classmethod
    def zero(cls, source: ModuleSpec, target: ModuleSpec) -> "Morphism":
        spec = source.algebra
        return cls(
            source,
            target,
            [
                np.zeros((source.rank, target.rank, nb, nb), dtype=complex)
                for nb in spec.block_sizes
            ],
        )

    def entry(self, i: int, j: int) -> AlgebraElement:
        return AlgebraElement(self.algebra, [b[i, j] for b in self.blocks])

    # -- algebraic operations ----------------------------------------------------

    def __call__(self, u: ModuleVector) -> ModuleVector:
        if u.module != self.source:
            raise SpecMismatch("vector is not in the source module")
        blocks = []
        for ub, tb in zip(u.blocks, self.blocks):
            if ub.shape[0] == 0:
                nb = tb.shape[2]
                blocks.append(np.zeros((self.target.rank, nb, nb), dtype=complex))
            else:
                blocks.append(np.einsum("iab,ijbc->jac", ub, tb))
        return ModuleVector(self.target, tuple(_freeze(b) for b in blocks))

    def adjoint(self) -> "Morphism":
        """Adjoint for the A-valued inner products: entries (T*)_ji = (t_ij)*."""
        blocks = [
            np.conj(np.transpose(tb, (1, 0, 3, 2))) for tb in self.blocks
        ]
        return Morphism(self.target, self.source, blocks)

    def __matmul__(self, other: "Morphism") -> "Morphism":
        """self after other: (self @ other)(u) = self(other(u))."""
        if not isinstance(other, Morphism):
            return NotImplemented
        if other.target != self.source:
            raise SpecMismatch("composition needs other.target == self.source")
        blocks = [
            np.einsum("ijab,jkbc->ikac", ob, sb)
            for ob, sb in zip(other.blocks, self.blocks)
        ]
        return Morphism(other.source, self.target, blocks)

    def __add__(self, other: "Morphism") -> "Morphism":
        if self.source != other.source or self.target != other.target:
            raise SpecMismatch("morphism sum needs matching source and target")
        return Morphism(
            self.source,
            self.target,
            [x + y for x, y in zip(self.blocks, other.blocks)],
        )

    def __sub__(self, other: "Morphism") -> "Morphism":
        if self.source != other.source or self.target != other.target:
            raise SpecMismatch("morphism difference needs matching source and target")
        return Morphism(
            self.source,
            self.target,
            [x - y for x, y in zip(self.blocks, other.blocks)],
        )

    def __mul__(self, c) -> "Morphism":
        c = complex(c)
        return Morphism(self.source, self.target, [c * x for x in self.blocks])

    __rmul__ = __mul__

    # -- concrete shadow ---------------------------------------------------------

    def embed(self) -> np.ndarray:
        """Shadow matrix of shape (target.rank*d, source.rank*d).

        The (j, i) block of size d x d is right multiplication by t_ij, i.e.
        the direct sum over algebra blocks of kron(I_nb, t_ij_block^T) in the
        row-major vec convention.
        """
        if self._embed is None:
            spec = self.algebra
            d = spec.dim
            m, n = self.source.rank, self.target.rank
            out = np.zeros((n * d, m * d), dtype=complex)
            view = out.reshape(n, d, m, d)
            for nb, off, tb in zip(spec.block_sizes, spec.block_offsets, self.blocks):
                # kron(I_nb, t^T) written as nb diagonal slices, vectorized in (i, j)
                piece = tb.transpose(1, 3, 0, 2)  # [j, r, i, c] = t_ij[c, r]
                for k in range(nb):
                    sl = slice(off + k * nb, off + (k + 1) * nb)
                    view[:, sl, :, sl] = piece
            self._embed = _freeze(out)
        return self._embed

    def singular_values(self) -> np.ndarray:
        if self._svals is None:
            mat = self.embed()
            if min(mat.shape) == 0:
                self._svals = np.zeros(0)
            else:
                self._svals = _freeze(np.linalg.svd(mat, compute_uv=False))
        return self._svals

    def norm(self) -> float:
        s = self.singular_values()
        return float(s[0]) if s.size else 0.0

    def concrete_rank(self, cutoff: float = 1e-10) -> int:
        rank, _ = singular_rank(self.singular_values(), cutoff)
        return rank

    def rank_with_margin(self, cutoff: float = 1e-10):
        return singular_rank(self.singular_values(), cutoff)

    # -- pseudoinverse and projections --------------------------------------------

    def pseudoinverse(self, cutoff: float = 1e-10) -> "Morphism":
        """Moore-Penrose pseudoinverse, singular values below cutoff*smax dropped."""
        mat = self.embed()
        if min(mat.shape) == 0 or not mat.any():
            return Morphism.zero(self.target, self.source)
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        rank, _ = singular_rank(s, cutoff)
        inv = np.zeros_like(s)
        inv[:rank] = 1.0 / s[:rank]
        pinv = (vh.conj().T * inv) @ u.conj().T
        return morphism_from_concrete(self.target, self.source, pinv)

    def kernel_projection(self, cutoff: float = 1e-10) -> "Morphism":
        """Orthogonal projection onto the kernel: module identity minus T+T."""
        return identity_morphism(self.source) - self.pseudoinverse(cutoff) @ self

    def range_decomposition(self, cutoff: float = 1e-10):
        """Pair of complementary projections (onto Ker T, onto Rng T*)."""
        coimage = self.pseudoinverse(cutoff) @ self
        return identity_morphism(self.source) - coimage, coimage

    # -- diagnostics ---------------------------------------------------------------

    def respects_projections(self, tol: float = 1e-9) -> bool:
        """When source or target are projective, T must not leak outside them."""
        restricted = self @ identity_morphism(self.source)
        wrapped = identity_morphism(self.target) @ restricted
        return (wrapped - restricted).norm() <= tol

    def close_to(self, other: "Morphism", tol: float = 1e-12) -> bool:
        return (self - other).norm() <= tol

    def __repr__(self):
        return (
            f"Morphism({self.source.rank} -> {self.target.rank} "
            f"over {self.algebra.block_sizes})"
        )


def identity_morphism(module: ModuleSpec) -> Morphism:
    """Identity of the module: the defining projection if present, else 1."""
    if module.projection is not None:
        return Morphism(module, module, [p.copy() for p in module.projection])
    blocks = []
    for nb in module.algebra.block_sizes:
        arr = np.zeros((module.rank, module.rank, nb, nb), dtype=complex)
        for i in range(module.rank):
            arr[i, i] = np.eye(nb)
        blocks.append(arr)
    return Morphism(module, module, blocks)


def morphism_from_concrete(
    source: ModuleSpec, target: ModuleSpec, mat: np.ndarray
) -> Morphism:
    """Pull a shadow matrix back to an algebra matrix.

    This is the orthogonal projection (in the Frobenius sense) onto the space
    of right-multiplication operators: cross terms between algebra blocks are
    dropped and the diagonal kron structure is recovered by averaging the
    repeated copies.  Matrices that already commute with the left action are
    reproduced up to roundoff.
    """
    spec = source.algebra
    d = spec.dim
    m, n = source.rank, target.rank
    mat = np.asarray(mat, dtype=complex)
    if mat.shape != (n * d, m * d):
        raise SpecMismatch(f"concrete matrix of shape {mat.shape}, expected {(n * d, m * d)}")
    view = mat.reshape(n, d, m, d)
    blocks = []
    for nb, off in zip(spec.block_sizes, spec.block_offsets):
        acc = np.zeros((n, nb, m, nb), dtype=complex)
        for k in range(nb):
            sl = slice(off + k * nb, off + (k + 1) * nb)
            acc += view[:, sl, :, sl]
        # acc[j, r, i, c] averages the copies of t_ij^T; undo the transpose
        blocks.append(acc.transpose(2, 0, 3, 1) / nb)
    return Morphism(source, target, blocks)


def random_morphism(
    source: ModuleSpec,
    target: ModuleSpec,
    rng: np.random.Generator,
    scale: float = 1.0,
) -> Morphism:
    """Morphism with independent Gaussian algebra entries."""
    spec = source.algebra
    m, n = source.rank, target.rank
    blocks = []
    for nb in spec.block_sizes:
        z = rng.standard_normal((m, n, nb, nb)) + 1j * rng.standard_normal(
            (m, n, nb, nb)
        )
        blocks.append(scale * z / np.sqrt(2.0))
    t = Morphism(source, target, blocks)
    if source.projection is not None:
        t = t @ identity_morphism(source)
    if target.projection is not None:
        t = identity_morphism(target) @ t
    return t
