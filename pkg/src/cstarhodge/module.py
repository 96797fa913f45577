"""Finitely generated Hilbert modules over a block matrix algebra.

A module is A^m, or the submodule cut out by a self-adjoint idempotent
A-matrix acting on the right.  Vectors are m-tuples of algebra elements.
The A-valued inner product is

    (u, v) = sum_i v_i u_i*

which is conjugate-linear in the first slot and satisfies
(a.u, v) = (u, v) a*  and  (u, a.v) = a (u, v).

Internally a vector keeps one ndarray per algebra block, shaped
(rank, n_b, n_b), so bulk operations stay vectorized.  ``vec`` flattens a
vector to C^{rank*d}; under that flattening the complex trace of the
A-valued inner product becomes the ordinary Hermitian product, which the
morphism layer uses as its numerical shadow.
"""

from __future__ import annotations

import numpy as np

from .algebra import AlgebraElement, AlgebraSpec
from .errors import SpecMismatch

__all__ = [
    "ModuleSpec",
    "ModuleVector",
    "act",
    "inner_product",
    "orthogonal_check",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _entry_blocks(spec: AlgebraSpec, rank: int, entries) -> tuple:
    """Stack a list of algebra elements into per-block arrays (rank, n, n)."""
    if len(entries) != rank:
        raise SpecMismatch(f"expected {rank} entries, got {len(entries)}")
    out = []
    for b, n in enumerate(spec.block_sizes):
        arr = np.zeros((rank, n, n), dtype=complex)
        for i, e in enumerate(entries):
            if e.spec != spec:
                raise SpecMismatch("entry over a different algebra spec")
            arr[i] = e.blocks[b]
        out.append(_freeze(arr))
    return tuple(out)


def _amat_blocks(spec: AlgebraSpec, m: int, n: int, rows) -> tuple:
    """Stack an m x n matrix of algebra elements into arrays (m, n, nb, nb)."""
    if len(rows) != m:
        raise SpecMismatch(f"expected {m} rows, got {len(rows)}")
    out = []
    for b, nb in enumerate(spec.block_sizes):
        arr = np.zeros((m, n, nb, nb), dtype=complex)
        for i, row in enumerate(rows):
            if len(row) != n:
                raise SpecMismatch(f"row {i} has {len(row)} entries, expected {n}")
            for j, e in enumerate(row):
                if e.spec != spec:
                    raise SpecMismatch("matrix entry over a different algebra spec")
                arr[i, j] = e.blocks[b]
        out.append(_freeze(arr))
    return tuple(out)


class ModuleSpec:
    """A^rank, optionally cut down by a right-acting self-adjoint idempotent."""

    def __init__(self, algebra: AlgebraSpec, rank: int, projection=None, tol: float = 1e-9):
        rank = int(rank)
        if rank < 0:
            raise ValueError("rank must be nonnegative")
        self.algebra = algebra
        self.rank = rank
        if projection is None:
            self.projection = None
        else:
            if isinstance(projection, tuple):
                blocks = projection
            else:
                blocks = _amat_blocks(algebra, rank, rank, projection)
            self.projection = tuple(_freeze(np.array(p, dtype=complex)) for p in blocks)
            self._check_projection(tol)

    def _check_projection(self, tol: float):
        for p in self.projection:
            adj = np.conj(np.transpose(p, (1, 0, 3, 2)))
            if p.size and np.abs(p - adj).max() > tol:
                raise SpecMismatch("projection is not self-adjoint")
            sq = np.einsum("ijab,jkbc->ikac", p, p)
            if p.size and np.abs(sq - p).max() > tol:
                raise SpecMismatch("projection is not idempotent")

    def __eq__(self, other):
        if not isinstance(other, ModuleSpec):
            return False
        if self.algebra != other.algebra or self.rank != other.rank:
            return False
        if (self.projection is None) != (other.projection is None):
            return False
        if self.projection is not None:
            return all(
                np.array_equal(p, q)
                for p, q in zip(self.projection, other.projection)
            )
        return True

    def __hash__(self):
        return hash((self.algebra, self.rank, self.projection is None))

    def __repr__(self):
        tag = "projective " if self.projection is not None else ""
        return f"ModuleSpec({tag}rank={self.rank} over {self.algebra.block_sizes})"

    @property
    def concrete_dim(self) -> int:
        """Complex dimension of the module's shadow subspace.

        For a free module this is rank * d.  With a projection present it is
        the rank of the projection's shadow, an integer recovered exactly
        from block traces because the shadow is idempotent and self-adjoint.
        """
        if self.projection is None:
            return self.rank * self.algebra.dim
        total = 0.0
        for nb, p in zip(self.algebra.block_sizes, self.projection):
            # shadow trace of right multiplication by x is nb * tr(x)
            total += nb * float(np.trace(np.trace(p, axis1=2, axis2=3)).real)
        return int(round(total))

    # -- vectors ---------------------------------------------------------------

    def vector(self, entries) -> "ModuleVector":
        return ModuleVector(self, _entry_blocks(self.algebra, self.rank, entries))

    def zero_vector(self) -> "ModuleVector":
        return ModuleVector(
            self,
            tuple(
                _freeze(np.zeros((self.rank, n, n), dtype=complex))
                for n in self.algebra.block_sizes
            ),
        )

    def basis_vector(self, i: int) -> "ModuleVector":
        """Standard generator e_i with the algebra unit in slot i."""
        if not 0 <= i < self.rank:
            raise IndexError(f"slot {i} outside rank {self.rank}")
        blocks = []
        for n in self.algebra.block_sizes:
            arr = np.zeros((self.rank, n, n), dtype=complex)
            arr[i] = np.eye(n)
            blocks.append(_freeze(arr))
        return ModuleVector(self, tuple(blocks))

    def random_vector(self, rng: np.random.Generator, scale: float = 1.0) -> "ModuleVector":
        blocks = []
        for n in self.algebra.block_sizes:
            z = rng.standard_normal((self.rank, n, n)) + 1j * rng.standard_normal(
                (self.rank, n, n)
            )
            blocks.append(_freeze(scale * z / np.sqrt(2.0)))
        v = ModuleVector(self, tuple(blocks))
        if self.projection is not None:
            v = self.project(v)
        return v

    def project(self, u: "ModuleVector") -> "ModuleVector":
        """Apply the defining projection on the right (identity if free)."""
        if self.projection is None:
            return u
        blocks = tuple(
            _freeze(np.einsum("iab,ijbc->jac", ub, pb))
            for ub, pb in zip(u.blocks, self.projection)
        )
        return ModuleVector(self, blocks)

    def contains(self, u: "ModuleVector", tol: float = 1e-9) -> bool:
        if u.module is not self and u.module != self:
            return False
        if self.projection is None:
            return True
        return (self.project(u) - u).norm() <= tol

    def from_vec(self, flat: np.ndarray) -> "ModuleVector":
        """Inverse of ModuleVector.vec for this module."""
        d = self.algebra.dim
        flat = np.asarray(flat, dtype=complex).reshape(self.rank * d)
        blocks = []
        for n, off in zip(self.algebra.block_sizes, self.algebra.block_offsets):
            arr = np.zeros((self.rank, n, n), dtype=complex)
            for i in range(self.rank):
                seg = flat[i * d + off : i * d + off + n * n]
                arr[i] = seg.reshape(n, n)
            blocks.append(_freeze(arr))
        return ModuleVector(self, tuple(blocks))


class ModuleVector:
    """Element of a module; one stacked array per algebra block."""

    __slots__ = ("module", "blocks")

    def __init__(self, module: ModuleSpec, blocks):
        self.module = module
        self.blocks = tuple(blocks)

    @property
    def entries(self):
        out = []
        for i in range(self.module.rank):
            out.append(
                AlgebraElement(self.module.algebra, [b[i] for b in self.blocks])
            )
        return out

    def _require_same_module(self, other: "ModuleVector"):
        if self.module != other.module:
            raise SpecMismatch("vectors live in different modules")

    def __add__(self, other: "ModuleVector") -> "ModuleVector":
        self._require_same_module(other)
        return ModuleVector(
            self.module,
            tuple(_freeze(x + y) for x, y in zip(self.blocks, other.blocks)),
        )

    def __sub__(self, other: "ModuleVector") -> "ModuleVector":
        self._require_same_module(other)
        return ModuleVector(
            self.module,
            tuple(_freeze(x - y) for x, y in zip(self.blocks, other.blocks)),
        )

    def __neg__(self) -> "ModuleVector":
        return ModuleVector(self.module, tuple(_freeze(-x) for x in self.blocks))

    def __mul__(self, c) -> "ModuleVector":
        c = complex(c)
        return ModuleVector(self.module, tuple(_freeze(c * x) for x in self.blocks))

    __rmul__ = __mul__

    def norm(self) -> float:
        """sqrt of the algebra norm of (u, u); zero only for the zero vector."""
        g = inner_product(self, self)
        return float(np.sqrt(max(g.norm(), 0.0)))

    def vec(self) -> np.ndarray:
        """Flatten to C^{rank*d}; entry i occupies the slice [i*d, (i+1)*d)."""
        d = self.module.algebra.dim
        out = np.zeros(self.module.rank * d, dtype=complex)
        for (n, off, blk) in zip(
            self.module.algebra.block_sizes,
            self.module.algebra.block_offsets,
            self.blocks,
        ):
            for i in range(self.module.rank):
                out[i * d + off : i * d + off + n * n] = blk[i].reshape(-1)
        return out

    def close_to(self, other: "ModuleVector", tol: float = 1e-12) -> bool:
        return (self - other).norm() <= tol

    def __repr__(self):
        return f"ModuleVector(rank={self.module.rank}, norm={self.norm():.3g})"


def act(a: AlgebraElement, u: ModuleVector) -> ModuleVector:
    """Left action, a applied to every entry of u."""
    if a.spec != u.module.algebra:
        raise SpecMismatch("algebra element and module disagree on the algebra")
    blocks = tuple(
        _freeze(np.einsum("ab,ibc->iac", ab, ub))
        for ab, ub in zip(a.blocks, u.blocks)
    )
    return ModuleVector(u.module, blocks)


def inner_product(u: ModuleVector, v: ModuleVector) -> AlgebraElement:
    """A-valued inner product sum_i v_i u_i*, conjugate-linear in u."""
    if u.module != v.module:
        raise SpecMismatch("vectors live in different modules")
    out = []
    for ub, vb in zip(u.blocks, v.blocks):
        if ub.shape[0] == 0:
            out.append(np.zeros((ub.shape[1], ub.shape[1]), dtype=complex))
        else:
            out.append(np.einsum("iab,icb->ac", vb, np.conj(ub)))
    return AlgebraElement(u.module.algebra, out, copy=False)


def orthogonal_check(u: ModuleVector, v: ModuleVector, tol: float = 1e-9) -> bool:
    """True when the A-valued inner product vanishes within tol."""
    return inner_product(u, v).norm() <= tol
