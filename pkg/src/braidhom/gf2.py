"""Exact sparse linear algebra over the two-element field.

Vectors are Python integers used as bitsets (bit j = coordinate j), rows
of a matrix likewise; elimination is plain XOR.  The sizes that appear
after the symbolic reductions elsewhere in this package are modest, so
int-bitset rows beat fancier packed representations while staying exact.
"""

from __future__ import annotations

from .errors import InvariantViolationError


def _low_bit(v: int) -> int:
    return (v & -v).bit_length() - 1


class F2Matrix:
    """A matrix over GF(2); ``rows[r]`` has bit ``c`` set iff entry (r, c) is 1."""

    __slots__ = ("nrows", "ncols", "rows")

    def __init__(self, nrows: int, ncols: int, rows: list[int]):
        if len(rows) != nrows:
            raise ValueError("row count mismatch")
        self.nrows = nrows
        self.ncols = ncols
        self.rows = rows

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "F2Matrix":
        return cls(nrows, ncols, [0] * nrows)

    @classmethod
    def identity(cls, n: int) -> "F2Matrix":
        return cls(n, n, [1 << i for i in range(n)])

    @classmethod
    def from_entries(cls, nrows: int, ncols: int, entries) -> "F2Matrix":
        rows = [0] * nrows
        for r, c in entries:
            rows[r] ^= 1 << c
        return cls(nrows, ncols, rows)

    @classmethod
    def from_dense(cls, data) -> "F2Matrix":
        rows = []
        ncols = len(data[0]) if data else 0
        for row in data:
            acc = 0
            for c, val in enumerate(row):
                if val % 2:
                    acc |= 1 << c
            rows.append(acc)
        return cls(len(data), ncols, rows)

    @classmethod
    def from_columns(cls, columns: list[int], nrows: int) -> "F2Matrix":
        rows = [0] * nrows
        for c, col in enumerate(columns):
            v = col
            while v:
                r = _low_bit(v)
                v &= v - 1
                rows[r] |= 1 << c
        return cls(nrows, len(columns), rows)

    def column(self, c: int) -> int:
        acc = 0
        mask = 1 << c
        for r, row in enumerate(self.rows):
            if row & mask:
                acc |= 1 << r
        return acc

    def columns(self) -> list[int]:
        """All columns at once; linear in the number of nonzero entries."""
        cols = [0] * self.ncols
        for r, row in enumerate(self.rows):
            bit = 1 << r
            while row:
                c = (row & -row).bit_length() - 1
                row &= row - 1
                cols[c] |= bit
        return cols

    def apply(self, vector: int) -> int:
        """Matrix times column vector (vector has bit c per source coordinate)."""
        acc = 0
        for r, row in enumerate(self.rows):
            if (row & vector).bit_count() & 1:
                acc |= 1 << r
        return acc

    def __matmul__(self, other: "F2Matrix") -> "F2Matrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        rows = []
        for row in self.rows:
            acc = 0
            v = row
            while v:
                k = _low_bit(v)
                v &= v - 1
                acc ^= other.rows[k]
            rows.append(acc)
        return F2Matrix(self.nrows, other.ncols, rows)

    def __add__(self, other: "F2Matrix") -> "F2Matrix":
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise ValueError("shape mismatch")
        return F2Matrix(
            self.nrows, self.ncols, [a ^ b for a, b in zip(self.rows, other.rows)]
        )

    def is_zero(self) -> bool:
        return not any(self.rows)

    def transpose(self) -> "F2Matrix":
        return F2Matrix.from_columns(self.rows, self.ncols)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, F2Matrix)
            and self.nrows == other.nrows
            and self.ncols == other.ncols
            and self.rows == other.rows
        )

    def __hash__(self):
        return hash((self.nrows, self.ncols, tuple(self.rows)))

    def to_dense(self) -> list[list[int]]:
        return [
            [(row >> c) & 1 for c in range(self.ncols)] for row in self.rows
        ]

    def __repr__(self) -> str:
        return f"F2Matrix({self.nrows}x{self.ncols})"


class Echelon:
    """Growing echelonized family of bit vectors with optional tag tracking.

    Tags accumulate under XOR alongside the vectors, which lets callers
    express reduced vectors over designated generators.
    """

    __slots__ = ("pivots",)

    def __init__(self):
        self.pivots: dict[int, tuple[int, int]] = {}

    def reduce(self, v: int, tag: int = 0) -> tuple[int, int]:
        while v:
            p = _low_bit(v)
            if p not in self.pivots:
                break
            pv, pt = self.pivots[p]
            v ^= pv
            tag ^= pt
        return v, tag

    def insert(self, v: int, tag: int = 0) -> bool:
        """Reduce and insert; returns False if v was already in the span."""
        v, tag = self.reduce(v, tag)
        if v == 0:
            return False
        self.pivots[_low_bit(v)] = (v, tag)
        return True

    def contains(self, v: int) -> bool:
        return self.reduce(v)[0] == 0

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def basis(self) -> list[int]:
        return [self.pivots[p][0] for p in sorted(self.pivots)]


def rank_ker_im(matrix: F2Matrix) -> tuple[int, F2Matrix, F2Matrix]:
    """Rank, kernel basis, and image basis of a GF(2) matrix.

    Kernel rows are vectors v of length ``ncols`` with Mv = 0; image rows
    are a basis of the column space (vectors of length ``nrows``).  Exact
    rank-nullity holds by construction: rank + dim ker = ncols.
    """
    ech = Echelon()
    kernel_rows: list[int] = []
    image_cols: list[int] = []
    all_cols = matrix.columns()
    for c in range(matrix.ncols):
        col = all_cols[c]
        v, tag = ech.reduce(col, 1 << c)
        if v == 0:
            kernel_rows.append(tag)
        else:
            ech.pivots[_low_bit(v)] = (v, tag)
            image_cols.append(col)
    rank = len(image_cols)
    kernel = F2Matrix(len(kernel_rows), matrix.ncols, kernel_rows)
    image = F2Matrix(len(image_cols), matrix.nrows, image_cols)
    return rank, kernel, image


class Subquotient:
    """Cycles modulo boundaries in one graded slot, with chosen representatives.

    Representatives are the echelon complement of the boundary space inside
    the cycle space, taken in the deterministic order the cycle basis is
    supplied, so they are stable across runs.
    """

    __slots__ = ("ambient_dim", "reps", "_reducer", "_boundary_rank")

    def __init__(self, ambient_dim: int, cycles: list[int], boundaries: list[int]):
        self.ambient_dim = ambient_dim
        self._reducer = Echelon()
        cycle_check = Echelon()
        for z in cycles:
            cycle_check.insert(z)
        for bdry in boundaries:
            if not cycle_check.contains(bdry):
                raise InvariantViolationError("boundary vector is not a cycle")
            self._reducer.insert(bdry, 0)
        self._boundary_rank = self._reducer.rank
        self.reps: list[int] = []
        for z in cycles:
            v, t = self._reducer.reduce(z, 0)
            if v:
                # stored invariant: v == (XOR of reps over tag) modulo boundaries
                self._reducer.pivots[_low_bit(v)] = (v, t ^ (1 << len(self.reps)))
                self.reps.append(z)

    @classmethod
    def from_parts(
        cls, ambient_dim: int, reps: list[int], boundaries: list[int]
    ) -> "Subquotient":
        """Rebuild from serialized representatives and boundary basis.

        Skips the cycle-membership validation; intended for cache reload of
        objects this class produced earlier.
        """
        obj = cls.__new__(cls)
        obj.ambient_dim = ambient_dim
        obj._reducer = Echelon()
        for bdry in boundaries:
            obj._reducer.insert(bdry, 0)
        obj._boundary_rank = obj._reducer.rank
        obj.reps = []
        for z in reps:
            v, t = obj._reducer.reduce(z, 0)
            if not v:
                raise InvariantViolationError("serialized representative collapsed")
            obj._reducer.pivots[_low_bit(v)] = (v, t ^ (1 << len(obj.reps)))
            obj.reps.append(z)
        return obj

    @property
    def dim(self) -> int:
        return len(self.reps)

    @property
    def boundary_rank(self) -> int:
        return self._boundary_rank

    def reduce(self, v: int) -> int:
        """Class of ``v`` as a coefficient bitmask over the representatives.

        Raises if ``v`` does not lie in cycles + boundaries, which callers
        use as a well-definedness check for induced maps.
        """
        rem, tag = self._reducer.reduce(v, 0)
        if rem:
            raise InvariantViolationError(
                "vector not in the cycle-plus-boundary span"
            )
        return tag

    def class_vector(self, coeffs: int) -> int:
        """Ambient representative of a class given by a coefficient bitmask."""
        acc = 0
        v = coeffs
        while v:
            k = _low_bit(v)
            v &= v - 1
            acc ^= self.reps[k]
        return acc


def homology_line(
    dims: dict[int, int], maps: dict[int, F2Matrix]
) -> dict[int, Subquotient]:
    """Homology of a complex laid out on integer positions with d: p -> p+1.

    ``maps[p]`` is the matrix from position p to p+1; missing entries are
    zero.  Squares to zero is the caller's responsibility (checked when the
    composite is formed elsewhere).
    """
    out: dict[int, Subquotient] = {}
    for p, dim in dims.items():
        outgoing = maps.get(p)
        if outgoing is None or outgoing.nrows == 0:
            cycles = [1 << i for i in range(dim)]
        else:
            _, kernel, _ = rank_ker_im(outgoing)
            cycles = list(kernel.rows)
        incoming = maps.get(p - 1)
        boundaries: list[int] = []
        if incoming is not None and incoming.ncols:
            _, _, image = rank_ker_im(incoming)
            boundaries = list(image.rows)
        out[p] = Subquotient(dim, cycles, boundaries)
    return out


def induced_matrix(
    chain_map: F2Matrix, source: Subquotient, target: Subquotient
) -> F2Matrix:
    """Matrix induced on homology by a chain map given on ambient spaces."""
    cols = []
    for rep in source.reps:
        image = chain_map.apply(rep)
        cols.append(target.reduce(image))
    return F2Matrix.from_columns(cols, target.dim)
