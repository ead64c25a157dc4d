"""Bit-packed linear algebra over F2.

Vectors are Python ints used as bitsets: bit k is column k, so the
"leftmost" column in the deterministic scan is bit 0.  Pivoting always
takes the lowest set bit, rows are processed top to bottom, and no
randomization is used anywhere; every output is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field


def lowest_bit(v: int) -> int:
    """Index of the lowest set bit; -1 for zero."""
    return (v & -v).bit_length() - 1


def bits_of(v: int) -> list[int]:
    out = []
    while v:
        b = lowest_bit(v)
        out.append(b)
        v &= v - 1
    return out


def vector_str(v: int, length: int) -> str:
    return "".join("1" if (v >> i) & 1 else "0" for i in range(length))


class Elimination:
    """Incremental row echelon with optional transform tracking.

    Rows are fed one at a time.  Each independent row is stored reduced
    against earlier pivots (forward elimination only); dependent rows
    report the combination of earlier rows that produced them.
    """

    def __init__(self, track_transform: bool = False):
        self.track = track_transform
        self.pivot_row: dict[int, int] = {}
        self.pivot_transform: dict[int, int] = {}
        self.rank = 0
        self.count = 0

    def add(self, row: int) -> tuple[int, int]:
        """Feed one row; return (residual, transform).

        The transform includes bit `count` for the row itself, so a zero
        residual exposes the dependency as a combination of earlier rows.
        """
        tr = 1 << self.count if self.track else 0
        self.count += 1
        while row:
            c = lowest_bit(row)
            if c in self.pivot_row:
                row ^= self.pivot_row[c]
                if self.track:
                    tr ^= self.pivot_transform[c]
            else:
                self.pivot_row[c] = row
                if self.track:
                    self.pivot_transform[c] = tr
                self.rank += 1
                break
        return row, tr

    def reduce(self, v: int) -> int:
        """Reduce v against the pivot rows; zero iff v is in the row span."""
        while v:
            c = lowest_bit(v)
            if c not in self.pivot_row:
                return v
            v ^= self.pivot_row[c]
        return 0

    def reduce_with_transform(self, v: int) -> tuple[int, int]:
        tr = 0
        while v:
            c = lowest_bit(v)
            if c not in self.pivot_row:
                return v, tr
            v ^= self.pivot_row[c]
            tr ^= self.pivot_transform[c]
        return 0, tr

    def contains(self, v: int) -> bool:
        return self.reduce(v) == 0


@dataclass
class F2Matrix:
    """A rectangular matrix whose rows are int bitsets."""

    rows: list[int]
    ncols: int

    def __post_init__(self) -> None:
        mask = (1 << self.ncols) - 1
        for r in self.rows:
            if r & ~mask:
                raise ValueError("row has bits beyond ncols")

    @property
    def nrows(self) -> int:
        return len(self.rows)

    def transpose(self) -> "F2Matrix":
        cols = [0] * self.ncols
        for i, r in enumerate(self.rows):
            while r:
                c = lowest_bit(r)
                cols[c] |= 1 << i
                r &= r - 1
        return F2Matrix(cols, self.nrows)

    def mul_vector(self, x: int) -> int:
        """x * self for a row vector x of length nrows."""
        acc = 0
        while x:
            i = lowest_bit(x)
            acc ^= self.rows[i]
            x &= x - 1
        return acc

    def matmul(self, other: "F2Matrix") -> "F2Matrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        return F2Matrix([other.mul_vector(r) for r in self.rows], other.ncols)

    def rref(self) -> tuple["F2Matrix", list[int], "F2Matrix"]:
        """Reduced row echelon form.

        Returns (reduced, pivots, transform) with transform * self == reduced;
        pivot columns are scanned left to right (bit 0 first), rows top to
        bottom.  Zero rows sink to the bottom.
        """
        work = list(self.rows)
        transform = [1 << i for i in range(len(work))]
        pivots: list[int] = []
        dst = 0
        for col in range(self.ncols):
            sel = None
            for i in range(dst, len(work)):
                if (work[i] >> col) & 1:
                    sel = i
                    break
            if sel is None:
                continue
            work[dst], work[sel] = work[sel], work[dst]
            transform[dst], transform[sel] = transform[sel], transform[dst]
            for i in range(len(work)):
                if i != dst and (work[i] >> col) & 1:
                    work[i] ^= work[dst]
                    transform[i] ^= transform[dst]
            pivots.append(col)
            dst += 1
        return F2Matrix(work, self.ncols), pivots, F2Matrix(transform, self.nrows)

    def rank(self) -> int:
        elim = Elimination()
        for r in self.rows:
            elim.add(r)
        return elim.rank

    def solve(self, rhs: int) -> int | None:
        """One x with x * self == rhs, or None if rhs is outside the row space.

        Free variables are zero under the deterministic pivot order: x is
        exactly the combination of pivot rows that reduces rhs.
        """
        elim = Elimination(track_transform=True)
        for r in self.rows:
            elim.add(r)
        residual, tr = elim.reduce_with_transform(rhs)
        if residual:
            return None
        return tr

    def kernel_basis(self) -> list[int]:
        """Rows x with x * self == 0, one per dependent row, in row order."""
        elim = Elimination(track_transform=True)
        out = []
        for r in self.rows:
            residual, tr = elim.add(r)
            if residual == 0:
                out.append(tr)
        return out


class Solver:
    """Reusable solver for many right-hand sides against one matrix.

    Rows are the images of domain basis vectors; solve(rhs) returns the
    domain combination mapping to rhs (free variables zero), or None.
    """

    def __init__(self, rows: list[int]):
        self.elim = Elimination(track_transform=True)
        for r in rows:
            self.elim.add(r)

    def solve(self, rhs: int) -> int | None:
        residual, tr = self.elim.reduce_with_transform(rhs)
        if residual:
            return None
        return tr

    @property
    def rank(self) -> int:
        return self.elim.rank
