"""Mixed multiple orthogonal polynomials for a pair of Nikishin systems
sharing their base measure.

Given multi-indices n1 (one entry per generator of the first system) and n2
(one per generator of the second) with |n2| + 1 = |n1|, the solver finds
polynomials a_0, ..., a_{m1} with deg a_j <= n1[j] - 1 such that the
combined form  A_0 = sum_j a_j * shat1_{1,j}  is orthogonal to x^nu against
every chained measure <s2_0, ..., s2_k> for nu < n2[k].  The normalization
pins the leading coefficient of the last nonzero block to one.

Index conventions follow the two-sided layout used throughout the package:
nonnegative j labels the first system's chain, negative j the second's, so
the forms A_j exist for j = -m2-1, ..., m1 and the zero polynomials Q_j for
j = -m2, ..., m1 (with Q at both outer boundaries identically one).
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

from mpmath import mp

from .measures import DiscretizedMeasure, MeasureError, NikishinSystem
from .polys import poly_eval, poly_eval_from_roots, poly_from_roots
from .precision import pivot_threshold, refine_tolerance, working


class NormalityViolation(ArithmeticError):
    """The moment system is defective for an index the theory calls normal."""


class ZeroCountMismatch(ArithmeticError):
    """A form shows a different number of sign changes than its index predicts."""


@dataclass(frozen=True)
class IndexPair:
    """Multi-index pair (n1; n2) with |n2| + 1 = |n1|, entries >= 0."""

    n1: tuple[int, ...]
    n2: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "n1", tuple(int(v) for v in self.n1))
        object.__setattr__(self, "n2", tuple(int(v) for v in self.n2))
        if not self.n1 or not self.n2:
            raise ValueError("both index components must be nonempty")
        if any(v < 0 for v in self.n1 + self.n2):
            raise ValueError(f"index entries must be nonnegative: {self}")
        if sum(self.n2) + 1 != sum(self.n1):
            raise ValueError(
                f"need |n2| + 1 = |n1|, got |n1|={sum(self.n1)} |n2|={sum(self.n2)}"
            )

    @property
    def m1(self) -> int:
        return len(self.n1) - 1

    @property
    def m2(self) -> int:
        return len(self.n2) - 1

    @property
    def size(self) -> int:
        return sum(self.n1)

    def is_decreasing(self) -> bool:
        dec1 = all(self.n1[i] >= self.n1[i + 1] for i in range(self.m1))
        dec2 = all(self.n2[i] >= self.n2[i + 1] for i in range(self.m2))
        return dec1 and dec2

    def tail_sum1(self, j: int) -> int:
        """n1[j] + ... + n1[m1]."""
        return sum(self.n1[j:])

    def tail_sum2(self, j: int) -> int:
        """n2[j] + ... + n2[m2]."""
        return sum(self.n2[j:])

    def zero_count(self, j: int) -> int:
        """Predicted number of zeros of the form A_j, for j in
        [-m2-1, m1]: tail_sum1(j) - 1 on the first side, tail_sum2(-j) on
        the second, zero at the outer boundary j = -m2 - 1."""
        if j > self.m1 or j < -self.m2 - 1:
            raise IndexError(f"form index {j} out of range for {self}")
        if j >= 0:
            return self.tail_sum1(j) - 1
        if j == -self.m2 - 1:
            return 0
        return self.tail_sum2(-j)

    def shifted(self, l1: int, l2: int) -> "IndexPair":
        """Index with one unit added to component l1 of n1 and l2 of n2."""
        if not (0 <= l1 <= self.m1 and 0 <= l2 <= self.m2):
            raise IndexError(f"shift ({l1}, {l2}) out of range for {self}")
        n1 = tuple(v + (1 if i == l1 else 0) for i, v in enumerate(self.n1))
        n2 = tuple(v + (1 if i == l2 else 0) for i, v in enumerate(self.n2))
        return IndexPair(n1, n2)

    def column_layout(self) -> tuple:
        """Unknown layout (j, p): block j contributes n1[j] columns for the
        coefficients of a_j, lowest power first."""
        return tuple(
            (j, p) for j in range(self.m1 + 1) for p in range(self.n1[j])
        )

    def row_layout(self) -> tuple:
        """Condition layout (k, nu): block k contributes n2[k] rows."""
        return tuple(
            (k, nu) for k in range(self.m2 + 1) for nu in range(self.n2[k])
        )

    def to_dict(self) -> dict:
        return {"n1": list(self.n1), "n2": list(self.n2)}


def decreasing_indices(m1: int, m2: int, max_size: int):
    """All decreasing-class index pairs with |n1| <= max_size, sizes
    ascending, lexicographic within a size.  Components are non-increasing."""

    def partitions(total: int, parts: int, cap: int | None = None):
        if parts == 1:
            if cap is None or total <= cap:
                yield (total,)
            return
        hi = total if cap is None else min(total, cap)
        for first in range(hi, -1, -1):
            for rest in partitions(total - first, parts - 1, first):
                yield (first,) + rest

    out = []
    for size in range(1, max_size + 1):
        firsts = sorted(partitions(size, m1 + 1), reverse=True)
        seconds = sorted(partitions(size - 1, m2 + 1), reverse=True)
        for n1 in firsts:
            for n2 in seconds:
                out.append(IndexPair(n1, n2))
    return out


@dataclass(frozen=True, eq=False)
class NikishinPair:
    """Two Nikishin systems sharing their base measure.

    Unified measure indexing: measure(j) is the first system's generator j
    for j >= 0 and the second system's generator -j for j <= 0 (both at
    j = 0 give the shared base).
    """

    s1: NikishinSystem
    s2: NikishinSystem
    _moment_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        b1 = self.s1.generators[0]
        b2 = self.s2.generators[0]
        same = b1 is b2 or (
            b1.spec == b2.spec
            and b1.precision_bits == b2.precision_bits
            and len(b1.nodes) == len(b2.nodes)
        )
        if not same:
            raise MeasureError("the two systems must share their base measure")

    @property
    def m1(self) -> int:
        return self.s1.m

    @property
    def m2(self) -> int:
        return self.s2.m

    @property
    def base(self) -> DiscretizedMeasure:
        return self.s1.generators[0]

    @property
    def precision_bits(self) -> int:
        return self.base.precision_bits

    def measure(self, j: int) -> DiscretizedMeasure:
        if j >= 0:
            return self.s1.generators[j]
        return self.s2.generators[-j]

    def hull(self, j: int):
        return self.measure(j).hull

    def swapped(self) -> "NikishinPair":
        return NikishinPair(s1=self.s2, s2=self.s1)

    def base_density1(self, j: int) -> tuple:
        """shat1_{1,j} on the base support (ones for j = 0)."""
        return self.s1.density(0, j)

    def base_density2(self, k: int) -> tuple:
        """shat2_{1,k} on the base support (ones for k = 0)."""
        return self.s2.density(0, k)

    def mixed_moment(self, j: int, k: int, power: int):
        """Integral of x^power * shat1_{1,j}(x) * shat2_{1,k}(x) dbase(x)."""
        key = (j, k, power)
        if key not in self._moment_cache:
            base = self.base
            d1 = self.base_density1(j)
            d2 = self.base_density2(k)
            with working(base.precision_bits):
                self._moment_cache[key] = mp.fsum(
                    w * a * b * x**power
                    for w, a, b, x in zip(
                        base.signed_weights, d1, d2, base.support_points
                    )
                )
        return self._moment_cache[key]


def assemble_moment_system(pair: NikishinPair, index: IndexPair):
    """Homogeneous moment matrix of the orthogonality conditions: one row
    per (k, nu) in row_layout, one column per (j, p) in column_layout, entry
    equal to the base integral of x^(nu+p) shat1_{1,j} shat2_{1,k}."""
    if index.m1 != pair.m1 or index.m2 != pair.m2:
        raise ValueError(
            f"index shape ({index.m1}, {index.m2}) does not match systems "
            f"({pair.m1}, {pair.m2})"
        )
    rows = index.row_layout()
    cols = index.column_layout()
    with working(pair.precision_bits):
        mat = mp.matrix(len(rows), len(cols))
        for r, (k, nu) in enumerate(rows):
            for c, (j, p) in enumerate(cols):
                mat[r, c] = pair.mixed_moment(j, k, nu + p)
    return mat


def _solve_square(mat, rhs, rel_pivot_floor):
    """Partial-pivot elimination; returns (solution, smallest pivot ratio).
    ``mat``/``rhs`` are lists of lists / list of mpf, modified in place."""
    n = len(rhs)
    scale = max(
        (abs(v) for row in mat for v in row), default=mp.mpf(0)
    )
    if scale == 0:
        return None, mp.mpf(0)
    min_ratio = mp.inf
    for col in range(n):
        piv_row = max(range(col, n), key=lambda r: abs(mat[r][col]))
        piv = mat[piv_row][col]
        ratio = abs(piv) / scale
        min_ratio = min(min_ratio, ratio)
        if ratio < rel_pivot_floor:
            return None, min_ratio
        if piv_row != col:
            mat[col], mat[piv_row] = mat[piv_row], mat[col]
            rhs[col], rhs[piv_row] = rhs[piv_row], rhs[col]
        inv = 1 / mat[col][col]
        for r in range(col + 1, n):
            f = mat[r][col] * inv
            if f == 0:
                continue
            for c in range(col, n):
                mat[r][c] -= f * mat[col][c]
            rhs[r] -= f * rhs[col]
    sol = [mp.mpf(0)] * n
    for r in range(n - 1, -1, -1):
        acc = rhs[r]
        for c in range(r + 1, n):
            acc -= mat[r][c] * sol[c]
        sol[r] = acc / mat[r][r]
    return sol, min_ratio


def _nullspace_vector(mat, floor):
    """Right-singular vector for the smallest singular value of ``mat``
    (rows x cols, rows = cols - 1).  Raises if the kernel is not
    one-dimensional at the working scale."""
    rows, cols = mat.rows, mat.cols
    square = mp.matrix(cols, cols)
    for r in range(rows):
        for c in range(cols):
            square[r, c] = mat[r, c]
    u, s, v = mp.svd_r(square, full_matrices=True)
    smallest = s[cols - 1]
    second = s[cols - 2] if cols >= 2 else mp.inf
    scale = max(s[0], mp.mpf(1))
    if second / scale < floor:
        raise NormalityViolation(
            "moment system kernel is not one-dimensional at the working "
            f"scale (second singular value ratio {mp.nstr(second / scale, 5)}). "
            "For a Nikishin pair this almost always means the conditioning "
            "of the index outgrew the precision; rebuild the measures with "
            "more bits."
        )
    return [v[cols - 1, c] for c in range(cols)]


@dataclass(eq=False)
class MopSolution:
    """Solved coefficient blocks plus cached form evaluations.

    ``coeffs[j]`` holds the ascending coefficients of a_j (empty when
    n1[j] = 0); ``monic_block`` is the j whose leading coefficient is one.
    Treated as immutable after construction; the caches only memoize.
    """

    pair: NikishinPair
    index: IndexPair
    coeffs: tuple
    monic_block: int
    precision_bits: int
    pivot_ratio: float
    used_nullspace: bool
    _cache: dict = field(default_factory=dict, repr=False)

    def a(self, j: int, z):
        """Polynomial block a_j at z."""
        return poly_eval(self.coeffs[j], z)

    def form(self, j: int, z):
        """The form A_j at z, for j = -m2-1, ..., m1.

        Nonnegative j: sum_{k=j}^{m1} a_k(z) shat1_{j+1,k}(z) with the k = j
        term the bare polynomial.  Negative j: iterated Cauchy transform of
        A_0 through the second system's generators.
        """
        m1, m2 = self.index.m1, self.index.m2
        if j > m1 or j < -m2 - 1:
            raise IndexError(f"form index {j} out of range")
        with working(self.precision_bits):
            if j >= 0:
                acc = self.a(j, z) if self.index.n1[j] else mp.mpf(0)
                for k in range(j + 1, m1 + 1):
                    if self.index.n1[k]:
                        acc += self.a(k, z) * self.pair.s1.s_hat(j + 1, k, z)
                return acc
            t = -j
            src = self.pair.s2.generators[t - 1]
            chain = self._neg_chain(t - 1)
            return mp.fsum(
                w * v / (z - x)
                for w, v, x in zip(src.signed_weights, chain, src.support_points)
            )

    def _neg_chain(self, t: int) -> tuple:
        """Values of A_{-t} on the support of the second system's generator
        t (A_0 on the base for t = 0)."""
        key = ("chain", t)
        if key in self._cache:
            return self._cache[key]
        with working(self.precision_bits):
            if t == 0:
                base = self.pair.base
                vals = []
                for p, x in enumerate(base.support_points):
                    acc = mp.mpf(0)
                    for k in range(self.index.m1 + 1):
                        if self.index.n1[k]:
                            acc += self.a(k, x) * self.pair.base_density1(k)[p]
                    vals.append(acc)
            else:
                prev = self._neg_chain(t - 1)
                src = self.pair.s2.generators[t - 1]
                dst = self.pair.s2.generators[t]
                vals = [
                    mp.fsum(
                        w * v / (y - x)
                        for w, v, x in zip(
                            src.signed_weights, prev, src.support_points
                        )
                    )
                    for y in dst.support_points
                ]
        self._cache[key] = tuple(vals)
        return self._cache[key]

    def form_on_support(self, j: int) -> tuple:
        """Values of A_j on the support of the unified measure j,
        j = -m2, ..., m1."""
        if j > self.index.m1 or j < -self.index.m2:
            raise IndexError(f"support index {j} out of range")
        key = ("support", j)
        if key in self._cache:
            return self._cache[key]
        if j <= 0:
            vals = self._neg_chain(-j)
        else:
            meas = self.pair.s1.generators[j]
            with working(self.precision_bits):
                vals = tuple(self.form(j, x) for x in meas.support_points)
        self._cache[key] = tuple(vals)
        return self._cache[key]

    def normality_report(self, rel_tol=None) -> dict:
        """Leading-coefficient magnitudes relative to the solution scale."""
        with working(self.precision_bits):
            scale = max(
                (abs(c) for block in self.coeffs for c in block),
                default=mp.mpf(0),
            )
            out = {}
            for j, block in enumerate(self.coeffs):
                if block:
                    out[j] = abs(block[-1]) / scale if scale else mp.mpf(0)
        return out


def solve_mop(
    pair: NikishinPair, index: IndexPair, precision_bits: int | None = None
) -> MopSolution:
    """Solve the orthogonality conditions for ``index`` and normalize so the
    last nonzero block is monic.

    The square system (pinned leading coefficient moved to the right-hand
    side) is eliminated with partial pivoting; if any pivot falls below the
    precision-derived threshold relative to the matrix scale, the solver
    falls back to an SVD nullspace of the homogeneous system and rescales
    by the last nonzero coefficient.  A leading coefficient of any nonzero
    block that vanishes at the working scale raises NormalityViolation.
    """
    bits = precision_bits or pair.precision_bits
    if not any(index.n1):
        raise ValueError("index has no unknowns")
    mat = assemble_moment_system(pair, index)
    cols = index.column_layout()
    n_rows, n_cols = mat.rows, mat.cols
    floor = pivot_threshold(bits)
    with working(bits):
        used_nullspace = False
        if n_rows == 0:
            stacked = [mp.mpf(0)] * n_cols
            stacked[-1] = mp.mpf(1)
            ratio = mp.mpf(1)
        else:
            work = [
                [mat[r, c] for c in range(n_cols - 1)] for r in range(n_rows)
            ]
            rhs = [-mat[r, n_cols - 1] for r in range(n_rows)]
            sol, ratio = _solve_square(work, rhs, floor)
            if sol is None:
                used_nullspace = True
                stacked = _nullspace_vector(mat, floor)
                last = max(
                    (i for i, v in enumerate(stacked) if v != 0),
                    default=None,
                )
                if last is None:
                    raise NormalityViolation("nullspace vector is zero")
                pivot = stacked[last]
                stacked = [v / pivot for v in stacked]
            else:
                stacked = sol + [mp.mpf(1)]
        blocks = []
        pos = 0
        for j in range(index.m1 + 1):
            width = index.n1[j]
            blocks.append(tuple(stacked[pos : pos + width]))
            pos += width
        monic_block = max(j for j in range(index.m1 + 1) if index.n1[j])
        scale = max(abs(c) for b in blocks for c in b)
        lead_floor = mp.mpf(10) ** (-0.6 * bits * mp.log(2) / mp.log(10))
        for j, block in enumerate(blocks):
            if block and abs(block[-1]) <= lead_floor * scale:
                raise NormalityViolation(
                    f"block {j} of {index} has degree below n1[j] - 1 "
                    f"(leading ratio {mp.nstr(abs(block[-1]) / scale, 5)})"
                )
    return MopSolution(
        pair=pair,
        index=index,
        coeffs=tuple(blocks),
        monic_block=monic_block,
        precision_bits=bits,
        pivot_ratio=float(ratio),
        used_nullspace=used_nullspace,
    )


@functools.lru_cache(maxsize=None)
def solve_cached(pair: NikishinPair, index: IndexPair) -> MopSolution:
    """Memoized solve, keyed on system identity and index value."""
    return solve_mop(pair, index)


@dataclass(frozen=True)
class ZeroSet:
    """Simple real zeros of one form, ascending, with the predicted count."""

    j: int
    zeros: tuple
    expected: int

    def poly_eval(self, z):
        """Monic polynomial with these zeros, evaluated in product form."""
        return poly_eval_from_roots(self.zeros, z)

    def poly_coeffs(self) -> tuple:
        return poly_from_roots(self.zeros)


SCAN_GRID_FACTOR = 16
SCAN_GRID_CAP = 4096


def _refine_bracket(f, a, b, fa, fb, rel_tol):
    """Anderson-Bjorck bracket refinement with periodic bisection."""
    count = 0
    while True:
        width = b - a
        if abs(width) <= rel_tol * max(mp.mpf(1), abs(a), abs(b)):
            break
        if count % 4 == 3 or fb == fa:
            c = a + width / 2
        else:
            c = b - fb * width / (fb - fa)
            if not (a < c < b):
                c = a + width / 2
        fc = f(c)
        if fc == 0:
            return c
        if (fc > 0) == (fb > 0):
            g = 1 - fc / fb
            fa = fa * (g if g > 0 else mp.mpf("0.5"))
        else:
            a, fa = b, fb
        b, fb = c, fc
        if a > b:
            a, b, fa, fb = b, a, fb, fa
        count += 1
        if count > 1400:
            raise ZeroCountMismatch(
                f"bracket refinement stalled near {mp.nstr(a, 10)}"
            )
    return (a + b) / 2


def _atom_scan_points(measure, lo, hi, rel_tol):
    """Geometric ladders of scan points closing in on each mass point.

    Zeros are attracted to atoms at a geometric rate in the index size,
    so past a modest size the nearest zero falls between consecutive
    points of any fixed grid.  Decade-spaced offsets down to the
    refinement tolerance keep one scan point on each side of the zero
    no matter how close it has crept.
    """
    pts = []
    rad = (hi - lo) / 2
    decades = int(mp.ceil(-mp.log10(rel_tol))) + 2
    for loc, _ in measure.atoms:
        step = rad
        for _ in range(decades):
            step = step / 10
            for x in (loc - step, loc + step):
                if lo < x < hi:
                    pts.append(x)
    return pts


def extract_Q(solution: MopSolution, j: int) -> ZeroSet:
    """Locate the zeros of the form A_j inside the hull of the unified
    measure j by a sign scan on a Chebyshev-distributed grid (16x the
    predicted count, doubled on shortfall up to 4096 points), then refine
    each bracket to the precision-derived relative width.  When the
    measure carries mass points the grid is topped up with ladders from
    _atom_scan_points.

    Raises ZeroCountMismatch when the count cannot be realized: that is a
    genuine structural failure, not something to paper over.

    A negative prediction only happens for j >= 0 when every block from j
    on is empty, so the form vanishes identically; that level carries no
    zeros and comes back as an empty set.
    """
    index = solution.index
    expected = index.zero_count(j)
    if expected <= 0:
        return ZeroSet(j=j, zeros=(), expected=0)
    lo, hi = solution.pair.hull(j)
    bits = solution.precision_bits
    rel_tol = refine_tolerance(bits)

    def f(x):
        return solution.form(j, x)

    with working(bits):
        mid = (lo + hi) / 2
        rad = (hi - lo) / 2
        ladder = _atom_scan_points(solution.pair.measure(j), lo, hi, rel_tol)
        grid_size = min(SCAN_GRID_FACTOR * expected, SCAN_GRID_CAP)
        while True:
            xs = [
                mid + rad * mp.cos(mp.pi * (2 * i - 1) / (2 * grid_size))
                for i in range(grid_size, 0, -1)
            ]
            if ladder:
                xs = sorted(set(xs) | set(ladder))
            vals = [f(x) for x in xs]
            zeros = []
            brackets = []
            for i in range(len(xs) - 1):
                if vals[i] == 0:
                    zeros.append(xs[i])
                elif (vals[i] > 0) != (vals[i + 1] > 0) and vals[i + 1] != 0:
                    brackets.append(i)
            if vals[-1] == 0:
                zeros.append(xs[-1])
            found = len(zeros) + len(brackets)
            if found > expected:
                raise ZeroCountMismatch(
                    f"form {j} of {index}: {found} sign changes on a "
                    f"{len(xs)}-point grid, predicted {expected}"
                )
            if found == expected:
                break
            if grid_size >= SCAN_GRID_CAP:
                raise ZeroCountMismatch(
                    f"form {j} of {index}: only {found} sign changes up to a "
                    f"{len(xs)}-point grid, predicted {expected}"
                )
            grid_size = min(2 * grid_size, SCAN_GRID_CAP)
        for i in brackets:
            zeros.append(
                _refine_bracket(f, xs[i], xs[i + 1], vals[i], vals[i + 1], rel_tol)
            )
        zeros.sort()
    return ZeroSet(j=j, zeros=tuple(zeros), expected=expected)


@functools.lru_cache(maxsize=None)
def extract_cached(solution: MopSolution, j: int) -> ZeroSet:
    return extract_Q(solution, j)


@dataclass(eq=False)
class VaryingData:
    """Normalization constants of the rescaled zero polynomials.

    ``K[j]`` is the inverse square root of the weighted L2 mass of
    Q_j * A_j / Q_{j-1} over the unified measure j (with K at m1+1 equal to
    one); ``kappa[j] = K[j] / K[j+1]``; ``epsilon[j]`` is the sign of the
    varying measure rho_j on its interval.
    """

    solution: MopSolution
    zero_sets: dict
    K: dict
    kappa: dict
    epsilon: dict

    def q_poly(self, j: int):
        """Orthonormal-normalized zero polynomial kappa_j * Q_j at z."""
        kappa = self.kappa[j]
        zs = self.zero_sets[j]
        return lambda z: kappa * zs.poly_eval(z)

    def rho_weights(self, j: int) -> tuple:
        """Point masses of the varying measure rho_j on the unified support
        j: weight * K_{j+1}^2 * H_j / (Q_{j-1} Q_{j+1}) pointwise.  With
        H_j = Q_{j+1} A_j / Q_j the Q_{j+1} factor cancels, leaving
        weight * K_{j+1}^2 * A_j / (Q_j Q_{j-1})."""
        sol = self.solution
        meas = sol.pair.measure(j)
        q_here = self.zero_sets[j]
        q_lo = self.zero_sets.get(j - 1)
        k_next = self.K.get(j + 1, mp.mpf(1))
        vals = sol.form_on_support(j)
        out = []
        with working(sol.precision_bits):
            for w, x, av in zip(meas.signed_weights, meas.support_points, vals):
                lo = q_lo.poly_eval(x) if q_lo else mp.mpf(1)
                out.append(w * k_next**2 * av / (q_here.poly_eval(x) * lo))
        return tuple(out)


def compute_varying_data(solution: MopSolution, zero_sets: dict) -> VaryingData:
    """Constants K, kappa, epsilon from the extracted zero sets (one
    ZeroSet per j in [-m2, m1])."""
    index = solution.index
    pair = solution.pair
    bits = solution.precision_bits
    K = {index.m1 + 1: mp.mpf(1)}
    epsilon = {}
    with working(bits):
        for j in range(index.m1, -index.m2 - 1, -1):
            meas = pair.measure(j)
            vals = solution.form_on_support(j)
            q_here = zero_sets[j]
            q_lo = zero_sets.get(j - 1)
            mass = mp.mpf(0)
            for w, x, av in zip(meas.signed_weights, meas.support_points, vals):
                lo = q_lo.poly_eval(x) if q_lo else mp.mpf(1)
                mass += abs(w) * abs(q_here.poly_eval(x) * av / lo)
            if mass == 0:
                raise ZeroCountMismatch(f"degenerate varying mass at level {j}")
            K[j] = 1 / mp.sqrt(mass)
        for j in range(index.m1, -index.m2 - 1, -1):
            # sign of rho_j = sign(measure) * sign(A_j / Q_j) * sign(Q_{j-1}),
            # constant on the interval; read it at the support point farthest
            # from the zeros of Q_j.
            meas = pair.measure(j)
            q_here = zero_sets[j]
            q_lo = zero_sets.get(j - 1)
            pts = meas.support_points
            ref_pos = max(
                range(len(pts)),
                key=lambda i: min(
                    (abs(pts[i] - r) for r in q_here.zeros), default=mp.mpf(1)
                ),
            )
            ref = pts[ref_pos]
            av = solution.form_on_support(j)[ref_pos]
            ratio = av / q_here.poly_eval(ref)
            lo_val = q_lo.poly_eval(ref) if q_lo else mp.mpf(1)
            sgn = meas.sign * (1 if ratio > 0 else -1) * (1 if lo_val > 0 else -1)
            epsilon[j] = sgn
        kappa = {
            j: K[j] / K[j + 1] for j in range(index.m1, -index.m2 - 1, -1)
        }
    return VaryingData(
        solution=solution, zero_sets=zero_sets, K=K, kappa=kappa, epsilon=epsilon
    )
