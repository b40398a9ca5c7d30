"""Vector logarithmic-potential equilibrium on a chain of compact sets.

Everything here runs in float64: the equilibrium problem feeds nth-root
asymptotics, whose own convergence is logarithmically slow, so double
precision is far beyond the accuracy the measurements can use.  The
energy is discretized with piecewise-constant densities on uniform
panels and exact closed-form double integrals of the log kernel, which
keeps the diagonal singularity out of the picture entirely.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_PANELS = 256
DEFAULT_TOL = 1e-4
ITERATION_CAP = 50_000

ACTIVE_MASS_FACTOR = 1e-3


class EquilibriumError(RuntimeError):
    """Raised when the minimizer fails to reach the requested residual."""


def cumulative_ratios(p1, p2) -> dict:
    """Tail sums P_j of the two limit-ratio vectors on the unified index.

    P_j sums p1[j:] for j >= 0 and p2[-j:] for j < 0; both full sums
    equal one, so P_0 = 1 from either side.  The out-of-chain entries
    P_{m1+1} and P_{-m2-1} are zero.
    """
    p1 = tuple(float(v) for v in p1)
    p2 = tuple(float(v) for v in p2)
    for p in (p1, p2):
        if not p:
            raise ValueError("ratio vector is empty")
        if any(not 0 < v <= 1 for v in p):
            raise ValueError(f"ratios must lie in (0, 1], got {p}")
        if any(a < b for a, b in zip(p, p[1:])):
            raise ValueError(f"ratios must be non-increasing, got {p}")
        if abs(sum(p) - 1) > 1e-12:
            raise ValueError(f"ratios must sum to one, got {sum(p)}")
    m1 = len(p1) - 1
    m2 = len(p2) - 1
    big_p = {m1 + 1: 0.0, -m2 - 1: 0.0}
    for j in range(m1 + 1):
        big_p[j] = sum(p1[j:])
    for j in range(1, m2 + 1):
        big_p[-j] = sum(p2[j:])
    big_p[0] = 1.0
    return big_p


@dataclass(frozen=True)
class InteractionMatrix:
    """Tri-diagonal coupling matrix of the vector potential problem.

    Row/column r corresponds to chain level j = r - m2.  The diagonal
    holds P_j^2 and the off-diagonal -P_j P_{j+1} / 2; positive
    definiteness (a consequence of the principal-minor identity) is
    asserted by a Cholesky factorization at build time.
    """

    m1: int
    m2: int
    big_p: dict
    entries: np.ndarray = field(repr=False)

    def c(self, j: int, k: int) -> float:
        return float(self.entries[j + self.m2, k + self.m2])

    @property
    def order(self) -> int:
        return self.m1 + self.m2 + 1

    def levels(self):
        return range(-self.m2, self.m1 + 1)


def build_interaction_matrix(p1, p2) -> InteractionMatrix:
    """Assemble the coupling matrix from the limit-ratio vectors."""
    big_p = cumulative_ratios(p1, p2)
    m1 = len(p1) - 1
    m2 = len(p2) - 1
    order = m1 + m2 + 1
    mat = np.zeros((order, order))
    for j in range(-m2, m1 + 1):
        r = j + m2
        mat[r, r] = big_p[j] ** 2
        if j + 1 <= m1:
            mat[r, r + 1] = mat[r + 1, r] = -big_p[j] * big_p[j + 1] / 2
    try:
        np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        raise EquilibriumError("interaction matrix is not positive definite")
    return InteractionMatrix(m1=m1, m2=m2, big_p=big_p, entries=mat)


def _log_double_primitive(u):
    """Phi with Phi'' = log|u|, Phi(0) = Phi'(0) = 0."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    nz = u != 0
    out[nz] = u[nz] ** 2 * (2 * np.log(np.abs(u[nz])) - 3) / 4
    return out


def panel_pair_energy(a1, a2, b1, b2) -> float:
    """Exact value of the double integral of -log|x-y| for x in [a1,a2],
    y in [b1,b2] (not yet divided by the panel widths)."""
    corners = np.array([a2 - b1, a1 - b2, a2 - b2, a1 - b1])
    phi = _log_double_primitive(corners)
    return -(phi[0] + phi[1] - phi[2] - phi[3])


def panel_log_integral(z, c, d):
    """Exact integral of log|z-x| for x in [c,d]; z real or complex.

    The primitive (x-z) log(z-x) - x extends continuously through
    x = z, so the endpoint evaluation is valid even when z lies inside
    the panel.
    """
    z = complex(z)

    def prim(x):
        u = x - z
        if u == 0:
            return -x
        return (u * np.log(z - x) - x).real

    return prim(d) - prim(c)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1
    ind = np.arange(1, len(v) + 1)
    cond = u - css / ind > 0
    rho = ind[cond][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


@dataclass(frozen=True)
class ComponentGrid:
    """Uniform panel grid over one compact set of the chain.  Atoms off
    the interval become zero-width cells whose self-energy uses the
    panel width as a collapse scale."""

    interval: tuple
    edges: np.ndarray = field(repr=False)
    atoms: tuple = ()

    @property
    def mids(self) -> np.ndarray:
        mids = (self.edges[:-1] + self.edges[1:]) / 2
        if self.atoms:
            return np.concatenate([mids, np.array(self.atoms)])
        return mids

    @property
    def widths(self) -> np.ndarray:
        w = np.diff(self.edges)
        if self.atoms:
            return np.concatenate([w, np.zeros(len(self.atoms))])
        return w

    @property
    def cells(self) -> int:
        return len(self.edges) - 1 + len(self.atoms)


def _make_grid(interval, panels: int, atoms=()) -> ComponentGrid:
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise ValueError(f"degenerate interval {interval}")
    off = tuple(float(t) for t in atoms if not a <= float(t) <= b)
    return ComponentGrid(
        interval=(a, b), edges=np.linspace(a, b, panels + 1), atoms=off
    )


def _kernel_block(ga: ComponentGrid, gb: ComponentGrid) -> np.ndarray:
    """Panel-averaged -log|x-y| energies between two grids."""
    out = np.empty((ga.cells, gb.cells))
    ea, eb = ga.edges, gb.edges
    na, nb = len(ea) - 1, len(eb) - 1
    ha = np.diff(ea)
    hb = np.diff(eb)
    # panel-panel via the closed-form double primitive, vectorized
    c1 = np.subtract.outer(ea[1:], eb[:-1])
    c2 = np.subtract.outer(ea[:-1], eb[1:])
    c3 = np.subtract.outer(ea[1:], eb[1:])
    c4 = np.subtract.outer(ea[:-1], eb[:-1])
    raw = -(
        _log_double_primitive(c1)
        + _log_double_primitive(c2)
        - _log_double_primitive(c3)
        - _log_double_primitive(c4)
    )
    out[:na, :nb] = raw / np.outer(ha, hb)
    # atom-panel: average of -log|t - x| over the panel
    for ia, t in enumerate(ga.atoms):
        for ib in range(nb):
            out[na + ia, ib] = -panel_log_integral(t, eb[ib], eb[ib + 1]) / hb[ib]
    for ib, t in enumerate(gb.atoms):
        for ia in range(na):
            out[ia, nb + ib] = -panel_log_integral(t, ea[ia], ea[ia + 1]) / ha[ia]
    # atom-atom: point kernel, with the collapse scale on the diagonal
    for ia, ta in enumerate(ga.atoms):
        for ib, tb in enumerate(gb.atoms):
            if ta == tb:
                scale = (ha.mean() + hb.mean()) / 2
                out[na + ia, nb + ib] = -math.log(scale / 4)
            else:
                out[na + ia, nb + ib] = -math.log(abs(ta - tb))
    return out


@dataclass
class EquilibriumSolution:
    """Minimizer of the discretized vector energy.

    ``masses[j]`` is the probability vector over the cells of grid j;
    ``omega[j]`` the variational constant (minimum of the combined
    potential over the grid); ``cascade`` the same constants rewritten
    in the normalized telescoping form used by the limit functions.
    """

    matrix: InteractionMatrix
    grids: dict
    masses: dict
    omega: dict
    energy: float
    residual: float
    iterations: int

    @property
    def cascade(self) -> dict:
        """Back-substituted constants: omega[j]/P_j^2 plus the scaled
        next constant, downward from the top level."""
        big_p = self.matrix.big_p
        out = {}
        acc = 0.0
        for j in range(self.matrix.m1, -self.matrix.m2 - 1, -1):
            acc = self.omega[j] / big_p[j] ** 2 + (
                big_p[j + 1] / big_p[j]
            ) * acc
            out[j] = acc
        return out

    def constant_sum(self, j: int) -> float:
        """Sum of omega[k]/P_k over levels above j; equals
        P_{j+1} * cascade[j+1] by the telescoping identity."""
        big_p = self.matrix.big_p
        return sum(
            self.omega[k] / big_p[k] for k in range(j + 1, self.matrix.m1 + 1)
        )

    def potential(self, j: int, z) -> float:
        """Logarithmic potential of component j at z (real or complex),
        using the exact panel integrals."""
        grid = self.grids[j]
        w = self.masses[j]
        edges = grid.edges
        total = 0.0
        for i in range(len(edges) - 1):
            if w[i] == 0:
                continue
            h = edges[i + 1] - edges[i]
            total -= w[i] * panel_log_integral(z, edges[i], edges[i + 1]) / h
        for ia, t in enumerate(grid.atoms):
            m = w[len(edges) - 1 + ia]
            if m:
                total -= m * math.log(abs(complex(z) - t))
        return total

    def combined_potential(self, j: int, z) -> float:
        """Row j of the coupled potentials: sum_k c_{j,k} V_k(z)."""
        return sum(
            self.matrix.c(j, k) * self.potential(k, z)
            for k in self.matrix.levels()
        )

    def eval_U(self, j: int, z) -> float:
        """Exponent of the nth-root limit at level j, defined for
        j in [-m2-1, m1]; out-of-chain potentials drop out through
        P = 0."""
        m1, m2 = self.matrix.m1, self.matrix.m2
        if not -m2 - 1 <= j <= m1:
            raise ValueError(f"level {j} outside [-{m2 + 1}, {m1}]")
        big_p = self.matrix.big_p
        val = 2 * self.constant_sum(j)
        if big_p.get(j, 0.0):
            val += big_p[j] * self.potential(j, z)
        if big_p.get(j + 1, 0.0):
            val -= big_p[j + 1] * self.potential(j + 1, z)
        return val

    def eval_G(self, j: int, z) -> float:
        return math.exp(-self.eval_U(j, z))

    def zeta(self, j: int, z) -> float:
        """Smallest exponent over levels j..m1 (coefficient polynomials
        feel whichever form dominates)."""
        return min(self.eval_U(k, z) for k in range(j, self.matrix.m1 + 1))

    def chi(self, j: int, z) -> float:
        """Smallest exponent over the negative levels -1..-j-1, the
        remainder-function analog of zeta."""
        if not 0 <= j <= self.matrix.m2:
            raise ValueError(f"remainder level {j} outside [0, {self.matrix.m2}]")
        return min(self.eval_U(k, z) for k in range(-j - 1, 0))

    def dominance_level(self, j: int, z, margin: float = 0.0):
        """Index k in [j, m1] whose exponent strictly dominates at z, or
        None when the two smallest exponents sit within ``margin`` (a
        region boundary at the working resolution)."""
        vals = sorted(
            (self.eval_U(k, z), k) for k in range(j, self.matrix.m1 + 1)
        )
        if len(vals) > 1 and vals[1][0] - vals[0][0] <= margin:
            return None
        return vals[0][1]

    def to_dict(self) -> dict:
        return {
            "m1": self.matrix.m1,
            "m2": self.matrix.m2,
            "big_p": {str(j): v for j, v in self.matrix.big_p.items()},
            "grids": {
                str(j): {
                    "interval": list(g.interval),
                    "panels": len(g.edges) - 1,
                    "atoms": list(g.atoms),
                }
                for j, g in self.grids.items()
            },
            "masses": {str(j): self.masses[j].tolist() for j in self.masses},
            "omega": {str(j): self.omega[j] for j in self.omega},
            "energy": self.energy,
            "residual": self.residual,
            "iterations": self.iterations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _assemble(matrix: InteractionMatrix, grids: dict):
    levels = list(matrix.levels())
    sizes = [grids[j].cells for j in levels]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    total = offsets[-1]
    q = np.zeros((total, total))
    for aj, j in enumerate(levels):
        for ak, k in enumerate(levels):
            cjk = matrix.c(j, k)
            if cjk == 0:
                continue
            block = _kernel_block(grids[j], grids[k])
            q[offsets[aj]:offsets[aj + 1], offsets[ak]:offsets[ak + 1]] = (
                cjk * block
            )
    q = (q + q.T) / 2
    return q, offsets, levels


def _split(w: np.ndarray, offsets, levels) -> dict:
    return {
        j: w[offsets[a]:offsets[a + 1]] for a, j in enumerate(levels)
    }


def _variational_state(q, w, offsets, levels):
    """Combined potentials on the grid, constants, and the residual of
    the equilibrium conditions restricted to carrying cells."""
    grad = q @ w
    omega = {}
    residual = 0.0
    for a, j in enumerate(levels):
        seg = slice(offsets[a], offsets[a + 1])
        pot = grad[seg]
        mass = w[seg]
        omega[j] = float(pot.min())
        active = mass > ACTIVE_MASS_FACTOR / len(mass)
        if active.any():
            residual = max(residual, float(pot[active].max() - omega[j]))
    return grad, omega, residual


def _kkt_polish(q, w, offsets, levels, passes: int = 30):
    """Solve the equality-constrained quadratic exactly on the current
    carrying set, dropping cells that come out negative.  The discrete
    optimum has a flat potential on carrying cells, so this removes the
    slow tail of first-order iterations."""
    n = len(w)
    free = w > 0
    for _ in range(passes):
        idx = np.flatnonzero(free)
        nf = len(idx)
        rows = []
        rhs = []
        for a in range(len(levels)):
            seg = np.zeros(n)
            seg[offsets[a]:offsets[a + 1]] = 1.0
            rows.append(seg[idx])
            rhs.append(1.0)
        b = np.array(rows)
        kkt = np.zeros((nf + len(levels), nf + len(levels)))
        kkt[:nf, :nf] = 2 * q[np.ix_(idx, idx)]
        kkt[:nf, nf:] = b.T
        kkt[nf:, :nf] = b
        vec = np.concatenate([np.zeros(nf), rhs])
        try:
            sol = np.linalg.solve(kkt, vec)
        except np.linalg.LinAlgError:
            sol, *_ = np.linalg.lstsq(kkt, vec, rcond=None)
        cand = np.zeros(n)
        cand[idx] = sol[:nf]
        if (cand[idx] >= 0).all():
            return cand
        free = free & (cand >= 0)
        if free.sum() < len(levels):
            break
    return None


def solve_equilibrium(
    matrix: InteractionMatrix,
    sets: dict,
    panels_per_set: int = DEFAULT_PANELS,
    tol: float = DEFAULT_TOL,
    init: str = "uniform",
    seed: int = 0,
    iteration_cap: int = ITERATION_CAP,
) -> EquilibriumSolution:
    """Minimize the coupled log energy over the product of simplices.

    ``sets`` maps each level j in [-m2, m1] to an interval (a, b) or a
    dict {"interval": (a, b), "atoms": (t, ...)}.  Projected gradient
    steps with Armijo backtracking drive the variational residual down;
    once it is within reach, one exact solve on the carrying cells
    finishes the job (the objective is a convex quadratic).  Raises
    EquilibriumError if the residual cannot be brought below ``tol``.
    """
    grids = {}
    for j in matrix.levels():
        spec = sets[j]
        if isinstance(spec, dict):
            grids[j] = _make_grid(
                spec["interval"], panels_per_set, spec.get("atoms", ())
            )
        else:
            grids[j] = _make_grid(spec, panels_per_set)
    q, offsets, levels = _assemble(matrix, grids)
    n = offsets[-1]

    if init == "uniform":
        w = np.concatenate(
            [np.full(grids[j].cells, 1.0 / grids[j].cells) for j in levels]
        )
    elif init == "random":
        rng = np.random.default_rng(seed)
        w = np.concatenate(
            [
                project_simplex(rng.random(grids[j].cells))
                for j in levels
            ]
        )
    else:
        raise ValueError(f"unknown init {init!r}")

    energy = float(w @ q @ w)
    step = 1.0 / max(abs(np.diag(q)).max(), 1.0)
    iterations = 0
    best = None
    while iterations < iteration_cap:
        grad, omega, residual = _variational_state(q, w, offsets, levels)
        if best is None or residual < best[0]:
            best = (residual, w.copy(), omega, energy)
        if residual <= 100 * tol or iterations % 50 == 25:
            polished = _kkt_polish(q, w, offsets, levels)
            if polished is not None:
                _, omega_p, residual_p = _variational_state(
                    q, polished, offsets, levels
                )
                energy_p = float(polished @ q @ polished)
                if residual_p < best[0]:
                    best = (residual_p, polished, omega_p, energy_p)
                if residual_p <= tol:
                    w, omega, residual, energy = (
                        polished,
                        omega_p,
                        residual_p,
                        energy_p,
                    )
                    break
        if residual <= tol:
            break
        moved = False
        trial_step = step
        for _ in range(60):
            cand = np.empty_like(w)
            for a in range(len(levels)):
                seg = slice(offsets[a], offsets[a + 1])
                cand[seg] = project_simplex(w[seg] - trial_step * 2 * grad[seg])
            delta = cand - w
            cand_energy = float(cand @ q @ cand)
            if cand_energy <= energy - 1e-4 * (delta @ delta) / max(
                trial_step, 1e-300
            ):
                w = cand
                energy = cand_energy
                step = trial_step * 1.3
                moved = True
                break
            trial_step /= 2
        iterations += 1
        if not moved:
            break

    residual, w, omega, energy = best
    if residual > tol:
        raise EquilibriumError(
            f"variational residual {residual:.3e} above tolerance {tol:.1e} "
            f"after {iterations} iterations"
        )
    masses = _split(w, offsets, levels)
    return EquilibriumSolution(
        matrix=matrix,
        grids=grids,
        masses={j: masses[j].copy() for j in levels},
        omega=omega,
        energy=energy,
        residual=residual,
        iterations=iterations,
    )


def arcsine_potential(z, a=-1.0, b=1.0) -> float:
    """Closed-form log potential of the arcsine law on [a, b]: the Robin
    constant log(4/(b-a)) minus log of the exterior Joukowski factor."""
    u = (2 * complex(z) - a - b) / (b - a)
    s = np.sqrt(u * u - 1)
    if abs(u + s) < 1:
        s = -s
    phi = u + s
    return math.log(4.0 / (b - a)) - math.log(abs(phi))


def robin_constant(a: float, b: float) -> float:
    """Equilibrium constant of a single interval: -log capacity."""
    return math.log(4.0 / (b - a))
