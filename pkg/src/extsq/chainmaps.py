"""Comparison-theorem machinery over minimal resolutions.

Lifting a resolution of F2 to a chain map into an extension, verifying
published chain maps, pulling cocycles back along module epimorphisms,
and the connecting map of a short exact sequence, computed by the usual
lift-then-restrict procedure.  Every linear solve uses the deterministic
free-variables-zero rule, so outputs are reproducible; the invariant
outputs (top cocycles, boundary values) do not depend on the rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import milnor
from .milnor import Monomial
from .linalg import Solver, lowest_bit
from .modules import CompiledModule, ModuleMap
from .resolution import CochainClass, FreeResolution


class LiftError(ValueError):
    pass


class ResolutionOps:
    """Cached free-basis indexing, differential rows, and solvers."""

    def __init__(self, res: FreeResolution):
        self.res = res
        self._basis: dict[tuple[int, int], list[tuple[int, Monomial]]] = {}
        self._index: dict[tuple[int, int], dict[tuple[int, Monomial], int]] = {}
        self._d_solver: dict[tuple[int, int, bool], _OrderedSolver] = {}
        self._aug_solver: dict[int, Solver] = {}

    def basis(self, s: int, t: int):
        key = (s, t)
        if key not in self._basis:
            self._basis[key] = self.res.free_basis(s, t)
            self._index[key] = {lab: i for i, lab in enumerate(self._basis[key])}
        return self._basis[key]

    def index(self, s: int, t: int):
        self.basis(s, t)
        return self._index[(s, t)]

    def d_row(self, s: int, t: int, g: int, a: Monomial) -> int:
        """Row of d_s at degree t for the basis element a * s_g."""
        idx = self.index(s - 1, t)
        row = 0
        for h, coefs in self.res.diffs[s][g].items():
            for c in coefs:
                for m in milnor.multiply_mono(a, c):
                    row ^= 1 << idx[(h, m)]
        return row

    def d_apply(self, s: int, t: int, vec: int) -> int:
        labels = self.basis(s, t)
        acc = 0
        while vec:
            i = lowest_bit(vec)
            g, a = labels[i]
            acc ^= self.d_row(s, t, g, a)
            vec &= vec - 1
        return acc

    def act_vec(self, s: int, t: int, vec: int, mono: Monomial) -> int:
        """Free-module action of a monomial on a degree-t vector of C_s."""
        if not mono:
            return vec
        labels = self.basis(s, t)
        tgt = self.index(s, t + milnor.degree(mono))
        acc = 0
        while vec:
            i = lowest_bit(vec)
            g, a = labels[i]
            for m in milnor.multiply_mono(mono, a):
                acc ^= 1 << tgt[(g, m)]
            vec &= vec - 1
        return acc

    def apply_values(self, values, s_from: int, g: int, act) -> int:
        """Push d(s_g) through an assignment h -> value, A-linearly.

        `values` maps generator index to a vector, `act(mono, h, value)`
        supplies the module or free action on the target side.
        """
        acc = 0
        for h, coefs in self.res.diffs[s_from][g].items():
            val = values.get(h)
            if not val:
                continue
            for mono in coefs:
                acc ^= act(mono, h, val)
        return acc

    def d_solver(self, s: int, t: int, reverse: bool = False) -> "_OrderedSolver":
        key = (s, t, reverse)
        if key not in self._d_solver:
            rows = [self.d_row(s, t, g, a) for g, a in self.basis(s, t)]
            self._d_solver[key] = _OrderedSolver(rows, reverse)
        return self._d_solver[key]

    def aug_rows(self, t: int) -> list[int]:
        mod = self.res.module
        rows = []
        for g, a in self.basis(0, t):
            gdeg, gvec = self.res.aug[g]
            rows.append(mod.act_vec(a, gdeg, gvec))
        return rows

    def aug_solver(self, t: int) -> Solver:
        if t not in self._aug_solver:
            self._aug_solver[t] = Solver(self.aug_rows(t))
        return self._aug_solver[t]

    def pair(self, y: CochainClass, vec: int) -> int:
        """Evaluate the dual-basis cocycle y on a free vector of C_{y.s}."""
        idx = self.index(y.s, y.t)
        parity = 0
        for g in y.gens:
            if (vec >> idx[(g, milnor.SQ0)]) & 1:
                parity ^= 1
        return parity


class _OrderedSolver:
    """Solver with a configurable (forward or reversed) domain order."""

    def __init__(self, rows: list[int], reverse: bool):
        self.n = len(rows)
        self.reverse = reverse
        self.solver = Solver(list(reversed(rows)) if reverse else rows)

    def solve(self, rhs: int) -> int | None:
        x = self.solver.solve(rhs)
        if x is None or not self.reverse:
            return x
        out = 0
        while x:
            i = lowest_bit(x)
            out |= 1 << (self.n - 1 - i)
            x &= x - 1
        return out


@dataclass
class ChainMapToExtension:
    """Per-level assignments of resolution generators into extension modules."""

    resolution: FreeResolution
    extension: object
    values: list[dict[int, int]]  # level i: generator index -> vector in M_i

    def value(self, i: int, g: int) -> int:
        return self.values[i].get(g, 0)

    def top_cocycle(self) -> CochainClass:
        s, t = self.extension.s, self.extension.t
        gens = frozenset(
            g
            for g in range(self.resolution.gen_count(s))
            if self.resolution.gen_degree(s, g) == t and self.value(s, g)
        )
        return CochainClass(s, t, gens)


def _module_solver_rows(f: ModuleMap, t: int) -> list[int]:
    return list(f.mats.get(t, []))


def lift_to_extension(res: FreeResolution, ext, order: str = "standard") -> ChainMapToExtension:
    """Lift the identity of F2 to a chain map from the resolution into the
    extension.  The top assignment, read as a cochain class, is independent
    of all choices; `order` only flips the deterministic tie-breaking."""
    if order not in ("standard", "reversed"):
        raise ValueError("order must be 'standard' or 'reversed'")
    reverse = order == "reversed"
    s, t = ext.s, ext.t
    if res.s_max < s or res.t_max < t:
        raise LiftError(f"resolution frontier below ({s},{t})")
    values: list[dict[int, int]] = [dict() for _ in range(s + 1)]
    # level 0: cover the augmentation
    m0 = ext.module(0)
    for g in range(res.gen_count(0)):
        deg = res.gen_degree(0, g)
        if deg > t:
            continue
        _, avec = res.aug[g]
        want = 1 if deg == 0 and avec else 0
        rows = [ext.augmentation_vec(deg, 1 << i) for i in range(m0.dim(deg))]
        sol = _OrderedSolver(rows, reverse).solve(want)
        if sol is None:
            raise LiftError(f"cannot cover the augmentation at level 0, degree {deg}")
        values[0][g] = sol
    solver_cache: dict[tuple[int, int], _OrderedSolver] = {}
    for i in range(1, s + 1):
        mi, mlo = ext.module(i), ext.module(i - 1)
        bnd = ext.boundary(i)
        for g in range(res.gen_count(i)):
            deg = res.gen_degree(i, g)
            if deg > t:
                continue
            rhs = 0
            for h, coefs in res.diffs[i][g].items():
                val = values[i - 1].get(h)
                if not val:
                    continue
                hdeg = res.gen_degree(i - 1, h)
                for mono in coefs:
                    rhs ^= mlo.act_vec(mono, hdeg, val)
            key = (i, deg)
            if key not in solver_cache:
                solver_cache[key] = _OrderedSolver(_module_solver_rows(bnd, deg), reverse)
            sol = solver_cache[key].solve(rhs)
            if sol is None:
                raise LiftError(f"lift infeasible at bidegree ({i},{deg}); extension not exact there")
            if sol:
                values[i][g] = sol
    return ChainMapToExtension(res, ext, values)


@dataclass
class ChainMapReport:
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __str__(self) -> str:
        return "chain map verified" if self.ok else "; ".join(self.failures)


def verify_chain_map(cm: ChainMapToExtension) -> ChainMapReport:
    """Check every commuting square of a (possibly user-supplied) assignment."""
    res, ext = cm.resolution, cm.extension
    s, t = ext.s, ext.t
    report = ChainMapReport()
    for g in range(res.gen_count(0)):
        deg = res.gen_degree(0, g)
        if deg > t:
            continue
        _, avec = res.aug[g]
        want = 1 if deg == 0 and avec else 0
        got = ext.augmentation_vec(deg, cm.value(0, g))
        if got != want:
            report.failures.append(f"augmentation square fails at 0_{g}")
    for i in range(1, s + 1):
        mlo = ext.module(i - 1)
        bnd = ext.boundary(i)
        for g in range(res.gen_count(i)):
            deg = res.gen_degree(i, g)
            if deg > t:
                continue
            lhs = bnd.apply(deg, cm.value(i, g))
            rhs = 0
            for h, coefs in res.diffs[i][g].items():
                val = cm.value(i - 1, h)
                if not val:
                    continue
                hdeg = res.gen_degree(i - 1, h)
                for mono in coefs:
                    rhs ^= mlo.act_vec(mono, hdeg, val)
            if lhs != rhs:
                report.failures.append(f"square fails at ({i},{deg}) generator {i}_{g}")
    return report


def chain_map_from_assignments(res, ext, assignments: dict[str, str]) -> ChainMapToExtension:
    """Build a ChainMapToExtension from entries like '2_4' -> 'Sq4 k2'."""
    from .modules import parse_module_element

    values: list[dict[int, int]] = [dict() for _ in range(ext.s + 1)]
    for lhs, rhs in assignments.items():
        s_str, g_str = lhs.split("_")
        i, g = int(s_str), int(g_str)
        deg, vec = parse_module_element(ext.module(i), rhs)
        if vec and deg != res.gen_degree(i, g):
            raise LiftError(f"{lhs} -> {rhs} does not preserve internal degree")
        if vec:
            values[i][g] = vec
    return ChainMapToExtension(res, ext, values)


def pullback_on_ext(
    p: ModuleMap, y: CochainClass, res_src: FreeResolution, res_tgt: FreeResolution
) -> CochainClass:
    """Induced map on Ext of a module epimorphism p: source ->> target.

    y lives over the resolution of the target; the result lives over the
    resolution of the source, in the same bidegree.
    """
    ops_src, ops_tgt = ResolutionOps(res_src), ResolutionOps(res_tgt)
    t_cap = y.t
    # phi_0: cover p through the augmentations
    phi: list[dict[int, int]] = [dict() for _ in range(y.s + 1)]
    for g in range(res_src.gen_count(0)):
        deg = res_src.gen_degree(0, g)
        if deg > t_cap:
            continue
        gdeg, gvec = res_src.aug[g]
        target_val = p.apply(gdeg, gvec)
        sol = ops_tgt.aug_solver(deg).solve(target_val)
        if sol is None:
            raise LiftError(f"p does not lift over degree {deg}; is it an epimorphism?")
        if sol:
            phi[0][g] = sol
    for k in range(1, y.s + 1):
        for g in range(res_src.gen_count(k)):
            deg = res_src.gen_degree(k, g)
            if deg > t_cap:
                continue
            rhs = ops_src.apply_values(
                phi[k - 1],
                k,
                g,
                lambda mono, h, val: ops_tgt.act_vec(
                    k - 1, res_src.gen_degree(k - 1, h), val, mono
                ),
            )
            sol = ops_tgt.d_solver(k, deg).solve(rhs)
            if sol is None:
                raise LiftError(f"chain lift of p fails at ({k},{deg})")
            if sol:
                phi[k][g] = sol
    gens = frozenset(
        g
        for g in range(res_src.gen_count(y.s))
        if res_src.gen_degree(y.s, g) == y.t and ops_tgt.pair(y, phi[y.s].get(g, 0))
    )
    return CochainClass(y.s, y.t, gens)


def les_boundary(
    incl: ModuleMap,
    proj: ModuleMap,
    y: CochainClass,
    res_sub: FreeResolution,
    res_quot: FreeResolution,
) -> CochainClass:
    """Connecting map Ext^{k,t}(sub) -> Ext^{k+1,t}(quotient) for the short
    exact sequence sub >-> middle ->> quotient.

    y is a cochain class over the resolution of the submodule; the boundary
    is computed by lifting the quotient's resolution through the middle and
    comparing with the submodule's resolution.
    """
    middle = incl.target
    if proj.source is not middle:
        raise LiftError("incl and proj do not share the middle module")
    ops_s, ops_q = ResolutionOps(res_sub), ResolutionOps(res_quot)
    t_cap = y.t
    # u0: R^Q_0 -> middle, covering the augmentation of the quotient
    proj_solvers: dict[int, Solver] = {}
    u0: dict[int, int] = {}
    for g in range(res_quot.gen_count(0)):
        deg = res_quot.gen_degree(0, g)
        if deg > t_cap:
            continue
        gdeg, gvec = res_quot.aug[g]
        if deg not in proj_solvers:
            proj_solvers[deg] = Solver(list(proj.mats.get(deg, [])))
        sol = proj_solvers[deg].solve(gvec)
        if sol is None:
            raise LiftError(f"projection is not onto in degree {deg}")
        u0[g] = sol
    # v1: R^Q_1 -> R^S_0 through the submodule
    v: list[dict[int, int]] = [dict() for _ in range(y.s + 2)]
    incl_solvers: dict[int, Solver] = {}
    for g in range(res_quot.gen_count(1)):
        deg = res_quot.gen_degree(1, g)
        if deg > t_cap:
            continue
        mid_val = ops_q.apply_values(
            u0,
            1,
            g,
            lambda mono, h, val: middle.act_vec(mono, res_quot.gen_degree(0, h), val),
        )
        if deg not in incl_solvers:
            incl_solvers[deg] = Solver(list(incl.mats.get(deg, [])))
        sub_val = incl_solvers[deg].solve(mid_val)
        if sub_val is None:
            raise LiftError(f"boundary value escapes the submodule in degree {deg}")
        sol = ops_s.aug_solver(deg).solve(sub_val)
        if sol is None:
            raise LiftError(f"cannot lift into the submodule resolution in degree {deg}")
        if sol:
            v[1][g] = sol
    # v_k: R^Q_k -> R^S_{k-1}
    for k in range(2, y.s + 2):
        for g in range(res_quot.gen_count(k)):
            deg = res_quot.gen_degree(k, g)
            if deg > t_cap:
                continue
            rhs = ops_q.apply_values(
                v[k - 1],
                k,
                g,
                lambda mono, h, val: ops_s.act_vec(
                    k - 2, res_quot.gen_degree(k - 1, h), val, mono
                ),
            )
            sol = ops_s.d_solver(k - 1, deg).solve(rhs)
            if sol is None:
                raise LiftError(f"comparison lift fails at ({k},{deg})")
            if sol:
                v[k][g] = sol
    gens = frozenset(
        g
        for g in range(res_quot.gen_count(y.s + 1))
        if res_quot.gen_degree(y.s + 1, g) == y.t
        and ops_s.pair(y, v[y.s + 1].get(g, 0))
    )
    return CochainClass(y.s + 1, y.t, gens)
