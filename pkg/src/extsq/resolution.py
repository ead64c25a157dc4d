"""Deterministic minimal free resolutions over the mod-2 Steenrod algebra.

The sweep runs internal degree t ascending, homological degree s ascending
within t.  In each bidegree the matrix of d_s is fed row by row to a
transform-tracked elimination; rows follow the canonical free-basis scan
(generator index ascending, acting monomial descending in the fixed
per-degree order).  Kernel vectors emerge in scan order, and each one that
is independent of the image of the already-chosen generators becomes the
differential of a new generator, unreduced.  This reproduces the published
resolution of F2 including its tie-breaking.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

from . import milnor
from .milnor import Monomial
from .linalg import Elimination, lowest_bit
from .modules import CompiledModule, sigma_f2

CHECKPOINT_MAGIC = b"EXTSQRES"
CHECKPOINT_VERSION = 1


class ResolutionError(ValueError):
    pass


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class CochainClass:
    """A sum of dual generators in one bidegree, e.g. 7_13+7_14."""

    s: int
    t: int
    gens: frozenset[int]

    def __str__(self) -> str:
        if not self.gens:
            return "0"
        return "+".join(f"{self.s}_{g}" for g in sorted(self.gens))

    @staticmethod
    def parse(text: str, resolution: "FreeResolution") -> "CochainClass":
        text = text.strip()
        if text == "0":
            raise ValueError("cannot parse the zero class without a bidegree")
        gens = []
        s_vals = set()
        for part in text.split("+"):
            s_str, g_str = part.strip().split("_")
            s_vals.add(int(s_str))
            gens.append(int(g_str))
        if len(s_vals) != 1:
            raise ValueError(f"mixed homological degrees in {text!r}")
        s = s_vals.pop()
        t_vals = {resolution.gen_degree(s, g) for g in gens}
        if len(t_vals) != 1:
            raise ValueError(f"mixed internal degrees in {text!r}")
        return CochainClass(s, t_vals.pop(), frozenset(gens))


class FreeResolution:
    """Generators and differentials of a minimal resolution through a frontier."""

    def __init__(self, module: CompiledModule | None, s_max: int, t_max: int):
        self.module = module
        self.s_max = s_max
        self.t_max = t_max
        self.gen_degrees: list[list[int]] = [[] for _ in range(s_max + 1)]
        # s >= 1: dict target-generator -> set of coefficient monomials
        self.diffs: list[list[dict[int, frozenset[Monomial]]]] = [
            [] for _ in range(s_max + 1)
        ]
        # s == 0: image of each generator in the module
        self.aug: list[tuple[int, int]] = []

    # -- structure access ---------------------------------------------

    def gen_count(self, s: int) -> int:
        return len(self.gen_degrees[s])

    def gen_degree(self, s: int, g: int) -> int:
        return self.gen_degrees[s][g]

    def gens_in_bidegree(self, s: int, t: int) -> list[int]:
        return [g for g, d in enumerate(self.gen_degrees[s]) if d == t]

    def ext_dimensions(self) -> dict[tuple[int, int], int]:
        """Generator counts per bidegree; equals dim Ext^{s,t} by minimality."""
        table: dict[tuple[int, int], int] = {}
        for s in range(self.s_max + 1):
            for t in self.gen_degrees[s]:
                table[(s, t)] = table.get((s, t), 0) + 1
        return table

    def free_basis(self, s: int, t: int) -> list[tuple[int, Monomial]]:
        out = []
        for g, d in enumerate(self.gen_degrees[s]):
            if d <= t:
                out.extend((g, m) for m in milnor.basis(t - d))
        return out

    def differential_vector(self, s: int, g: int, t: int, index: dict) -> int:
        """d(a * s_g) in degree-t coordinates for a the unit; callers scale."""
        row = 0
        for h, coefs in self.diffs[s][g].items():
            hd = self.gen_degrees[s - 1][h]
            for m in coefs:
                row ^= 1 << index[(h, m)]
        return row

    # -- printing -------------------------------------------------------

    def coefficient_str(self, terms: frozenset[Monomial]) -> str:
        ordered = sorted(terms, key=milnor.sort_key)
        body = "+".join(milnor.mono_str(m) for m in ordered)
        return f"({body})" if len(ordered) > 1 else body

    def differential_str(self, s: int, g: int) -> str:
        if s == 0:
            deg, vec = self.aug[g]
            target = self.module.vector_str(deg, vec) if self.module else str(vec)
            return f"d(0_{g}) = {target}"
        parts = [
            f"{self.coefficient_str(coefs)} {s - 1}_{h}"
            for h, coefs in sorted(self.diffs[s][g].items())
        ]
        rhs = " + ".join(parts) if parts else "0"
        return f"d({s}_{g}) = {rhs}"

    def dump(self, s_range=None) -> str:
        """Canonical plain-text listing of all differentials, for diffing."""
        lines = []
        for s in range(1, self.s_max + 1):
            if s_range and s not in s_range:
                continue
            for g in range(self.gen_count(s)):
                lines.append(self.differential_str(s, g))
        return "\n".join(lines) + "\n"

    def content_hash(self) -> str:
        payload = self.dump().encode() + repr(self.gen_degrees).encode()
        return hashlib.sha256(payload).hexdigest()

    # -- verification -----------------------------------------------------

    def verify_dd_zero(self) -> bool:
        for s in range(2, self.s_max + 1):
            for g in range(self.gen_count(s)):
                acc: dict[int, set[Monomial]] = {}
                for h, coefs in self.diffs[s][g].items():
                    for hh, coefs2 in self.diffs[s - 1][h].items():
                        tgt = acc.setdefault(hh, set())
                        for a in coefs:
                            for b in coefs2:
                                tgt ^= milnor.multiply_mono(a, b)
                if any(v for v in acc.values()):
                    return False
        if self.module is not None:
            for g in range(self.gen_count(1)):
                deg = self.gen_degrees[1][g]
                acc_vec = 0
                for h, coefs in self.diffs[1][g].items():
                    hdeg, hvec = self.aug[h]
                    for a in coefs:
                        acc_vec ^= self.module.act_vec(a, hdeg, hvec)
                if acc_vec:
                    return False
        return True

    def verify_minimal(self) -> bool:
        for s in range(1, self.s_max + 1):
            for g in range(self.gen_count(s)):
                for _, coefs in self.diffs[s][g].items():
                    if milnor.SQ0 in coefs:
                        return False
        return True


def resolve(module: CompiledModule, s_max: int, t_max: int) -> FreeResolution:
    """Minimal free resolution of a compiled module through (s_max, t_max)."""
    if s_max < 0 or t_max < 0:
        raise ResolutionError("frontier must be non-negative")
    if module.cap < t_max:
        raise ResolutionError(
            f"module {module.name} compiled through {module.cap} < t_max {t_max}"
        )
    res = FreeResolution(module, s_max, t_max)

    for t in range(t_max + 1):
        # Stage 0: cover the module minimally and set up ker(d_0).
        elim = Elimination(track_transform=True)
        kernel_vectors: list[int] = []
        index0 = {lab: i for i, lab in enumerate(res.free_basis(0, t))}
        for g, d in enumerate(res.gen_degrees[0]):
            if d > t:
                continue
            gdeg, gvec = res.aug[g]
            for a in milnor.basis(t - d):
                row = module.act_vec(a, gdeg, gvec)
                residual, tr = elim.add(row)
                if residual == 0:
                    kernel_vectors.append(tr)
        for i in range(module.dim(t)):
            cand = 1 << i
            if not elim.contains(cand):
                res.gen_degrees[0].append(t)
                res.aug.append((t, cand))
                residual, tr = elim.add(cand)
                if residual == 0:
                    kernel_vectors.append(tr)

        # Stages s >= 1: image vs kernel, new generators from the deficit.
        for s in range(1, s_max + 1):
            candidates = kernel_vectors
            domain_index = index0 if s == 1 else {
                lab: i for i, lab in enumerate(res.free_basis(s - 1, t))
            }
            track = s < s_max
            elim = Elimination(track_transform=track)
            kernel_vectors = []
            target_rank = len(candidates)
            done = False
            for g, d in enumerate(res.gen_degrees[s]):
                if done or d > t:
                    break
                diff = res.diffs[s][g]
                for a in milnor.basis(t - d):
                    row = 0
                    for h, coefs in diff.items():
                        for c in coefs:
                            for m in milnor.multiply_mono(a, c):
                                row ^= 1 << domain_index[(h, m)]
                    residual, tr = elim.add(row)
                    if track and residual == 0:
                        kernel_vectors.append(tr)
                    if not track and elim.rank >= target_rank:
                        done = True
                        break
                if done:
                    break
            for vec in candidates:
                if not elim.contains(vec):
                    res.gen_degrees[s].append(t)
                    res.diffs[s].append(_decode(vec, res, s - 1, t))
                    residual, tr = elim.add(vec)
                    if track and residual == 0:
                        kernel_vectors.append(tr)
        index0 = None
    return res


def _decode(vec: int, res: FreeResolution, s: int, t: int) -> dict[int, frozenset[Monomial]]:
    labels = res.free_basis(s, t)
    acc: dict[int, set[Monomial]] = {}
    while vec:
        i = lowest_bit(vec)
        g, m = labels[i]
        acc.setdefault(g, set()).add(m)
        vec &= vec - 1
    return {g: frozenset(ms) for g, ms in sorted(acc.items())}


def resolve_f2(s_max: int, t_max: int) -> FreeResolution:
    """Minimal resolution of F2 itself; C_0 is free on one generator."""
    return resolve(sigma_f2(0, "e", cap=t_max), s_max, t_max)


# -- checkpointing ----------------------------------------------------------


def checkpoint_save(res: FreeResolution, path) -> None:
    """Length-prefixed binary sections with an integrity digest."""
    body = bytearray()
    name = (res.module.name if res.module else "?").encode()
    body += struct.pack("<II", res.s_max, res.t_max)
    body += struct.pack("<I", len(name)) + name
    for s in range(res.s_max + 1):
        degs = res.gen_degrees[s]
        body += struct.pack("<I", len(degs))
        body += struct.pack(f"<{len(degs)}I", *degs) if degs else b""
    body += struct.pack("<I", len(res.aug))
    for deg, vec in res.aug:
        blob = vec.to_bytes((vec.bit_length() + 7) // 8 or 1, "little")
        body += struct.pack("<II", deg, len(blob)) + blob
    for s in range(1, res.s_max + 1):
        for g in range(res.gen_count(s)):
            terms = [
                (h, m)
                for h, coefs in sorted(res.diffs[s][g].items())
                for m in sorted(coefs, key=milnor.sort_key)
            ]
            body += struct.pack("<I", len(terms))
            for h, m in terms:
                body += struct.pack("<II", h, len(m))
                body += struct.pack(f"<{len(m)}I", *m) if m else b""
    digest = hashlib.sha256(bytes(body)).digest()
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", CHECKPOINT_VERSION))
        f.write(struct.pack("<I", len(body)))
        f.write(bytes(body))
        f.write(digest)


def checkpoint_load(path, module: CompiledModule | None = None) -> FreeResolution:
    with open(path, "rb") as f:
        raw = f.read()
    if not raw.startswith(CHECKPOINT_MAGIC):
        raise CheckpointError("not a resolution checkpoint")
    off = len(CHECKPOINT_MAGIC)
    (version,) = struct.unpack_from("<I", raw, off)
    off += 4
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (blen,) = struct.unpack_from("<I", raw, off)
    off += 4
    body = raw[off : off + blen]
    digest = raw[off + blen : off + blen + 32]
    if len(body) != blen or hashlib.sha256(body).digest() != digest:
        raise CheckpointError("checkpoint is truncated or corrupt")

    pos = 0

    def take(fmt):
        nonlocal pos
        vals = struct.unpack_from(fmt, body, pos)
        pos += struct.calcsize(fmt)
        return vals

    s_max, t_max = take("<II")
    (nlen,) = take("<I")
    pos += nlen
    res = FreeResolution(module, s_max, t_max)
    for s in range(s_max + 1):
        (count,) = take("<I")
        degs = list(take(f"<{count}I")) if count else []
        if any(d > t_max for d in degs):
            raise CheckpointError("generator beyond the stated frontier")
        res.gen_degrees[s] = degs
    (naug,) = take("<I")
    for _ in range(naug):
        deg, bl = take("<II")
        vec = int.from_bytes(body[pos : pos + bl], "little")
        pos += bl
        res.aug.append((deg, vec))
    for s in range(1, s_max + 1):
        for g in range(res.gen_count(s)):
            (nterms,) = take("<I")
            diff: dict[int, set[Monomial]] = {}
            for _ in range(nterms):
                h, mlen = take("<II")
                mono = tuple(take(f"<{mlen}I")) if mlen else ()
                if h >= res.gen_count(s - 1):
                    raise CheckpointError("differential target outside frontier")
                diff.setdefault(h, set()).add(mono)
            res.diffs[s].append({h: frozenset(ms) for h, ms in sorted(diff.items())})
    if pos != len(body):
        raise CheckpointError("trailing bytes in checkpoint body")
    return res
