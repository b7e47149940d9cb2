"""Ulam-Harris labelled marked trees and spines.

Labels are tuples of positive ints; the root is ``()``.  A :class:`MarkedTree`
keeps its nodes in flat arrays in breadth-first order (so at each depth the
labels are in lexicographic order).  Node times are stored on an absolute
clock; ``origin`` is the absolute birth time of the root, and every public
query takes times relative to it.  Simulated trees have ``origin == 0``.

A particle is alive on ``[birth, death)``: at its death time it has already
been replaced by its children.  Particles still alive at the horizon have
``death == inf`` and ``n_extra == -1`` (A not observed).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import kernels
from .model import ModelSpec, PathRecord

Label = tuple

ROOT: Label = ()


class DomainError(ValueError):
    """Query time outside the range where the answer is defined."""


class LabelNotFound(KeyError):
    pass


def parse_label(text: str) -> Label:
    text = text.strip()
    if text in ("", "-", "∅"):
        return ROOT
    return tuple(int(p) for p in text.split("."))


def format_label(label: Label) -> str:
    return "-" if not label else ".".join(str(j) for j in label)


def is_ancestor(v: Label, u: Label) -> bool:
    """v < u: v is a strict ancestor of u."""
    return len(v) < len(u) and u[: len(v)] == v


@dataclass(frozen=True, eq=False)
class MarkedTree:
    parent: np.ndarray
    child_j: np.ndarray
    depth: np.ndarray
    birth: np.ndarray
    death: np.ndarray
    n_extra: np.ndarray
    first_child: np.ndarray
    path_start: np.ndarray
    path_end: np.ndarray
    pt: np.ndarray
    px: np.ndarray
    py: np.ndarray
    t_max: float
    pcr: Optional[np.ndarray] = None
    pcmr: Optional[np.ndarray] = None
    origin: float = 0.0
    keys: Optional[np.ndarray] = None

    # ------------------------------------------------------------ basics
    @property
    def n_nodes(self) -> int:
        return self.parent.size

    @property
    def horizon(self) -> float:
        """Local-time horizon."""
        return self.t_max - self.origin

    @property
    def sigma(self) -> np.ndarray:
        return self.death - self.birth

    @property
    def has_integrals(self) -> bool:
        return self.pcr is not None

    def abs_time(self, t: float) -> float:
        return t + self.origin if self.origin else float(t)

    def label(self, i: int) -> Label:
        out = []
        while i > 0:
            out.append(int(self.child_j[i]))
            i = int(self.parent[i])
        return tuple(reversed(out))

    def labels(self) -> list:
        labs = [ROOT] * self.n_nodes
        for i in range(1, self.n_nodes):
            labs[i] = labs[self.parent[i]] + (int(self.child_j[i]),)
        return labs

    def index(self, label: Label) -> int:
        i = 0
        for j in label:
            fc = self.first_child[i]
            if fc < 0 or j < 1 or j > self.n_extra[i] + 1:
                raise LabelNotFound(label)
            i = int(fc + j - 1)
        return i

    def __contains__(self, label) -> bool:
        try:
            self.index(tuple(label))
        except LabelNotFound:
            return False
        return True

    def children(self, i: int) -> range:
        fc = self.first_child[i]
        if fc < 0:
            return range(0)
        return range(int(fc), int(fc + self.n_extra[i] + 1))

    def node_path(self, i: int) -> PathRecord:
        s, e = self.path_start[i], self.path_end[i]
        return PathRecord(self.pt[s:e] - self.origin if self.origin else self.pt[s:e],
                          self.px[s:e], self.py[s:e])

    def descendants(self, i: int) -> np.ndarray:
        """Indices of i and all its descendants, breadth first."""
        out = [i]
        k = 0
        while k < len(out):
            out.extend(self.children(out[k]))
            k += 1
        return np.asarray(out, dtype=np.int64)

    def _check_time(self, t: float) -> float:
        if not (0.0 <= t <= self.horizon):
            raise DomainError(f"t={t} outside [0, {self.horizon}]")
        return self.abs_time(t)

    # ------------------------------------------------------------ records
    def to_records(self) -> dict:
        """label -> (birth, death, n_extra, path), all on the absolute clock."""
        labs = self.labels()
        out = {}
        for i in range(self.n_nodes):
            s, e = self.path_start[i], self.path_end[i]
            out[labs[i]] = (float(self.birth[i]), float(self.death[i]), int(self.n_extra[i]),
                            PathRecord(self.pt[s:e].copy(), self.px[s:e].copy(), self.py[s:e].copy()))
        return out

    @classmethod
    def from_records(cls, records: dict, t_max: float, origin: float = 0.0) -> "MarkedTree":
        """Rebuild a tree from ``label -> (birth, death, n_extra, path)``.

        Times are absolute.  Records need not be consistent; problems surface
        in :func:`validate_tree`.
        """
        labs = sorted(records, key=lambda l: (len(l), l))
        pos = {lab: i for i, lab in enumerate(labs)}
        n = len(labs)
        parent = np.full(n, -1, np.int64)
        child_j = np.zeros(n, np.int64)
        depth = np.zeros(n, np.int64)
        birth = np.empty(n)
        death = np.empty(n)
        n_extra = np.empty(n, np.int64)
        first_child = np.full(n, -1, np.int64)
        starts, ends = np.empty(n, np.int64), np.empty(n, np.int64)
        pts, pxs, pys = [], [], []
        k = 0
        for i, lab in enumerate(labs):
            b, d, a, path = records[lab]
            if lab:
                p = pos.get(lab[:-1], -1)
                parent[i] = p
                child_j[i] = lab[-1]
                if p >= 0 and first_child[p] < 0:
                    first_child[p] = i
            depth[i] = len(lab)
            birth[i], death[i], n_extra[i] = b, d, a
            starts[i] = k
            k += path.times.size
            ends[i] = k
            pts.append(np.asarray(path.times, float))
            pxs.append(np.asarray(path.xs, float))
            pys.append(np.asarray(path.ys, np.int64))
        cat = lambda parts, dt: np.concatenate(parts).astype(dt) if parts else np.empty(0, dt)
        return cls(parent, child_j, depth, birth, death, n_extra, first_child, starts, ends,
                   cat(pts, float), cat(pxs, float), cat(pys, np.int64), float(t_max), origin=origin)

    def with_integrals(self, model: ModelSpec) -> "MarkedTree":
        pcr, pcmr = path_integrals(self, model)
        return dataclasses.replace(self, pcr=pcr, pcmr=pcmr)


@dataclass(frozen=True, eq=False)
class Spine:
    """Root-down node indices of a line of descent, ending at a horizon leaf."""

    nodes: np.ndarray

    def labels(self, tree: MarkedTree) -> list:
        return [tree.label(int(i)) for i in self.nodes]

    @classmethod
    def from_label(cls, tree: MarkedTree, leaf: Label) -> "Spine":
        idx = [0]
        for d in range(1, len(leaf) + 1):
            idx.append(tree.index(leaf[:d]))
        return cls(np.asarray(idx, dtype=np.int64))

    def __len__(self):
        return self.nodes.size


# ---------------------------------------------------------------- queries

def alive_indices(tree: MarkedTree, t: float) -> np.ndarray:
    return kernels.alive_nodes(tree.birth, tree.death, tree._check_time(t))


def alive_at(tree: MarkedTree, t: float) -> set:
    """Labels u with S_u - sigma_u <= t < S_u (horizon leaves count as alive at t_max)."""
    return {tree.label(int(i)) for i in alive_indices(tree, t)}


def path_at(tree: MarkedTree, u: Label, t: float) -> tuple:
    """(x, y) of particle u at time t < S_u, following its ancestors before its birth."""
    i = tree.index(tuple(u))
    T = tree._check_time(t)
    if T >= tree.death[i]:
        raise DomainError(f"particle {format_label(tuple(u))} is dead at t={t}")
    while tree.birth[i] > T:
        i = int(tree.parent[i])
    xs, ys, _, _ = kernels.states_at(tree.path_start, tree.path_end, tree.pt, tree.px, tree.py,
                                     tree.pt, tree.pt, np.array([i], np.int64), T)
    return float(xs[0]), int(ys[0])


def extended_path(tree: MarkedTree, i: int, t: float) -> PathRecord:
    """Ancestral path of node i over [0, t] (local time), ending exactly at t."""
    T = tree._check_time(t)
    if T >= tree.death[i]:
        raise DomainError(f"node {format_label(tree.label(i))} is dead at t={t}")
    chain = []
    j = i
    while j >= 0:
        chain.append(j)
        j = int(tree.parent[j])
    times, xs, ys = [], [], []
    for j in reversed(chain):
        if tree.birth[j] > T:
            break
        s, e = tree.path_start[j], tree.path_end[j]
        seg_t, seg_x, seg_y = tree.pt[s:e], tree.px[s:e], tree.py[s:e]
        keep = seg_t < T
        if times:
            keep[0] = False
        times.append(seg_t[keep])
        xs.append(seg_x[keep])
        ys.append(seg_y[keep])
        if tree.death[j] > T:
            x, y, _, _ = kernels.states_at(tree.path_start, tree.path_end, tree.pt, tree.px, tree.py,
                                           tree.pt, tree.pt, np.array([j], np.int64), T)
            times.append(np.array([T]))
            xs.append(x)
            ys.append(y)
            break
    times = np.concatenate(times)
    return PathRecord(times - tree.origin if tree.origin else times, np.concatenate(xs),
                      np.concatenate(ys))


def spine_node_index(tree: MarkedTree, spine: Spine, t: float) -> int:
    T = tree._check_time(t)
    for i in spine.nodes:
        if tree.birth[i] <= T < tree.death[i]:
            return int(i)
    raise DomainError(f"no spine node alive at t={t}")


def spine_node_at(tree: MarkedTree, spine: Spine, t: float) -> Label:
    return tree.label(spine_node_index(tree, spine, t))


def spine_generation(tree: MarkedTree, spine: Spine, t: float) -> int:
    """n_t: number of spine fissions in [0, t]."""
    return int(tree.depth[spine_node_index(tree, spine, t)])


# ---------------------------------------------------------------- subtrees

def extract_subtree(tree: MarkedTree, u: Label):
    """Subtree rooted at u, relabelled so u becomes the root at local time 0.

    Returns ``(subtree, (birth_time, (x, y)))`` where the offset is u's birth
    space-time point in the parent tree's local time.  Node times are kept on
    the absolute clock, so grafting the subtree back is exact.
    """
    i = tree.index(tuple(u))
    nodes = tree.descendants(i)
    remap = np.full(tree.n_nodes, -1, np.int64)
    remap[nodes] = np.arange(nodes.size)
    parent = remap[tree.parent[nodes]]
    parent[0] = -1
    child_j = tree.child_j[nodes].copy()
    child_j[0] = 0
    first_child = np.where(tree.first_child[nodes] >= 0,
                           remap[np.maximum(tree.first_child[nodes], 0)], -1)
    lens = tree.path_end[nodes] - tree.path_start[nodes]
    ends = np.cumsum(lens)
    starts = ends - lens
    take = np.concatenate([np.arange(tree.path_start[j], tree.path_end[j]) for j in nodes])
    sub = MarkedTree(
        parent, child_j, tree.depth[nodes] - tree.depth[i], tree.birth[nodes], tree.death[nodes],
        tree.n_extra[nodes], first_child, starts, ends, tree.pt[take], tree.px[take], tree.py[take],
        tree.t_max,
        pcr=None if tree.pcr is None else tree.pcr[take] - tree.pcr[tree.path_start[i]],
        pcmr=None if tree.pcmr is None else tree.pcmr[take] - tree.pcmr[tree.path_start[i]],
        origin=float(tree.birth[i]),
        keys=None if tree.keys is None else tree.keys[nodes])
    s = tree.path_start[i]
    offset = (float(tree.birth[i] - tree.origin), (float(tree.px[s]), int(tree.py[s])))
    return sub, offset


def graft(tree: MarkedTree, u: Label, subtree: MarkedTree) -> MarkedTree:
    """Replace the subtree at u by ``subtree`` (inverse of extract_subtree)."""
    i = tree.index(tuple(u))
    keep = np.ones(tree.n_nodes, bool)
    keep[tree.descendants(i)] = False
    labs = tree.labels()
    sub_labs = subtree.labels()
    u = tuple(u)
    entries = [(labs[j], tree, j) for j in np.flatnonzero(keep)]
    entries += [(u + sub_labs[j], subtree, j) for j in range(subtree.n_nodes)]
    entries.sort(key=lambda e: (len(e[0]), e[0]))
    return _assemble(entries, tree)


def _assemble(entries, like: MarkedTree) -> MarkedTree:
    # rebuilt trees carry no rate integrals; call with_integrals() if needed
    records = {}
    for lab, src, j in entries:
        s, e = src.path_start[j], src.path_end[j]
        records[lab] = (src.birth[j], src.death[j], int(src.n_extra[j]),
                        PathRecord(src.pt[s:e], src.px[s:e], src.py[s:e]))
    return MarkedTree.from_records(records, like.t_max, like.origin)


# ---------------------------------------------------------------- validation

def validate_tree(tree: MarkedTree) -> list:
    """List of invariant violations; empty iff the tree is well formed."""
    out = []
    n = tree.n_nodes
    if n == 0 or tree.parent[0] != -1 or tree.depth[0] != 0:
        return ["root: tree does not start at the root label"]
    labs = tree.labels() if np.all(tree.parent[1:] >= 0) else None
    kids = [[] for _ in range(n)]
    for c in range(1, n):
        if tree.parent[c] >= 0:
            kids[tree.parent[c]].append(c)
    if tree.birth[0] != tree.origin:
        out.append("- timing: root not born at time 0")
    for i in range(n):
        name = format_label(labs[i]) if labs is not None else f"#{i}"
        p = int(tree.parent[i])
        if i > 0:
            if p < 0:
                out.append(f"{name} closure: parent missing")
                continue
            if not _close(tree.birth[i], tree.death[p]):
                out.append(f"{name} timing: S_u - sigma_u != S_parent")
        s, e = tree.path_start[i], tree.path_end[i]
        if e - s < 2:
            out.append(f"{name} path: fewer than two breakpoints")
        else:
            if np.any(np.diff(tree.pt[s:e]) < 0):
                out.append(f"{name} path: breakpoint times decrease")
            start_time = tree.death[p] if i > 0 else tree.origin
            if tree.pt[s] != start_time:
                out.append(f"{name} path: record does not start at the birth time")
            if i > 0:
                pe = tree.path_end[p] - 1
                if tree.px[s] != tree.px[pe] or tree.py[s] != tree.py[pe]:
                    out.append(f"{name} path: offspring not at parent's death location")
            end_time = tree.death[i] if math.isfinite(tree.death[i]) else tree.t_max
            if tree.pt[e - 1] != end_time:
                out.append(f"{name} path: record does not end at the death time or horizon")
        if math.isfinite(tree.death[i]) and tree.death[i] <= tree.t_max:
            want = int(tree.n_extra[i]) + 1
            got = sorted(int(tree.child_j[c]) for c in kids[i])
            if tree.n_extra[i] < 0 or got != list(range(1, want + 1)):
                out.append(f"{name} children: child count {len(got)} != 1+A_u = {want}")
        elif kids[i]:
            out.append(f"{name} children: node alive at the horizon has children")
    return out


def _close(a, b):
    if a == b:
        return True
    if not (math.isfinite(a) and math.isfinite(b)):
        return False
    return abs(a - b) <= 1e-9 * max(1.0, abs(a), abs(b))


# ---------------------------------------------------------------- integrals

def path_integrals(tree: MarkedTree, model: ModelSpec):
    """Cumulative int R and int m R at every breakpoint, along ancestral lines.

    Uses the same accumulation order as the simulation kernel, so a reloaded
    tabular tree reproduces the simulated values bit for bit.
    """
    pcr = np.empty(tree.pt.size)
    pcmr = np.empty(tree.pt.size)
    tabular = model.is_tabular
    if tabular:
        rates = model.rates()
        mr = model.m_times_r()
    for i in range(tree.n_nodes):
        s, e = tree.path_start[i], tree.path_end[i]
        if i == 0:
            cr = cmr = 0.0
        else:
            pe = tree.path_end[tree.parent[i]] - 1
            cr, cmr = pcr[pe], pcmr[pe]
        pcr[s], pcmr[s] = cr, cmr
        for k in range(s, e - 1):
            dt = tree.pt[k + 1] - tree.pt[k]
            y = int(tree.py[k])
            if dt > 0.0:
                if tabular:
                    cr = cr + rates[y] * dt
                    cmr = cmr + mr[y] * dt
                else:
                    r0, r1 = model.rate(tree.px[k], y), model.rate(tree.px[k + 1], y)
                    m0, m1 = model.mean_at(tree.px[k], y), model.mean_at(tree.px[k + 1], y)
                    cr = cr + 0.5 * (r0 + r1) * dt
                    cmr = cmr + 0.5 * (m0 * r0 + m1 * r1) * dt
            pcr[k + 1], pcmr[k + 1] = cr, cmr
    return pcr, pcmr


# ---------------------------------------------------------------- text format

HEADER = "# spinemc tree v1"


def _f(v: float) -> str:
    return repr(float(v))


def dump_tree(tree: MarkedTree, spine: Optional[Spine] = None) -> str:
    """Line-oriented text dump; one node per line (see docs/tree_format.md).

    Times are written on the tree's absolute clock (``# origin`` gives the
    root's birth time) with round-trip float formatting.
    """
    lines = [HEADER, f"# t_max {_f(tree.t_max)}"]
    if tree.origin:
        lines.append(f"# origin {_f(tree.origin)}")
    if spine is not None:
        lines.append(f"# spine {format_label(tree.label(int(spine.nodes[-1])))}")
    labs = tree.labels()
    for i in range(tree.n_nodes):
        s, e = tree.path_start[i], tree.path_end[i]
        a = "-" if tree.n_extra[i] < 0 else str(int(tree.n_extra[i]))
        fields = [format_label(labs[i]), _f(tree.death[i] - tree.birth[i]),
                  _f(tree.death[i]), a, f"{_f(tree.px[s])}:{int(tree.py[s])}"]
        fields += [f"{_f(tree.pt[k])}:{_f(tree.px[k])}:{int(tree.py[k])}" for k in range(s, e)]
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def load_tree(text: str, model: Optional[ModelSpec] = None):
    """Inverse of :func:`dump_tree`; returns ``(tree, spine_or_None)``."""
    t_max = None
    origin = 0.0
    spine_leaf = None
    records = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] == "t_max":
                t_max = float(parts[1])
            elif parts and parts[0] == "origin":
                origin = float(parts[1])
            elif parts and parts[0] == "spine":
                spine_leaf = parse_label(parts[1])
            continue
        parts = line.split()
        lab = parse_label(parts[0])
        sigma, S = float(parts[1]), float(parts[2])
        a = -1 if parts[3] == "-" else int(parts[3])
        pts = [p.split(":") for p in parts[5:]]
        times = np.array([float(p[0]) for p in pts])
        path = PathRecord(times, np.array([float(p[1]) for p in pts]),
                          np.array([int(p[2]) for p in pts], np.int64))
        birth = float(times[0])
        if math.isfinite(S) and not _close(S - sigma, birth):
            raise ValueError(f"line for {parts[0]}: sigma and S disagree with the path start")
        records[lab] = (birth, S, a, path)
    if t_max is None:
        raise ValueError("missing '# t_max' header")
    tree = MarkedTree.from_records(records, t_max, origin)
    if model is not None:
        tree = tree.with_integrals(model)
    spine = Spine.from_label(tree, spine_leaf) if spine_leaf is not None else None
    return tree, spine


def leaves(tree: MarkedTree) -> Iterable[int]:
    return np.flatnonzero(tree.first_child < 0)
