"""Multigraph diagrams: classification, quotients, change of basis, decompositions.

Diagrams are finite multigraphs (loops and parallel edges allowed) carrying
0, 1, or 2 root vertices.  They index the graph polynomials evaluated in
:mod:`trafficamp.graphpoly`.  Self-loops count 2 toward vertex degree.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache


CANON_CAP = 12  # vertex cap for partition / isomorphism enumeration


class DiagramError(ValueError):
    pass


class DiagramSizeError(DiagramError):
    """Raised when an operation would exceed the enumeration vertex cap."""


@dataclass(frozen=True)
class Diagram:
    """A multigraph with 0, 1, or 2 ordered roots.

    vertex_count: number of vertices, labeled 0..vertex_count-1.
    edges: tuple of (u, v) pairs with u <= v; repeated pairs are parallel
        edges, (v, v) is a self-loop.
    roots: tuple of 0, 1, or 2 vertex ids (the two may coincide).
    """

    vertex_count: int
    edges: tuple = ()
    roots: tuple = ()

    def __post_init__(self):
        if self.vertex_count < 1:
            raise DiagramError("diagram needs at least one vertex")
        # normalize each pair but keep edge order: per-edge labels are
        # positional, and quotients must preserve the correspondence
        norm = tuple((min(u, v), max(u, v)) for u, v in self.edges)
        object.__setattr__(self, "edges", norm)
        object.__setattr__(self, "roots", tuple(self.roots))
        if len(self.roots) > 2:
            raise DiagramError("at most 2 roots")
        for r in self.roots:
            if not 0 <= r < self.vertex_count:
                raise DiagramError("root %r out of range" % (r,))
        for u, v in self.edges:
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise DiagramError("edge (%r, %r) out of range" % (u, v))

    @property
    def edge_count(self):
        return len(self.edges)

    def degrees(self):
        deg = [0] * self.vertex_count
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1  # loop contributes 2 via u == v
        return deg

    def loops_at(self, v):
        return sum(1 for a, b in self.edges if a == b == v)

    def multiplicity(self, u, v):
        a, b = min(u, v), max(u, v)
        return sum(1 for e in self.edges if e == (a, b))

    def adjacency(self):
        """Neighbor lists as {v: [(neighbor, edge_index), ...]}, loops excluded."""
        adj = {v: [] for v in range(self.vertex_count)}
        for i, (u, v) in enumerate(self.edges):
            if u != v:
                adj[u].append((v, i))
                adj[v].append((u, i))
        return adj

    def with_roots(self, roots):
        return Diagram(self.vertex_count, self.edges, tuple(roots))

    def unrooted(self):
        return Diagram(self.vertex_count, self.edges, ())

    def __str__(self):
        return format_diagram(self)


@dataclass(frozen=True)
class DiagramClass:
    connected: bool
    two_edge_connected: bool
    cactus: bool
    eulerian: bool
    treelike: bool
    gaussian_tree: bool


@dataclass(frozen=True)
class HomeomorphicMatching:
    """A partial vertex matching of two rooted treelike diagrams whose quotient
    is a rooted cactus.  Always contains the root pair."""

    pairs: frozenset


# ---------------------------------------------------------------------------
# basic structure: connectivity, bridges, blocks
# ---------------------------------------------------------------------------

def connected_components(d):
    seen = [False] * d.vertex_count
    adj = d.adjacency()
    comps = []
    for s in range(d.vertex_count):
        if seen[s]:
            continue
        stack, comp = [s], []
        seen[s] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for w, _ in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def is_connected(d):
    return len(connected_components(d)) == 1


def biconnected_blocks(d):
    """2-vertex-connected blocks as lists of non-loop edge indices (Hopcroft-Tarjan)."""
    adj = d.adjacency()
    disc = [0] * d.vertex_count
    low = [0] * d.vertex_count
    timer = [1]
    blocks = []
    estack = []
    visited_edge = [False] * len(d.edges)

    def dfs(root):
        stack = [(root, iter(adj[root]))]
        disc[root] = low[root] = timer[0]
        timer[0] += 1
        tree_edge = {root: None}
        parents = {root: None}
        while stack:
            v, it = stack[-1]
            advanced = False
            for w, ei in it:
                if visited_edge[ei]:
                    continue
                visited_edge[ei] = True
                estack.append(ei)
                if disc[w] == 0:
                    parents[w] = v
                    tree_edge[w] = ei
                    disc[w] = low[w] = timer[0]
                    timer[0] += 1
                    stack.append((w, iter(adj[w])))
                    advanced = True
                    break
                else:
                    low[v] = min(low[v], disc[w])
            if not advanced:
                stack.pop()
                p = parents[v]
                if p is not None:
                    low[p] = min(low[p], low[v])
                    if low[v] >= disc[p]:
                        block = []
                        while True:
                            ei = estack.pop()
                            block.append(ei)
                            if ei == tree_edge[v]:
                                break
                        blocks.append(block)

    for s in range(d.vertex_count):
        if disc[s] == 0:
            dfs(s)
    return blocks


def bridges(d):
    """Edge indices of bridges: single-edge biconnected blocks (loops never bridge)."""
    out = []
    for block in biconnected_blocks(d):
        if len(block) == 1:
            ei = block[0]
            u, v = d.edges[ei]
            if u != v:
                out.append(ei)
    return sorted(out)


def _block_is_cycle(d, block):
    deg = {}
    for ei in block:
        u, v = d.edges[ei]
        deg[u] = deg.get(u, 0) + 1
        deg[v] = deg.get(v, 0) + 1
    return all(c == 2 for c in deg.values())


def edge_disjoint_path_bound(d, s, t, needed=3):
    """Max-flow with unit edge capacities, stopped once `needed` paths are found."""
    if s == t:
        return 0
    cap = {}
    for u, v in d.edges:
        if u != v:
            cap[(u, v)] = cap.get((u, v), 0) + 1
            cap[(v, u)] = cap.get((v, u), 0) + 1
    flow = 0
    while flow < needed:
        # BFS for an augmenting path
        prev = {s: None}
        queue = [s]
        while queue and t not in prev:
            v = queue.pop(0)
            for (a, b), c in cap.items():
                if a == v and c > 0 and b not in prev:
                    prev[b] = a
                    queue.append(b)
        if t not in prev:
            break
        v = t
        while prev[v] is not None:
            u = prev[v]
            cap[(u, v)] -= 1
            cap[(v, u)] = cap.get((v, u), 0) + 1
            v = u
        flow += 1
    return flow


def classify(d):
    """Structural flags of a diagram.

    Treelike and gaussian_tree require a root; rootless diagrams get False.
    """
    conn = is_connected(d)
    brs = bridges(d)
    two_ec = conn and not brs
    blocks = biconnected_blocks(d)
    cactus = two_ec and all(_block_is_cycle(d, b) for b in blocks)
    deg = d.degrees()
    eulerian = conn and all(x % 2 == 0 for x in deg)

    treelike = False
    gaussian = False
    if conn and d.roots:
        root = d.roots[0]
        treelike = not _has_three_paths(d) and not _has_stranded_bridge(d, brs, root)
        if treelike:
            bdeg = sum(1 for ei in brs for u in d.edges[ei] if u == root)
            gaussian = bdeg == 1
    return DiagramClass(conn, two_ec, cactus, eulerian, treelike, gaussian)


def _has_three_paths(d):
    for s in range(d.vertex_count):
        for t in range(s + 1, d.vertex_count):
            if edge_disjoint_path_bound(d, s, t, needed=3) >= 3:
                return True
    return False


def _has_stranded_bridge(d, brs, root):
    """True if some bridge has no all-bridge path to the root."""
    if not brs:
        return False
    badj = {v: [] for v in range(d.vertex_count)}
    for ei in brs:
        u, v = d.edges[ei]
        badj[u].append(v)
        badj[v].append(u)
    reach = {root}
    stack = [root]
    while stack:
        v = stack.pop()
        for w in badj[v]:
            if w not in reach:
                reach.add(w)
                stack.append(w)
    return any(d.edges[ei][0] not in reach for ei in brs)


# ---------------------------------------------------------------------------
# quotients and partitions
# ---------------------------------------------------------------------------

def quotient(d, partition):
    """Contract each block of a vertex partition to a single vertex.

    All edges are retained (possibly as loops or parallel edges), preserving
    edge order.  Root status is inherited by the containing block.
    """
    blocks = [sorted(set(b)) for b in partition]
    covered = sorted(v for b in blocks for v in b)
    if covered != list(range(d.vertex_count)):
        raise DiagramError("partition does not partition the vertex set")
    blocks.sort(key=lambda b: b[0])
    vmap = {}
    for i, b in enumerate(blocks):
        for v in b:
            vmap[v] = i
    edges = tuple((vmap[u], vmap[v]) for u, v in d.edges)
    roots = tuple(vmap[r] for r in d.roots)
    return Diagram(len(blocks), edges, roots)


def set_partitions(items):
    """All partitions of a sequence, as lists of lists."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


# ---------------------------------------------------------------------------
# canonical form
# ---------------------------------------------------------------------------

def _wl_colors(d):
    """1-WL vertex colors, stable under isomorphism (ids assigned by signature order)."""
    sig = [(d.roots.index(v) if v in d.roots else -1, d.degrees()[v], d.loops_at(v))
           for v in range(d.vertex_count)]
    colors = _compress(sig)
    for _ in range(d.vertex_count):
        sig = []
        for v in range(d.vertex_count):
            nb = sorted((colors[w], d.multiplicity(v, w))
                        for w in range(d.vertex_count) if w != v and d.multiplicity(v, w))
            sig.append((colors[v], tuple(nb)))
        new = _compress(sig)
        if new == colors:
            break
        colors = new
    return colors


def _compress(signatures):
    order = {s: i for i, s in enumerate(sorted(set(signatures)))}
    return [order[s] for s in signatures]


def canonicalize(d, cap=CANON_CAP):
    """Relabel vertices into canonical order; equal outputs iff rooted-isomorphic."""
    if d.vertex_count > cap:
        raise DiagramSizeError("vertex count %d exceeds cap %d" % (d.vertex_count, cap))
    return _canonicalize_cached(d)


@lru_cache(maxsize=100000)
def _canonicalize_cached(d):
    n = d.vertex_count
    colors = _wl_colors(d)
    mult = [[0] * n for _ in range(n)]
    loops = [0] * n
    for u, v in d.edges:
        if u == v:
            loops[u] += 1
        else:
            mult[u][v] += 1
            mult[v][u] += 1

    forced = list(d.roots)
    if len(forced) == 2 and forced[0] == forced[1]:
        forced = forced[:1]

    best = {"enc": None, "perm": None}

    def row_of(v, placed):
        return (-colors[v], loops[v]) + tuple(mult[v][u] for u in reversed(placed))

    def search(placed, enc):
        pos = len(placed)
        if pos < len(forced):
            cands = [forced[pos]]
        else:
            cands = [v for v in range(n) if v not in placed]
        if not cands:
            enc_t = tuple(enc)
            if best["enc"] is None or enc_t > best["enc"]:
                best["enc"], best["perm"] = enc_t, list(placed)
            return
        rows = [(row_of(v, placed), v) for v in cands]
        rows.sort(reverse=True)
        top = rows[0][0]
        for row, v in rows:
            if row != top:
                break
            nxt = enc + [row]
            # prune against current best prefix
            if best["enc"] is not None:
                pref = tuple(nxt)
                if pref < best["enc"][:len(pref)]:
                    continue
            search(placed + [v], nxt)

    search([], [])
    perm = best["perm"]
    inv = {v: i for i, v in enumerate(perm)}
    edges = tuple(sorted((min(inv[u], inv[v]), max(inv[u], inv[v]))
                         for u, v in d.edges))
    roots = tuple(inv[r] for r in d.roots)
    return Diagram(n, edges, roots)


def canonical_form(d, cap=CANON_CAP):
    """Opaque comparable/hashable key; equal keys iff rooted-isomorphic multigraphs."""
    c = canonicalize(d, cap=cap)
    return (c.vertex_count, c.roots, c.edges)


def diagram_from_key(key):
    n, roots, edges = key
    return Diagram(n, edges, roots)


def isomorphic(d1, d2, cap=CANON_CAP):
    return canonical_form(d1, cap) == canonical_form(d2, cap)


# ---------------------------------------------------------------------------
# w <-> z change of basis
# ---------------------------------------------------------------------------

def w_to_z_coefficients(d, cap=CANON_CAP):
    """Coefficients of w_d = sum_a c_{a,d} z_a over canonical quotient diagrams.

    c_{a,d} counts vertex partitions P with d_P isomorphic to a; the
    coefficient sum is Bell(|V(d)|).
    """
    if d.vertex_count > cap:
        raise DiagramSizeError("vertex count %d exceeds cap %d" % (d.vertex_count, cap))
    out = {}
    for part in set_partitions(range(d.vertex_count)):
        q = canonicalize(quotient(d, part), cap=cap)
        out[q] = out.get(q, 0) + 1
    return out


def z_to_w_coefficients(d, cap=CANON_CAP):
    """Integer coefficients c' with z_d = sum_a c'_{a,d} w_a (Mobius inversion).

    Computed by recursively eliminating strictly coarser quotients.
    """
    return dict(_z_to_w_cached(canonicalize(d, cap=cap), cap))


@lru_cache(maxsize=None)
def _z_to_w_cached(dc, cap):
    out = {dc: 1}
    for a, c in w_to_z_coefficients(dc, cap=cap).items():
        if a == dc:
            continue
        for b, c2 in _z_to_w_cached(a, cap):
            out[b] = out.get(b, 0) - c * c2
            if out[b] == 0:
                del out[b]
    return tuple(out.items())


# ---------------------------------------------------------------------------
# cactus structure
# ---------------------------------------------------------------------------

def cycles_of_cactus(d):
    """Cycle lengths of a cactus; loops count as length-1 cycles."""
    if not classify(d).cactus:
        raise DiagramError("cycles_of_cactus requires a cactus diagram")
    out = [1] * sum(1 for u, v in d.edges if u == v)
    for block in biconnected_blocks(d):
        out.append(len(block))
    return sorted(out)


def graft(parts):
    """Disjoint union of rooted diagrams with all roots identified into one root."""
    parts = list(parts)
    if not parts:
        raise DiagramError("graft needs at least one part")
    for p in parts:
        if len(p.roots) != 1:
            raise DiagramError("graft requires singly-rooted parts")
    total = sum(p.vertex_count for p in parts)
    edges = []
    offset = 0
    maps = []
    for p in parts:
        maps.append(offset)
        for u, v in p.edges:
            edges.append((u + offset, v + offset))
        offset += p.vertex_count
    # merge all roots into the first one
    root_ids = [p.roots[0] + maps[i] for i, p in enumerate(parts)]
    keep = root_ids[0]
    blocks = [[keep] + root_ids[1:]]
    for v in range(total):
        if v not in root_ids:
            blocks.append([v])
    merged = quotient(Diagram(total, tuple(edges), (keep,)), blocks)
    return merged


def is_open_cactus(d):
    try:
        open_cactus_parts(d)
        return True
    except DiagramError:
        return False


def open_cactus_parts(d):
    """Decompose a 2-rooted open cactus into (base path vertices, hanging cactuses).

    Returns (path, cactuses) where path = [u1..uk] runs from roots[0] to
    roots[1] along the bridge edges, and cactuses[i] is the hanging cactus at
    path[i] as a rooted Diagram (vertices relabeled, root first).
    """
    if len(d.roots) != 2 or d.roots[0] == d.roots[1]:
        raise DiagramError("open cactus needs two distinct roots")
    if not is_connected(d):
        raise DiagramError("open cactus must be connected")
    brs = bridges(d)
    if not brs:
        raise DiagramError("open cactus needs at least one base-path (bridge) edge")
    badj = {}
    for ei in brs:
        u, v = d.edges[ei]
        badj.setdefault(u, []).append(v)
        badj.setdefault(v, []).append(u)
    r1, r2 = d.roots
    if r1 not in badj or r2 not in badj:
        raise DiagramError("roots must be endpoints of the base path")
    if len(badj[r1]) != 1 or len(badj[r2]) != 1:
        raise DiagramError("roots must be base-path endpoints")
    if any(len(nb) > 2 for nb in badj.values()):
        raise DiagramError("bridges do not form a simple path")
    path = [r1]
    prev = None
    while path[-1] != r2:
        nxt = [w for w in badj[path[-1]] if w != prev]
        if len(nxt) != 1:
            raise DiagramError("bridges do not form a simple path")
        prev = path[-1]
        path.append(nxt[0])
    if len(path) - 1 != len(brs):
        raise DiagramError("bridges do not form a single path")

    strip = Diagram(d.vertex_count,
                    tuple(e for i, e in enumerate(d.edges) if i not in brs), ())
    comps = connected_components(strip)
    comp_of = {}
    for ci, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = ci
    if len({comp_of[u] for u in path}) != len(path) or len(comps) != len(path):
        raise DiagramError("hanging cactuses must be vertex-disjoint, one per path vertex")
    cactuses = []
    for u in path:
        comp = comps[comp_of[u]]
        sub = _induced(strip, comp, root=u)
        if not classify(sub).cactus:
            raise DiagramError("hanging component at %d is not a cactus" % u)
        cactuses.append(sub)
    return path, cactuses


def _induced(d, verts, root=None):
    verts = sorted(verts)
    idx = {v: i for i, v in enumerate(verts)}
    vset = set(verts)
    edges = tuple((idx[u], idx[v]) for u, v in d.edges if u in vset and v in vset)
    roots = (idx[root],) if root is not None else ()
    return Diagram(len(verts), edges, roots)


# ---------------------------------------------------------------------------
# open cactus decomposition of 2-edge-connected non-cactuses
# ---------------------------------------------------------------------------

def open_cactus_decomposition(d):
    """Find an excess open-cactus subgraph whose interior can be removed.

    For a rooted 2-edge-connected non-cactus diagram, returns
    (s, t, sub, vertices): sub is an induced open cactus with endpoints
    s != t (original vertex ids), relabeled so that sub's vertex i is
    vertices[i] in d.  Deleting the interior vertices
    (vertices minus {s, t}) leaves d 2-edge-connected, and the root is not
    an interior vertex.  Ties are broken toward lowest vertex ids.
    """
    if len(d.roots) < 1:
        raise DiagramError("decomposition needs a rooted diagram")
    cls = classify(d)
    if not cls.two_edge_connected:
        raise DiagramError("diagram must be 2-edge-connected")
    if cls.cactus:
        raise DiagramError("diagram is a cactus; nothing to remove")

    # prune hanging cyclic blocks and self-loops, re-rooting as needed
    live = set(range(len(d.edges)))
    root = d.roots[0]
    while True:
        live = {ei for ei in live if d.edges[ei][0] != d.edges[ei][1]}
        sub = Diagram(d.vertex_count,
                      tuple(d.edges[ei] for ei in sorted(live)), ())
        index_map = sorted(live)
        blocks = biconnected_blocks(sub)
        if len(blocks) <= 1:
            break
        # vertex -> number of blocks containing it
        art_count = {}
        for b in blocks:
            vs = set()
            for ei in b:
                vs.update(sub.edges[ei])
            for v in vs:
                art_count[v] = art_count.get(v, 0) + 1
        target = None
        for b in sorted(blocks, key=lambda b: min(min(sub.edges[ei]) for ei in b)):
            if not _block_is_cycle(sub, b):
                continue
            vs = set()
            for ei in b:
                vs.update(sub.edges[ei])
            arts = [v for v in vs if art_count[v] > 1]
            if len(arts) == 1:
                target = (b, arts[0])
                break
        if target is None:
            break
        b, v = target
        removed = {index_map[ei] for ei in b}
        dropped = set()
        for ei in b:
            dropped.update(sub.edges[ei])
        dropped.discard(v)
        live -= removed
        if root in dropped:
            root = v

    beta_edges = sorted(live)
    beta_vertices = sorted({v for ei in beta_edges for v in d.edges[ei]})
    path = _last_ear(d, beta_edges, beta_vertices, root)

    # lift the ear back: interior hanging components in d minus the ear edges
    interior = path[1:-1]
    ear_edge_ids = _path_edge_ids(d, path)
    rem = Diagram(d.vertex_count,
                  tuple(e for i, e in enumerate(d.edges) if i not in ear_edge_ids), ())
    comps = connected_components(rem)
    sub_verts = set(path)
    for u in interior:
        for comp in comps:
            if u in comp:
                sub_verts.update(comp)
                break
    vertices = sorted(sub_verts)
    idx = {v: i for i, v in enumerate(vertices)}
    edges = [tuple(sorted((idx[u], idx[v]))) for u, v in
             (d.edges[i] for i in ear_edge_ids)]
    for u in interior:
        for comp in comps:
            if u in comp:
                for a, b in _induced(rem, comp).edges:
                    cm = sorted(comp)
                    edges.append(tuple(sorted((idx[cm[a]], idx[cm[b]]))))
                break
    sub = Diagram(len(sub_verts), tuple(edges), (idx[path[0]], idx[path[-1]]))
    return path[0], path[-1], sub, vertices


def _path_edge_ids(d, path):
    used = set()
    ids = []
    for a, b in zip(path, path[1:]):
        for ei, (u, v) in enumerate(d.edges):
            if ei not in used and {u, v} == {a, b}:
                used.add(ei)
                ids.append(ei)
                break
    return ids


def _last_ear(d, edge_ids, vertices, root):
    """Ear growth on the pruned graph; returns the final ear as a vertex path."""
    sub_edges = {ei: d.edges[ei] for ei in edge_ids}

    def neighbors(v, excluded):
        for ei, (a, b) in sub_edges.items():
            if ei in excluded:
                continue
            if a == v:
                yield b, ei
            elif b == v:
                yield a, ei

    cyc = _shortest_cycle_through(sub_edges, root)
    used = set(cyc["edges"])
    verts = set(cyc["vertices"])
    last_path = None
    while verts != set(vertices):
        start = None
        for ei in sorted(set(sub_edges) - used):
            a, b = sub_edges[ei]
            if (a in verts) != (b in verts):
                u1, u2 = (a, b) if a in verts else (b, a)
                start = (u1, u2, ei)
                break
        if start is None:
            raise DiagramError("pruned graph is not connected")  # unreachable for 2EC
        u1, u2, ei0 = start
        # BFS from u2 back to the current subgraph, avoiding ei0 and verts internally
        prev = {u2: None}
        queue = [u2]
        endpoint = None
        while queue:
            v = queue.pop(0)
            if v in verts:
                endpoint = v
                break
            for w, ei in sorted(neighbors(v, {ei0})):
                if w not in prev:
                    prev[w] = v
                    queue.append(w)
        chain = [endpoint]
        while prev[chain[-1]] is not None:
            chain.append(prev[chain[-1]])
        chain.append(u1)  # path u1 - u2 - ... - endpoint reversed
        path = list(reversed(chain))
        last_path = path
        verts.update(path)
        used.update(_subset_path_edges(sub_edges, path, used))
    remaining = set(sub_edges) - used
    if remaining:
        ei = min(remaining)
        a, b = sub_edges[ei]
        return [min(a, b), max(a, b)]
    if last_path is None:
        raise DiagramError("diagram is a single cycle")  # cactus, pre-excluded
    return last_path


def _subset_path_edges(sub_edges, path, used):
    taken = []
    for a, b in zip(path, path[1:]):
        for ei, (u, v) in sub_edges.items():
            if ei not in used and ei not in taken and {u, v} == {a, b}:
                taken.append(ei)
                break
    return taken


def _shortest_cycle_through(sub_edges, root):
    best = None
    for ei, (a, b) in sorted(sub_edges.items()):
        if root not in (a, b):
            continue
        if a == b:
            return {"vertices": [root], "edges": [ei]}
        other = b if a == root else a
        # shortest path root..other avoiding edge ei
        prev = {root: (None, None)}
        queue = [root]
        while queue:
            v = queue.pop(0)
            if v == other:
                break
            for ej, (u, w) in sorted(sub_edges.items()):
                if ej == ei:
                    continue
                nxt = None
                if u == v:
                    nxt = w
                elif w == v:
                    nxt = u
                if nxt is not None and nxt not in prev:
                    prev[nxt] = (v, ej)
                    queue.append(nxt)
        if other not in prev:
            continue
        vs, es = [other], [ei]
        v = other
        while prev[v][0] is not None:
            es.append(prev[v][1])
            v = prev[v][0]
            vs.append(v)
        cyc = {"vertices": vs, "edges": es}
        if best is None or len(es) < len(best["edges"]):
            best = cyc
    if best is None:
        raise DiagramError("no cycle through the root")
    return best


# ---------------------------------------------------------------------------
# homeomorphic matchings
# ---------------------------------------------------------------------------

def homeomorphic_matchings(t1, t2, cap=CANON_CAP):
    """All partial matchings of two treelike diagrams whose quotient is a cactus.

    The root pair is always matched.  For cactus inputs this is exactly the
    root-only matching.
    """
    for t in (t1, t2):
        if len(t.roots) != 1:
            raise DiagramError("homeomorphic matchings need singly-rooted diagrams")
        if not classify(t).treelike:
            raise DiagramError("inputs must be treelike")
    if t1.vertex_count > cap or t2.vertex_count > cap:
        raise DiagramSizeError("diagram exceeds vertex cap")
    n1, n2 = t1.vertex_count, t2.vertex_count
    r1, r2 = t1.roots[0], t2.roots[0]
    others1 = [v for v in range(n1) if v != r1]
    others2 = [v for v in range(n2) if v != r2]

    union_edges = list(t1.edges) + [(u + n1, v + n1) for u, v in t2.edges]
    union = Diagram(n1 + n2, tuple(union_edges), ())

    out = []
    for k in range(0, min(len(others1), len(others2)) + 1):
        for sub1 in itertools.combinations(others1, k):
            for sub2 in itertools.permutations(others2, k):
                pairs = [(r1, r2)] + list(zip(sub1, sub2))
                merged = {u: v + n1 for u, v in pairs}
                blocks = [[u, merged[u]] for u in merged]
                absorbed = set(merged) | set(merged.values())
                for v in range(n1 + n2):
                    if v not in absorbed:
                        blocks.append([v])
                q = quotient(union.with_roots((r1,)), blocks)
                if classify(q).cactus:
                    out.append(HomeomorphicMatching(frozenset(pairs)))
    return out


def homeomorphic_quotient(t1, t2, matching):
    """Quotient of the disjoint union t1 + t2 under a homeomorphic matching."""
    n1 = t1.vertex_count
    union_edges = list(t1.edges) + [(u + n1, v + n1) for u, v in t2.edges]
    union = Diagram(n1 + t2.vertex_count, tuple(union_edges), (t1.roots[0],))
    merged = {u: v + n1 for u, v in matching.pairs}
    blocks = [[u, merged[u]] for u in merged]
    absorbed = set(merged) | set(merged.values())
    for v in range(union.vertex_count):
        if v not in absorbed:
            blocks.append([v])
    return quotient(union, blocks)


# ---------------------------------------------------------------------------
# enumeration of small diagrams
# ---------------------------------------------------------------------------

def cycle_diagram(length, rooted=False):
    if length == 1:
        return Diagram(1, ((0, 0),), (0,) if rooted else ())
    edges = tuple((i, (i + 1) % length) for i in range(length))
    return Diagram(length, edges, (0,) if rooted else ())


@lru_cache(maxsize=None)
def enumerate_two_edge_connected(max_edges):
    """All 2-edge-connected multigraphs with at most max_edges edges, up to iso.

    Generated by ear decomposition: start from cycles (loops included) and
    repeatedly attach open or closed ears.
    """
    seen = {}
    frontier = []
    for length in range(1, max_edges + 1):
        c = canonicalize(cycle_diagram(length))
        seen[c] = True
        frontier.append(c)
    while frontier:
        nxt = []
        for g in frontier:
            budget = max_edges - g.edge_count
            for ell in range(1, budget + 1):
                for u in range(g.vertex_count):
                    for v in range(u, g.vertex_count):
                        nv = g.vertex_count + ell - 1
                        edges = list(g.edges)
                        chain = [u] + list(range(g.vertex_count, nv)) + [v]
                        edges.extend(zip(chain, chain[1:]))
                        cand = canonicalize(Diagram(nv, tuple(edges), ()))
                        if cand not in seen:
                            seen[cand] = True
                            nxt.append(cand)
        frontier = nxt
    return tuple(sorted(seen, key=lambda g: (g.edge_count, g.vertex_count,
                                             canonical_form(g))))


@lru_cache(maxsize=None)
def enumerate_connected_multigraphs(max_vertices, max_edges):
    """All connected multigraphs within the given size bounds, up to iso."""
    start = canonicalize(Diagram(1))
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for g in frontier:
            if g.edge_count >= max_edges:
                continue
            cands = []
            for u in range(g.vertex_count):
                for v in range(u, g.vertex_count):
                    cands.append(Diagram(g.vertex_count, g.edges + ((u, v),), ()))
                if g.vertex_count < max_vertices:
                    cands.append(Diagram(g.vertex_count + 1,
                                         g.edges + ((u, g.vertex_count),), ()))
            for cand in cands:
                c = canonicalize(cand)
                if c not in seen:
                    seen.add(c)
                    nxt.append(c)
        frontier = nxt
    return tuple(sorted(seen, key=lambda g: (g.edge_count, g.vertex_count,
                                             canonical_form(g))))


# ---------------------------------------------------------------------------
# text format and named catalog
# ---------------------------------------------------------------------------

_FMT = re.compile(
    r"diagram\{\s*v=(\d+)\s*;\s*roots=\[([0-9,\s]*)\]\s*;\s*edges=\[([0-9,()\s]*)\]\s*\}")


def parse_diagram(text):
    """Parse `diagram{v=<n>; roots=[...]; edges=[(a,b),...]}` (0-based vertices)."""
    m = _FMT.fullmatch(text.strip())
    if not m:
        raise DiagramError("malformed diagram literal: %r" % text)
    n = int(m.group(1))
    roots = tuple(int(x) for x in m.group(2).replace(" ", "").split(",") if x)
    pairs = re.findall(r"\((\d+)\s*,\s*(\d+)\)", m.group(3))
    edges = tuple((int(a), int(b)) for a, b in pairs)
    return Diagram(n, edges, roots)


def format_diagram(d):
    roots = ",".join(str(r) for r in d.roots)
    edges = ",".join("(%d,%d)" % e for e in d.edges)
    return "diagram{v=%d; roots=[%s]; edges=[%s]}" % (d.vertex_count, roots, edges)


def _bowtie():
    return Diagram(5, ((0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)), ())


def _dumbbell():
    # two triangles joined by a bridge: the smallest bridged diagram whose
    # w-value is not annihilated outright by puncturing
    return Diagram(6, ((0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 5), (5, 3)), ())


CATALOG = {
    "vertex": Diagram(1),
    "loop": Diagram(1, ((0, 0),)),
    "edge": Diagram(2, ((0, 1),)),
    "path2": Diagram(3, ((0, 1), (1, 2))),
    "path3": Diagram(4, ((0, 1), (1, 2), (2, 3))),
    "cycle2": cycle_diagram(2),
    "cycle3": cycle_diagram(3),
    "cycle4": cycle_diagram(4),
    "cycle5": cycle_diagram(5),
    "cycle6": cycle_diagram(6),
    "cycle7": cycle_diagram(7),
    "cycle8": cycle_diagram(8),
    "theta": Diagram(2, ((0, 1), (0, 1), (0, 1))),
    "bowtie": _bowtie(),
    "dumbbell": _dumbbell(),
    "star3": Diagram(4, ((0, 1), (0, 2), (0, 3))),
    "k4": Diagram(4, tuple(itertools.combinations(range(4), 2))),
}


def named_diagram(name):
    """Look up a catalog diagram or parse an inline `diagram{...}` literal."""
    if name in CATALOG:
        return CATALOG[name]
    if name.startswith("diagram{"):
        return parse_diagram(name)
    raise DiagramError("unknown diagram %r" % name)
