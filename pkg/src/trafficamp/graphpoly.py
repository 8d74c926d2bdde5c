"""Graph-polynomial evaluation in the w- and z-bases.

A diagram with 0/1/2 roots evaluates to a scalar/vector/matrix: the sum over
all vertex labelings (w-basis) or injective labelings (z-basis) of the product
of matrix entries along edges.  The main evaluator contracts vertices in a
greedy min-width order; a literal nested-loop oracle is kept alongside.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import diagrams
from .diagrams import Diagram, DiagramError, quotient, set_partitions


class BudgetError(RuntimeError):
    """Estimated evaluation cost exceeds the configured budget."""


def _as_labels(d, labels):
    """Normalize labels to one symmetric n x n array per edge, in edge order."""
    if isinstance(labels, np.ndarray):
        labels = [labels] * d.edge_count
    labels = [np.asarray(a, dtype=np.float64) for a in labels]
    if len(labels) != d.edge_count:
        raise ValueError("need one label per edge (%d edges, %d labels)"
                         % (d.edge_count, len(labels)))
    if d.edge_count == 0:
        raise ValueError("cannot infer dimension from an edgeless diagram; "
                         "pass n explicitly where supported")
    n = labels[0].shape[0]
    for a in labels:
        if a.shape != (n, n):
            raise ValueError("all edge labels must be n x n with equal n")
        if not np.array_equal(a, a.T):
            raise ValueError("edge labels must be symmetric")
    return labels, n


def _default_budget(n):
    return 8.0 * n ** 3


def eval_w(d, labels, n=None, vertex_weights=None, budget=None):
    """w-basis value of a diagram on per-edge (or one shared) matrix labels.

    Sums over all vertex labelings with roots pinned, by eliminating one
    non-root vertex at a time (greedy minimum contraction width).  Optional
    vertex_weights maps vertex -> length-n vector multiplied at that vertex.
    Raises BudgetError when the estimated flop count exceeds `budget`
    (default 8 n^3); pass budget=float("inf") to force through.
    """
    if d.edge_count:
        labels, n = _as_labels(d, labels)
    elif n is None:
        if isinstance(labels, np.ndarray):
            n = labels.shape[0]
        else:
            raise ValueError("edgeless diagram needs explicit n")
    if budget is None:
        budget = _default_budget(n)

    factors = []
    for ei, (u, v) in enumerate(d.edges):
        if u == v:
            factors.append(((u,), np.diag(labels[ei]).copy()))
        else:
            factors.append(((u, v), labels[ei]))
    if vertex_weights:
        for v, w in vertex_weights.items():
            w = np.asarray(w, dtype=np.float64)
            if w.shape != (n,):
                raise ValueError("vertex weight must be a length-n vector")
            factors.append(((v,), w))

    root_set = set(d.roots)
    remaining = [v for v in range(d.vertex_count) if v not in root_set]
    scale = 1.0
    cost = 0.0

    def width(v):
        idx = set()
        for t, _ in factors:
            if v in t:
                idx.update(t)
        return len(idx)

    while remaining:
        v = min(remaining, key=lambda u: (width(u), u))
        remaining.remove(v)
        group = [f for f in factors if v in f[0]]
        factors = [f for f in factors if v not in f[0]]
        if not group:
            scale *= n  # isolated vertex: free labeling
            continue
        idx_all = sorted({i for t, _ in group for i in t})
        cost += float(n) ** len(idx_all)
        if cost > budget:
            raise BudgetError("contraction cost %.3g exceeds budget %.3g"
                              % (cost, budget))
        out_idx = tuple(i for i in idx_all if i != v)
        letters = {i: chr(97 + k) for k, i in enumerate(idx_all)}
        spec = (",".join("".join(letters[i] for i in t) for t, _ in group)
                + "->" + "".join(letters[i] for i in out_idx))
        arr = np.einsum(spec, *[a for _, a in group], optimize=True)
        if out_idx:
            factors.append((out_idx, arr))
        else:
            scale *= float(arr)

    return _combine_roots(d, factors, scale, n)


def _combine_roots(d, factors, scale, n):
    roots = d.roots
    if not roots:
        assert not factors
        return scale
    if len(roots) == 1 or roots[0] == roots[1]:
        r = roots[0]
        vec = np.full(n, scale)
        for t, a in factors:
            assert t == (r,)
            vec = vec * a
        if len(roots) == 2:
            return np.diag(vec)
        return vec
    r1, r2 = roots
    mat = np.full((n, n), scale)
    for t, a in factors:
        if t == (r1,):
            mat = mat * a[:, None]
        elif t == (r2,):
            mat = mat * a[None, :]
        elif t == (r1, r2):
            mat = mat * a
        elif t == (r2, r1):
            mat = mat * a.T
        else:
            raise AssertionError("unexpected leftover factor %r" % (t,))
    return mat


def eval_w_brute(d, labels, n=None, vertex_weights=None, budget=1e8):
    """Literal nested-loop w-basis sum with compensated accumulation."""
    if d.edge_count:
        labels, n = _as_labels(d, labels)
    elif n is None:
        if isinstance(labels, np.ndarray):
            n = labels.shape[0]
        else:
            raise ValueError("edgeless diagram needs explicit n")
    if float(n) ** d.vertex_count > budget:
        raise BudgetError("brute force needs %g terms > budget %g"
                          % (float(n) ** d.vertex_count, budget))
    roots = d.roots
    free = [v for v in range(d.vertex_count) if v not in set(roots)]

    if not roots:
        acc = [0.0, 0.0]
        targets = [()]
    elif len(roots) == 1 or roots[0] == roots[1]:
        acc = [[0.0, 0.0] for _ in range(n)]
    else:
        acc = [[[0.0, 0.0] for _ in range(n)] for _ in range(n)]

    def kahan(cell, x):
        y = x - cell[1]
        t = cell[0] + y
        cell[1] = (t - cell[0]) - y
        cell[0] = t

    weights = vertex_weights or {}
    for assign in itertools.product(range(n), repeat=len(free)):
        label = {}
        for v, i in zip(free, assign):
            label[v] = i
        if not roots:
            term = 1.0
            for ei, (u, v) in enumerate(d.edges):
                term *= labels[ei][label[u], label[v]]
            for v, w in weights.items():
                term *= w[label[v]]
            kahan(acc, term)
        elif len(roots) == 1 or roots[0] == roots[1]:
            for i in range(n):
                label[roots[0]] = i
                term = 1.0
                for ei, (u, v) in enumerate(d.edges):
                    term *= labels[ei][label[u], label[v]]
                for v, w in weights.items():
                    term *= w[label[v]]
                kahan(acc[i], term)
        else:
            for i in range(n):
                label[roots[0]] = i
                for j in range(n):
                    label[roots[1]] = j
                    term = 1.0
                    for ei, (u, v) in enumerate(d.edges):
                        term *= labels[ei][label[u], label[v]]
                    for v, w in weights.items():
                        term *= w[label[v]]
                    kahan(acc[i][j], term)

    if not roots:
        return acc[0]
    if len(roots) == 1:
        return np.array([c[0] for c in acc])
    if roots[0] == roots[1]:
        return np.diag([c[0] for c in acc])
    return np.array([[c[0] for c in row] for row in acc])


def partition_mobius(blocks):
    """Mobius function of the partition lattice at (discrete, P)."""
    out = 1
    for b in blocks:
        k = len(b)
        out *= (-1) ** (k - 1) * math.factorial(k - 1)
    return out


def eval_z(d, labels, n=None, budget=None, cap=diagrams.CANON_CAP):
    """z-basis value: the w-sum restricted to injective vertex labelings.

    Computed exactly by Mobius inversion over the vertex-partition lattice,
    z_d = sum_P mu(P) w_{d_P}; per-edge labels survive contraction since
    quotients preserve edge order.
    """
    if d.vertex_count > cap:
        raise diagrams.DiagramSizeError("vertex count exceeds cap")
    if isinstance(labels, np.ndarray) and d.edge_count:
        # uniform labels: group isomorphic quotients through the coefficient table
        coeffs = diagrams.z_to_w_coefficients(d, cap=cap)
        total = None
        for a, c in coeffs.items():
            val = eval_w(a, labels, n=n, budget=budget)
            total = c * val if total is None else total + c * val
        return total
    total = None
    for part in set_partitions(range(d.vertex_count)):
        q = quotient(d, part)
        lab = labels if d.edge_count else None
        val = eval_w(q, lab, n=n, budget=budget)
        mu = partition_mobius(part)
        total = mu * val if total is None else total + mu * val
    return total


def eval_z_brute(d, labels, n=None, budget=1e8):
    """Injective-labeling oracle for eval_z (test device)."""
    if d.edge_count:
        labels, n = _as_labels(d, labels)
    elif n is None:
        if isinstance(labels, np.ndarray):
            n = labels.shape[0]
        else:
            raise ValueError("edgeless diagram needs explicit n")
    k = d.vertex_count
    if math.perm(n, k) * max(1, d.edge_count) > budget:
        raise BudgetError("injective brute force over budget")
    roots = d.roots
    if not roots:
        out = 0.0
    elif len(roots) == 1 or roots[0] == roots[1]:
        out = np.zeros(n)
    else:
        out = np.zeros((n, n))
    for assign in itertools.permutations(range(n), k):
        term = 1.0
        for ei, (u, v) in enumerate(d.edges):
            term *= labels[ei][assign[u], assign[v]]
        if not roots:
            out += term
        elif len(roots) == 1:
            out[assign[roots[0]]] += term
        elif roots[0] == roots[1]:
            out[assign[roots[0]], assign[roots[0]]] += term
        else:
            out[assign[roots[0]], assign[roots[1]]] += term
    return out


def eval_w_neq(d, labels, s, t, n=None, budget=None):
    """w-sum restricted to labelings with distinct labels at vertices s and t.

    Inclusion-exclusion: w^{s!=t} = w - w(with s,t merged).
    """
    if s == t:
        raise DiagramError("s and t must be distinct vertices")
    full = eval_w(d, labels, n=n, budget=budget)
    blocks = [[s, t]] + [[v] for v in range(d.vertex_count) if v not in (s, t)]
    merged = quotient(d, blocks)
    lab = labels if d.edge_count else None
    return full - eval_w(merged, lab, n=n, budget=budget)


def eval_open_cactus_matrix(d, a, budget=None):
    """Matrix value of an open cactus: alternating diag(hanging) and A product.

    The base path contributes one factor of A per edge; each base vertex
    contributes the diagonal matrix of its hanging-cactus vector.
    """
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    path, cactuses = diagrams.open_cactus_parts(d)
    hang = []
    for c in cactuses:
        if c.edge_count == 0:
            hang.append(np.ones(n))
        else:
            hang.append(eval_w(c, a, budget=budget))
    out = None
    for i in range(len(path)):
        if out is None:
            out = hang[i][:, None] * a
        elif i < len(path) - 1:
            out = (out * hang[i][None, :]) @ a
        else:
            out = out * hang[i][None, :]
    return out


def fundamental_bound_audit(d, labels, n=None, budget=None):
    """Check |value| <= product of spectral norms for 2-edge-connected diagrams.

    Scalar diagrams are normalized by 1/n; vector norms are sup norms; matrix
    norms are spectral.  Returns dict with value, bound, and pass flag.
    """
    if not diagrams.classify(d).two_edge_connected:
        raise DiagramError("fundamental bound applies to 2-edge-connected diagrams")
    lab, n = _as_labels(d, labels) if d.edge_count else (None, n)
    val = eval_w(d, labels, n=n, budget=budget)
    bound = 1.0
    for a in (lab or []):
        bound *= np.linalg.norm(a, 2)
    if not d.roots:
        size = abs(val) / n
    elif len(d.roots) == 1:
        size = float(np.max(np.abs(val)))
    else:
        size = np.linalg.norm(val, 2)
    ok = size <= bound * (1 + 1e-9) + 1e-12
    return {"value": size, "bound": bound, "ok": bool(ok)}
