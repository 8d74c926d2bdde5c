"""Matrix ensembles: GOE, Wigner, Haar-orthogonal, ROM, Fourier-type
deterministic matrices, their puncturings, and block models.

All generation is driven by a counter-based Philox stream keyed by
(seed, stream), so identical specs reproduce bit-identical matrices
regardless of generation order or thread count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import graphpoly

KINDS = ("goe", "wigner", "haar_orthogonal", "rom", "r_rom", "hadamard",
         "dst", "dct", "punctured", "block_goe", "community", "orth_invariant")


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    n: int
    seed: int = 0
    entry_law: str = "normal"          # wigner: normal | rademacher
    inner: str = None                  # punctured: inner kind; community: rom | goe
    q: int = None                      # block kinds
    sigma: tuple = None                # block_goe: q x q rows, flattened row-major
    eigenvalues: str = None            # orth_invariant: rademacher | semicircle | uniform

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError("unknown ensemble kind %r" % self.kind)
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if self.kind == "hadamard" and self.n & (self.n - 1):
            raise ValueError("hadamard needs n a power of 2")
        if self.kind in ("block_goe", "community"):
            if not self.q or self.n % self.q:
                raise ValueError("block kinds need q dividing n")
        if self.kind == "block_goe":
            s = np.asarray(self.sigma, dtype=np.float64).reshape(self.q, self.q)
            if not np.allclose(s, s.T) or np.any(s < 0):
                raise ValueError("sigma must be symmetric with nonnegative entries")
        if self.kind == "punctured" and (self.inner is None or self.inner == "punctured"):
            raise ValueError("punctured needs a non-punctured inner kind")

    def sigma_matrix(self):
        return np.asarray(self.sigma, dtype=np.float64).reshape(self.q, self.q)

    def to_json(self):
        out = {"kind": self.kind, "n": self.n, "seed": self.seed}
        if self.kind == "wigner":
            out["entry_law"] = self.entry_law
        if self.inner is not None:
            out["inner"] = self.inner
        if self.q is not None:
            out["q"] = self.q
        if self.sigma is not None:
            out["sigma"] = list(self.sigma)
        if self.eigenvalues is not None:
            out["eigenvalues"] = self.eigenvalues
        return out

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(kind=obj["kind"], n=int(obj["n"]), seed=int(obj.get("seed", 0)),
                   entry_law=obj.get("entry_law", "normal"),
                   inner=obj.get("inner"), q=obj.get("q"),
                   sigma=tuple(obj["sigma"]) if "sigma" in obj else None,
                   eigenvalues=obj.get("eigenvalues"))


@dataclass(frozen=True)
class GeneratedMatrix:
    values: np.ndarray
    spec: EnsembleSpec
    provenance: tuple  # (seed, stream)


def stream_rng(seed, stream=0):
    """Philox generator keyed by (seed, stream): reproducible parallel draws."""
    key = np.array([np.uint64(seed & (2 ** 64 - 1)), np.uint64(stream & (2 ** 64 - 1))])
    return np.random.Generator(np.random.Philox(key=key))


def puncture(m):
    """Conjugate by the projection orthogonal to the all-ones vector, in O(n^2)."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("puncture needs a square matrix")
    n = m.shape[0]
    col = m.sum(axis=1) / n
    tot = col.sum() / n
    out = m - col[:, None] - col[None, :] + tot
    return (out + out.T) / 2.0


def _symmetrize_from_upper(rng, n, off_std, diag_std):
    a = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    a[iu] = rng.standard_normal(len(iu[0])) * off_std
    a = a + a.T
    a[np.diag_indices(n)] = rng.standard_normal(n) * diag_std
    return a


def _haar(rng, n):
    g = rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))[None, :]


def hadamard_matrix(n):
    h = np.array([[1.0]])
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]]) / np.sqrt(2.0)
    return h


def dst_matrix(n):
    i = np.arange(1, n + 1)
    return np.sqrt(2.0 / (n + 1)) * np.sin(np.pi * np.outer(i, i) / (n + 1))


def dct_matrix(n):
    i = np.arange(1, n + 1) - 0.5
    return np.sqrt(2.0 / n) * np.cos(np.pi * np.outer(i, i) / n)


def generate(spec, stream=0):
    """Sample (or construct) a matrix for the spec; deterministic in (spec, stream)."""
    rng = stream_rng(spec.seed, stream)
    n = spec.n
    kind = spec.kind
    if kind == "goe":
        m = _symmetrize_from_upper(rng, n, np.sqrt(1.0 / n), np.sqrt(2.0 / n))
    elif kind == "wigner":
        if spec.entry_law == "normal":
            draw = lambda size: rng.standard_normal(size)
        elif spec.entry_law == "rademacher":
            draw = lambda size: rng.integers(0, 2, size=size) * 2.0 - 1.0
        else:
            raise ValueError("unknown entry law %r" % spec.entry_law)
        a = np.zeros((n, n))
        iu = np.triu_indices(n)
        a[iu] = draw(len(iu[0])) / np.sqrt(n)
        m = np.triu(a, 1) + a.T
    elif kind == "haar_orthogonal":
        # raw Haar draw; orthogonal but not symmetric (building block for
        # rom / orth_invariant, which conjugate it into symmetric matrices)
        m = _haar(rng, n)
    elif kind == "rom":
        q = _haar(rng, n)
        d = rng.integers(0, 2, size=n) * 2.0 - 1.0
        m = (q * d[None, :]) @ q.T
        m = (m + m.T) / 2.0
    elif kind == "r_rom":
        inner = generate(EnsembleSpec("rom", n, spec.seed), stream)
        m = puncture(inner.values)
    elif kind == "hadamard":
        m = hadamard_matrix(n)
    elif kind == "dst":
        m = dst_matrix(n)
    elif kind == "dct":
        m = dct_matrix(n)
    elif kind == "punctured":
        inner = generate(EnsembleSpec(spec.inner, n, spec.seed,
                                      entry_law=spec.entry_law,
                                      eigenvalues=spec.eigenvalues), stream)
        m = puncture(inner.values)
    elif kind == "block_goe":
        m = _block_goe(rng, n, spec.q, spec.sigma_matrix())
    elif kind == "community":
        m = _community(rng, n, spec.q, spec.inner or "rom")
    elif kind == "orth_invariant":
        q = _haar(rng, n)
        lam = _eigen_sample(rng, n, spec.eigenvalues or "rademacher")
        m = (q * lam[None, :]) @ q.T
        m = (m + m.T) / 2.0
    else:  # pragma: no cover
        raise AssertionError(kind)
    return GeneratedMatrix(m, spec, (spec.seed, stream))


def _eigen_sample(rng, n, name):
    if name == "rademacher":
        return rng.integers(0, 2, size=n) * 2.0 - 1.0
    if name == "uniform":
        return rng.uniform(-1.0, 1.0, size=n)
    if name == "semicircle":
        # accept-reject against the semicircle density on [-2, 2]
        out = np.empty(n)
        have = 0
        while have < n:
            x = rng.uniform(-2.0, 2.0, size=2 * (n - have))
            u = rng.uniform(0.0, 1.0, size=2 * (n - have))
            keep = x[u < np.sqrt(4.0 - x ** 2) / 2.0]
            take = min(len(keep), n - have)
            out[have:have + take] = keep[:take]
            have += take
        return out
    raise ValueError("unknown eigenvalue sampler %r" % name)


def _block_goe(rng, n, q, sigma):
    m = np.zeros((n, n))
    b = n // q
    for r in range(q):
        for c in range(r, q):
            # blocks are themselves symmetric; the (c, r) block repeats (r, c)
            blk = _symmetrize_from_upper(rng, b, np.sqrt(sigma[r, c] / n),
                                         np.sqrt(2.0 * sigma[r, c] / n))
            m[r * b:(r + 1) * b, c * b:(c + 1) * b] = blk
            if c != r:
                m[c * b:(c + 1) * b, r * b:(r + 1) * b] = blk
    return m


def _community(rng, n, q, inner):
    """One distinguished diagonal block with block-scale kappa_2 = 1/q, all
    other blocks GOE with entry variance 1/n."""
    m = np.zeros((n, n))
    b = n // q
    scale = 1.0 / np.sqrt(q)
    if inner == "rom":
        qq = _haar(rng, b)
        d = rng.integers(0, 2, size=b) * 2.0 - 1.0
        blk = (qq * d[None, :]) @ qq.T
        blk = (blk + blk.T) / 2.0 * scale
    elif inner == "goe":
        blk = _symmetrize_from_upper(rng, b, np.sqrt(1.0 / b), np.sqrt(2.0 / b)) * scale
    else:
        raise ValueError("unknown community inner kind %r" % inner)
    m[:b, :b] = blk
    for r in range(q):
        for c in range(r, q):
            if r == 0 and c == 0:
                continue
            blk = _symmetrize_from_upper(rng, b, np.sqrt(1.0 / n), np.sqrt(2.0 / n))
            m[r * b:(r + 1) * b, c * b:(c + 1) * b] = blk
            if c != r:
                m[c * b:(c + 1) * b, r * b:(r + 1) * b] = blk
    return m


def block_labels(n, q):
    return np.repeat(np.arange(q), n // q)


def community_kappa_table(q, inner="rom", length=8):
    """Block-scale cumulant table of the community model's distinguished block."""
    from .freeprob import named_table, CumulantTable
    base = named_table(inner if inner in ("rom", "goe") else "rom", length)
    vals = tuple(v / q ** (k / 2.0) for k, v in zip(range(1, length + 1), base.values))
    return CumulantTable(vals, "cumulants")


def operator_norm(m, iters=200, tol=1e-10, seed=0):
    """Spectral norm by power iteration on the symmetric matrix."""
    rng = stream_rng(seed, 987654321)
    v = rng.standard_normal(m.shape[0])
    v /= np.linalg.norm(v)
    last = 0.0
    for _ in range(iters):
        w = m @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        v = w / norm
        if abs(norm - last) < tol * max(1.0, norm):
            break
        last = norm
    return float(norm)


def delocalization_audit(m, diagram_set, budget=None):
    """Delocalization report for one matrix: spectral norm, max off-diagonal
    open-cactus entry per diagram, and the centered cactus-vector norms.

    Each entry of diagram_set must be an open cactus (two roots).  The rooted
    cactus check uses the diagram obtained by merging the two roots.
    """
    m = np.asarray(m, dtype=np.float64)
    n = m.shape[0]
    report = {"n": n, "norm": operator_norm(m), "diagrams": []}
    for d in diagram_set:
        w = graphpoly.eval_open_cactus_matrix(d, m, budget=budget)
        off = w - np.diag(np.diag(w))
        maxoff = float(np.max(np.abs(off)))
        diag = np.diag(w).copy()
        centered = diag - diag.mean()
        report["diagrams"].append({
            "diagram": str(d),
            "max_offdiag": maxoff,
            "centered_vec_norm": float(np.linalg.norm(centered) / np.sqrt(n)),
        })
    return report
