import numpy as np
import pytest

from trafficamp import graphpoly as gp
from trafficamp import matrixio
from trafficamp.diagrams import (CATALOG, Diagram, DiagramError,
                                 enumerate_connected_multigraphs, graft)


def _rand_sym(rng, n):
    a = rng.standard_normal((n, n))
    return (a + a.T) / 2


def _rand_orth_sym(rng, n):
    q = np.linalg.qr(rng.standard_normal((n, n)))[0]
    return q @ np.diag(np.sign(rng.standard_normal(n))) @ q.T


def test_eval_w_trivial():
    assert gp.eval_w(CATALOG["cycle2"], np.eye(3)) == 3.0
    assert gp.eval_w(CATALOG["cycle3"], np.ones((2, 2))) == 8.0
    assert gp.eval_w(Diagram(1), None, n=7) == 7.0
    assert np.allclose(gp.eval_w(Diagram(1, (), (0,)), None, n=7), np.ones(7))


def test_cycle_equals_trace():
    rng = np.random.default_rng(0)
    a = _rand_sym(rng, 6)
    for q in range(2, 7):
        w = gp.eval_w(CATALOG["cycle%d" % q], a)
        tr = np.trace(np.linalg.matrix_power(a, q))
        assert abs(w - tr) < 1e-10 * max(1.0, abs(tr))


def test_engine_matches_brute():
    rng = np.random.default_rng(1)
    cases = 0
    for d in enumerate_connected_multigraphs(4, 4):
        n = int(rng.integers(2, 7))
        a = _rand_sym(rng, n)
        root_opts = [(), (0,)]
        if d.vertex_count >= 2:
            root_opts += [(0, 1), (0, 0)]
        for roots in root_opts:
            dr = d.with_roots(roots)
            w1 = gp.eval_w(dr, a, budget=float("inf"))
            w2 = gp.eval_w_brute(dr, a)
            assert np.allclose(w1, w2, atol=1e-10), dr
            cases += 1
    assert cases >= 150


def test_edge_vector_is_row_sums():
    rng = np.random.default_rng(2)
    a = _rand_sym(rng, 5)
    v = gp.eval_w(CATALOG["edge"].with_roots((0,)), a)
    assert np.allclose(v, a.sum(axis=1))


def test_eval_z():
    rng = np.random.default_rng(3)
    assert gp.eval_z(CATALOG["cycle3"], np.ones((2, 2))) == 0.0
    a = _rand_sym(rng, 5)
    np.fill_diagonal(a, 0.0)
    z = gp.eval_z(CATALOG["cycle2"], a)
    assert abs(z - (a ** 2).sum()) < 1e-10
    for name in ("path2", "cycle3", "theta", "star3", "bowtie"):
        d = CATALOG[name]
        b = _rand_sym(rng, 5)
        assert np.allclose(gp.eval_z(d, b, budget=float("inf")),
                           gp.eval_z_brute(d, b), atol=1e-10)
        dr = d.with_roots((0,))
        assert np.allclose(gp.eval_z(dr, b, budget=float("inf")),
                           gp.eval_z_brute(dr, b), atol=1e-10)


def test_eval_z_per_edge_labels():
    rng = np.random.default_rng(4)
    d = CATALOG["path2"]
    labels = [_rand_sym(rng, 4) for _ in range(d.edge_count)]
    assert np.allclose(gp.eval_z(d, labels, budget=float("inf")),
                       gp.eval_z_brute(d, labels), atol=1e-12)


def test_w_reconstructs_from_z_quotients():
    from trafficamp.diagrams import w_to_z_coefficients
    rng = np.random.default_rng(5)
    a = _rand_sym(rng, 5)
    for name in ("path2", "cycle4", "theta"):
        d = CATALOG[name]
        w = gp.eval_w(d, a, budget=float("inf"))
        s = sum(c * gp.eval_z(q, a, budget=float("inf"))
                for q, c in w_to_z_coefficients(d).items())
        assert abs(w - s) < 1e-9


def test_eval_w_neq():
    rng = np.random.default_rng(6)
    n = 5
    a = _rand_sym(rng, n)
    v = gp.eval_w_neq(CATALOG["path2"], a, 0, 2)
    brute = sum(a[i, j] * a[j, k]
                for i in range(n) for j in range(n) for k in range(n) if i != k)
    assert abs(v - brute) < 1e-9
    with pytest.raises(DiagramError):
        gp.eval_w_neq(CATALOG["path2"], a, 1, 1)
    # s,t adjacent via a loopless edge + zero diagonal: merged term vanishes
    np.fill_diagonal(a, 0.0)
    d = CATALOG["cycle2"]
    assert abs(gp.eval_w_neq(d, a, 0, 1) - gp.eval_w(d, a)) < 1e-10


def test_grafting_hadamard_identity():
    rng = np.random.default_rng(7)
    a = _rand_sym(rng, 6)
    a1 = CATALOG["cycle3"].with_roots((0,))
    a2 = CATALOG["path2"].with_roots((1,))
    g = graft([a1, a2])
    lhs = gp.eval_w(g, a, budget=float("inf"))
    rhs = gp.eval_w(a1, a) * gp.eval_w(a2, a, budget=float("inf"))
    assert np.allclose(lhs, rhs, atol=1e-9)


def test_open_cactus_matrix():
    rng = np.random.default_rng(8)
    h = _rand_orth_sym(rng, 8)
    oc = Diagram(3, ((0, 1), (1, 2)), (0, 2))
    assert np.allclose(gp.eval_open_cactus_matrix(oc, h), h @ h, atol=1e-10)
    oc1 = Diagram(2, ((0, 1),), (0, 1))
    assert np.allclose(gp.eval_open_cactus_matrix(oc1, h), h)
    a = _rand_sym(rng, 8)
    cases = [
        Diagram(5, ((0, 1), (1, 2), (1, 3), (3, 4), (4, 1)), (0, 2)),
        Diagram(4, ((0, 1), (1, 2), (2, 3), (3, 1)), (0, 1)),
        Diagram(6, ((0, 1), (1, 2), (2, 3), (3, 4), (4, 2), (0, 5), (5, 0)), (0, 2)),
    ]
    for oc in cases:
        w1 = gp.eval_open_cactus_matrix(oc, a, budget=float("inf"))
        w2 = gp.eval_w(oc, a, budget=float("inf"))
        assert np.allclose(w1, w2, atol=1e-9), oc
    with pytest.raises(DiagramError):
        gp.eval_open_cactus_matrix(CATALOG["theta"].with_roots((0, 1)), a)


def test_fundamental_bound():
    rng = np.random.default_rng(9)
    h = _rand_orth_sym(rng, 64)
    assert gp.fundamental_bound_audit(CATALOG["cycle2"], h)["ok"]
    assert gp.fundamental_bound_audit(CATALOG["theta"], h)["ok"]
    r = gp.fundamental_bound_audit(CATALOG["cycle4"], np.eye(16))
    assert r["ok"] and abs(r["value"] - 1.0) < 1e-12  # equality at identity
    with pytest.raises(DiagramError):
        gp.fundamental_bound_audit(CATALOG["path2"], h)


def test_budget_errors():
    a = np.zeros((64, 64))
    with pytest.raises(gp.BudgetError):
        gp.eval_w(CATALOG["k4"], a, budget=1000.0)
    with pytest.raises(gp.BudgetError):
        gp.eval_w_brute(CATALOG["k4"], a, budget=1000.0)


def test_matrix_io_roundtrip(tmp_path):
    rng = np.random.default_rng(10)
    m = rng.standard_normal((5, 7))
    p = tmp_path / "m.tamp"
    matrixio.write_matrix(p, m)
    raw = p.read_bytes()
    assert raw[:8] == b"TAMP0001"
    assert int.from_bytes(raw[8:16], "little") == 5
    assert int.from_bytes(raw[16:24], "little") == 7
    assert np.array_equal(matrixio.read_matrix(p), m)
    c = tmp_path / "m.csv"
    matrixio.write_csv(c, m)
    assert np.allclose(matrixio.read_csv(c), m)
