"""Quick end-to-end check of the dtrecon_py bindings."""

import dtrecon_py as dt

LOOSE = {"c_d": 1e-3, "c_p": 10.0, "c_tau": 100.0, "c_leaf": 0.1}


def main():
    t = dt.Tree.parse("(x1 (x2 L -1 L +1) L +1)").with_dimension(6)
    assert (t.size(), t.depth(), t.n) == (3, 2, 6)
    f = t.as_function()
    assert f([-1, 1, -1, -1, -1, -1]) == t.evaluate([-1, 1, -1, -1, -1, -1])

    d = dt.Function.dictator(6, 0)
    exact = dt.exact_scores(d, 0.5)
    assert abs(exact[0] - 0.25) < 1e-12 and max(abs(v) for v in exact[1:]) < 1e-12
    est = dt.estimate_scores(d, 0.5, 0.05, 0.1, seed=1)
    assert abs(est[0] - 0.25) < 0.05

    g = f.corrupted(0.0, 7)
    assert dt.exact_distance(f, g) == 0.0
    opt, witness = dt.exact_opt(dt.Function.parity(4, [0, 1]), 4)
    assert opt == 0.0 and witness.size() <= 4

    r = dt.Reconstructor(d, 2, 0.25, 0.1, seed=5, constants=LOOSE)
    x = [1, -1, 1, 1, -1, 1]
    assert r.answer(x) == d(x)
    assert r.answer([-v for v in x]) == -d(x)
    total, worst = r.query_stats()
    assert total > 0 and 0 < worst <= total
    assert dt.exact_distance(r.materialize().as_function(), d) == 0.0

    out = dt.tolerant_test(d, 2, 0.2, 0.1, kappa=2.0, seed=3, constants=LOOSE)
    assert out["verdict"] == "accept", out

    learned = dt.learn(f, 3, 0.1)
    assert dt.exact_distance(learned.as_function(), f) <= 0.1

    try:
        dt.Function.dictator(4, 9)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")
    print("smoke test ok")


if __name__ == "__main__":
    main()
