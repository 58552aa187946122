"""Smoke test for the locsol extension module.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

from fractions import Fraction

import locsol


def main():
    assert locsol.veronese_dimension(3, 3) == 10
    assert locsol.c_nd(3, 3, 1, 2) == Fraction(9, 10)
    assert locsol.regime_report(4, 3)["admissible_k"] == [2, 3]

    f = locsol.Form(3, 2, [1, 0, 0, 1, 0, 1])
    v = f.zp_solubility(2)
    assert v["verdict"] == "insoluble", v
    assert f.zp_solubility(3)["alpha"] == 0
    assert f.real_solubility()["method"] == "definiteness"
    assert f.evaluate([1, 2, 3]) == 14

    g = locsol.Form(2, 2, [1, 0, -1])
    assert g.real_solubility(seed=1)["verdict"] == "soluble"
    assert g.classify(10)["verdict"] == "soluble"

    p = locsol.ThinForm("1 1 1 0 0\n-1 0 0 1 1\n")
    assert p.n_vars == 4 and p.k == 2
    assert p.count(2, primitive=False) == 129
    assert p.count(2) == 96
    assert len(p.points(2)) == 96
    assert all(p.evaluate(a) == 0 for a in p.sample(50, 20, 7))
    assert locsol.sigma_p_level(p, 3, 1) == Fraction(11, 9)

    cert = locsol.positivity_probe(p, 2, 3, [1, 0, 0, 1], height=3, p_max=7, seed=5)
    assert cert["status"] == "certificate", cert

    conic = locsol.ThinForm("1 2 0 0\n1 0 2 0\n-2 0 0 2\n")
    r = locsol.rho_estimate(conic, 2, 2, 20, 20, seed=1)
    assert r["soluble"] + r["insoluble"] + r["unknown"] == r["total"] > 0
    print("ok", r)


if __name__ == "__main__":
    main()
