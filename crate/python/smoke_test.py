"""Smoke test for the ptsym_py extension module.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`.
"""

import cmath

import ptsym_py as pt


def main():
    assert pt.classify_orbit("2n,2m,2k+1") == "T1, T2"
    assert pt.classify_orbit("2n+1,2n+1,2n+1", group="Oh") == "A2u"
    assert pt.branch("Eg") == "E"

    e = pt.quartic_1d_eigenvalues(40, 3)
    assert abs(e[0] - 1.0603620904841829) < 1e-8, e

    block = pt.Block("harmonic", 6, "A1")
    assert block.dim == 9
    values = block.eigenvalues(0.0)
    assert abs(values[0] - 3.0) < 1e-12
    # Conjugate pairs: the spectrum equals its own conjugate.
    values = block.eigenvalues(0.8)
    for v in values:
        assert min(abs(v.conjugate() - w) for w in values) < 1e-9

    assert block.dump(0.5).startswith("# irrep=A1 g=0.5 n=9")
    assert pt.oracle_deviation("harmonic", 4, 0.3) < 1e-8

    points = pt.Block("harmonic", 8, "T2").scan(steps=50)
    assert points and all(0.0 < p.g_c <= 1.0 for p in points)
    low = min(points, key=lambda p: p.g_c)
    print(f"ptsym_py {pt.__version__}: {len(points)} T2 exceptional points, lowest {low}")
    print(f"trusted window at limit 8: E <= {pt.trusted_energy('harmonic', 8)}")
    assert not cmath.isnan(low.e_c)
    print("ok")


if __name__ == "__main__":
    main()
