"""Smoke test for the `inls` extension module.

Build first:
    cargo build --release -p inls-py --features extension-module
then run `python3 python/smoke_test.py`. The script imports an installed
`inls` if present, otherwise the freshly built library from target/release.
"""

import json
import math
import pathlib
import shutil
import sys
import tempfile


def load():
    try:
        import inls  # noqa: F401
    except ImportError:
        root = pathlib.Path(__file__).resolve().parent.parent
        for name in ("libinls.so", "libinls.dylib", "inls.dll"):
            lib = root / "target" / "release" / name
            if lib.exists():
                break
        else:
            sys.exit("inls extension not found; build it with the command in the docstring")
        tmp = pathlib.Path(tempfile.mkdtemp())
        shutil.copy(lib, tmp / ("inls.pyd" if name.endswith(".dll") else "inls.so"))
        sys.path.insert(0, str(tmp))
    import inls

    return inls


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    inls = load()

    grid = inls.Grid(40.0, 1024)
    assert grid.point_count == 1024 and close(grid.spacing, 80.0 / 1024, 1e-15)
    assert min(abs(x) for x in grid.nodes()) > 0.0

    # Free Gaussian: |u(t)|_inf = (1 + 16 t^2)^(-1/4).
    free = inls.Model(1.0, 0.5, k="zero")
    u0 = inls.State.initial(grid, "gaussian", width=1.0)
    traj = inls.evolve(u0, free, 1e-3, 1.0, stride=100)
    assert len(traj) == 11
    assert close(traj.final_state().max_modulus(), 17 ** -0.25, 1e-3)

    # K1 dynamics with odd data conserve mass and stay odd.
    model = inls.Model(1.0, 0.5, k="K1_pure")
    odd = inls.State.initial(grid).scale_to_h1(0.5)
    assert close(odd.h1_norm(), 0.5, 1e-12)
    traj = inls.evolve(odd, model, 1e-3, 1.0, stride=50, enforce_odd=True)
    m = traj.mass
    assert max(abs(x - m[0]) for x in m) < 1e-10 * m[0]
    assert traj.final_state().even_part() < 1e-10
    assert traj.to_csv().startswith("t,mass,energy,I,")

    # Weak coupling: one even bound state near -(mu sqrt(pi) / 2)^2.
    big = inls.Grid(2048.0, 65536)
    mu = 0.01
    well = [-math.exp(-x * x) for x in big.nodes()]
    r = inls.lowest_eigenvalue(well, mu, big)
    exact = -((mu * math.sqrt(math.pi) / 2) ** 2)
    assert r.negative_count == 1 and r.ground_state_parity == "even"
    assert abs(r.lowest_eigenvalue / exact - 1) < 0.1

    y = inls.Potential.yukawa(0.5, 1.0)
    reports = inls.simon_klaus(y, [0.01], inls.Grid(512.0, 8192))
    assert reports[0].negative_count == 1

    c = inls.coercivity(inls.Grid(20.0, 2048), "B_V", y, 0.01, samples=10)
    assert c.evaluated == 10 and c.coercive() and c.min_j >= -1e-10

    try:
        inls.Model(1.0, 1.5)
    except ValueError as e:
        assert "b" in str(e)
    else:
        raise AssertionError("b outside (0, 1) accepted")

    with tempfile.TemporaryDirectory() as d:
        cfg = pathlib.Path(d) / "run.json"
        cfg.write_text(json.dumps({
            "grid": {"L": 20, "N": 512},
            "model": {"sigma": 1, "b": 0.5, "K": "K1_pure"},
            "solver": {"dt": 0.01, "T": 1, "enforce_odd": True, "observer_stride": 10},
            "scenario": {"theorem": "thm_odd_case1"},
        }))
        report = json.loads(inls.run_config(str(cfg)))
        assert report["valid"] and report["theorem"] == "thm_odd_case1"

    print("inls smoke test passed")


if __name__ == "__main__":
    main()
