#!/usr/bin/env python3
"""Smoke test for the nilric_py extension module.

Builds are produced with `cargo build -p nilric-py --release`; this script
locates the resulting cdylib, stages it under an importable name and runs a
handful of end-to-end checks.
"""

import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def stage_module() -> pathlib.Path:
    candidates = [
        ROOT / "target" / "release" / "libnilric_py.so",
        ROOT / "target" / "debug" / "libnilric_py.so",
        ROOT / "target" / "release" / "libnilric_py.dylib",
        ROOT / "target" / "debug" / "libnilric_py.dylib",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit(
            "nilric_py cdylib not found; run `cargo build -p nilric-py --release` first"
        )
    stage = pathlib.Path(tempfile.mkdtemp(prefix="nilric-py-"))
    shutil.copy(built, stage / "nilric_py.so")
    return stage


CHECKS = 0


def check(name: str, condition: bool) -> None:
    global CHECKS
    CHECKS += 1
    if not condition:
        sys.exit(f"FAIL {name}")
    print(f"PASS {name}")


def main() -> None:
    sys.path.insert(0, str(stage_module()))
    import nilric_py as np_mod

    names = np_mod.catalog_names()
    check("catalog contains the reference algebras",
          {"L_5_3", "heisenberg_3", "free_2step_3gen", "filiform_4"} <= set(names))

    h3 = np_mod.StructureTensor.builtin("heisenberg_3")
    ric = h3.ricci()
    check("heisenberg_3 Ricci is diag(-1/2, -1/2, 1/2)",
          abs(ric[0][0] + 0.5) < 1e-14
          and abs(ric[1][1] + 0.5) < 1e-14
          and abs(ric[2][2] - 0.5) < 1e-14
          and abs(ric[0][1]) < 1e-14)
    check("heisenberg_3 signature", h3.ricci_signature() == (2, 0, 1))

    l53 = np_mod.StructureTensor.builtin("L_5_3")
    check("L_5_3 profile", l53.profile() == (2, 1, 1, 1))
    check("L_5_3 central series", l53.central_series_dims() == [5, 2, 1, 0])
    check("L_5_3 derivation algebra dimension", l53.derivation_dim() == 11)

    attainable = set(l53.attainable_signatures())
    conjectured = set(l53.conjectured_signatures())
    check("attainable set has 4 triples", len(attainable) == 4)
    check("counterexample triple excluded", (4, 0, 1) not in attainable)
    check("counterexample triple in the weaker set", (4, 0, 1) in conjectured)

    out = np_mod.realize_signature(l53, (3, 0, 2))
    check("realization achieves the target", out.achieved == (3, 0, 2))
    check("realization eigenvalue gap", out.eigen_gap >= 10.0)
    check("realized frame reproduces the signature",
          l53.ricci_signature(out.frame) == (3, 0, 2))

    try:
        np_mod.realize_signature(l53, (4, 0, 1))
        check("unattainable target rejected", False)
    except ValueError:
        check("unattainable target rejected", True)

    flow = np_mod.orbit_flow(l53)
    check("orbit flow converges", flow.converged)
    check("orbit flow kernel", flow.kernel_verified)
    check("orbit flow signature", flow.signature == (2, 2, 1))

    counts, violations = np_mod.sample_signatures(l53, 200, 1)
    check("sampled signatures stay attainable", violations == 0)
    check("sampling observed at least one signature", len(counts) >= 1)

    scaled = h3.act([[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    check("frame action rescales the bracket",
          abs(scaled.coefficient(0, 1, 2) - 0.5) < 1e-14)

    roundtrip = np_mod.StructureTensor.from_text(l53.to_text())
    check("text round-trip", roundtrip.profile() == (2, 1, 1, 1))

    check("matrix signature helper",
          np_mod.matrix_signature([[-1.0, 0.0], [0.0, 3.0]]) == (1, 0, 1))

    print(f"OK: {CHECKS} checks passed")


if __name__ == "__main__":
    main()
