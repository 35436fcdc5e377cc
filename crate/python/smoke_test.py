"""Smoke test for the agrisc Python extension.

Build and stage the module first:

    cargo build -p agrisc-py --release --features extension-module
    cp target/release/libagrisc_py.so python/agrisc.so

then run `python3 python/smoke_test.py`.
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import agrisc  # noqa: E402


def main():
    inst = agrisc.Instance.case_study()
    print(inst)
    assert (inst.days, inst.weeks, inst.scenarios) == (14, 2, 3)
    assert abs(inst.loss_bound(0) - 17.5) < 1e-12

    rho = inst.probabilities
    loss = [[5.0, 0.0, 5.0], [0.0, 0.0, 0.0]]
    v = agrisc.variance(loss, rho)
    assert v == 1.59375, v
    assert abs(agrisc.variance_direct(loss, rho) - v) <= 1e-12 * v

    grad = agrisc.gradient(loss, rho)
    h = 1e-6
    bumped = [[5.0 + h, 0.0, 5.0], [0.0, 0.0, 0.0]]
    lowered = [[5.0 - h, 0.0, 5.0], [0.0, 0.0, 0.0]]
    fd = (agrisc.variance(bumped, rho) - agrisc.variance(lowered, rho)) / (2 * h)
    assert math.isclose(grad[0], fd, rel_tol=1e-6), (grad[0], fd)

    big = [[50.0, 0.0, 50.0], [0.0, 0.0, 0.0]]
    cut = agrisc.cut(big, rho, 25.0)
    assert abs(cut["lhs_at_point"] - (agrisc.variance(big, rho) - 25.0)) < 1e-9

    census = inst.census()
    assert census["stats"]["binary"] == 1010
    print("census:", {c["quantity"]: c["ours"] for c in census["comparisons"]})

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "model.mps")
        inst.export(path, "mps")
        assert os.path.getsize(path) > 0

    micro = agrisc.Instance.from_path(
        os.path.join(os.path.dirname(__file__), "..", "crates", "core", "data", "micro_single_batch.toml")
    )
    out = micro.solve("perspective", time_limit=60.0, gap=0.0)
    run = out["run"]
    assert run["outcome"] == "verified", run["outcome"]
    assert abs(run["objective"] - 885.0) < 1e-6, run["objective"]
    print("micro objective:", run["objective"], "variance:", run["variance"])
    print("smoke test passed")


if __name__ == "__main__":
    main()
