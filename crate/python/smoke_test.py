"""Build the extension module and exercise it from Python."""

import math
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build():
    subprocess.run(
        ["cargo", "build", "--release", "-p", "tracest-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "libtracest.so"
    dest = pathlib.Path(tempfile.mkdtemp()) / "tracest.so"
    shutil.copy(lib, dest)
    sys.path.insert(0, str(dest.parent))


def main():
    build()
    import tracest

    assert tracest.hutchinson_bound(0.05, 0.05) == 8854
    assert tracest.gaussian_bound(0.05, 0.05) == 11805
    assert tracest.projection_rank_samples(10, 0.1) == 240
    assert tracest.gaussian_necessary(1, 0.02, 0.02) == 27054

    for a, x in [(0.5, 0.3), (2.5, 2.5), (500.0, 480.0)]:
        p, q = tracest.reg_gamma_p(a, x), tracest.reg_gamma_q(a, x)
        assert abs(p + q - 1.0) < 1e-12
    assert abs(tracest.reg_gamma_p(0.5, 0.25) - math.erf(0.5)) < 1e-12

    op = tracest.Operator.generate("gram-gaussian:n=60,m=8", seed=3)
    assert op.dim == 60
    tr = op.trace()
    assert abs(sum(op.diagonal()) - tr) < 1e-12
    est = tracest.estimate_trace(op, "gaussian", 2000, seed=1)
    assert abs(est - tr) < 0.1 * tr, (est, tr)
    assert abs(tracest.estimate_trace(op, "unit-noreplace", 60) - tr) < 1e-9 * tr

    diag = op.diagnostics(materialize=True)
    assert diag["n"] == 60 and diag["k_h"] is not None and 0 < diag["k_g"] <= 1

    rec = tracest.success_probability(op, "gaussian", 400, 0.2, 0.2, trials=200, seed=7)
    assert 0.0 <= rec["success_prob"] <= 1.0 and rec["trials"] == 200
    n_star = tracest.min_sample_size(op, "gaussian", 0.2, 0.2, trials=200, seed=7, n_max=2000)
    assert n_star is not None and n_star >= 1

    report = tracest.bound_report(0.1, 0.1, k_u=1.5, n=100)
    assert report["unit_noreplace"] <= report["unit"]

    try:
        tracest.hutchinson_bound(1.5, 0.1)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid tolerance accepted")
    print("python smoke test passed")


if __name__ == "__main__":
    main()
