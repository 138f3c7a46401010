"""
Running experiments from the command line
=========================================

Every capability is reachable through ``python -m chargedwall``.  A run
writes CSV tables, a JSON summary, SVG plots and the resolved configuration
into ``--out``.  Exit code 0 means success, 2 a configuration problem and 3
a numerical failure (with the path of the saved state).  This script drives
the same entry point in-process and converts physical film data to the
dimensionless parameters first.
"""
import os
import tempfile

from chargedwall.cli import run
from chargedwall.units import thickness_for_lambda, to_dimensionless

p = to_dimensionless(d=5e-9, w=1e-6, t=2e-8, Q=1.0)
print(f"film: eps = {p.epsilon:g}, lambda = {p.lam:.3f}, aspect ratio {p.alpha:g}")
print(f"thickness for lambda = 4: {thickness_for_lambda(4.0, 5e-9, 1e-6, 1.0) * 1e9:.1f} nm")

out = tempfile.mkdtemp(prefix="chargedwall_")
cfg = os.path.join(out, "run.cfg")
with open(cfg, "w") as fh:
    fh.write("# line-energy table\nmode = limit\nell = 1.5\nlam_step = 0.5\n")

code = run(["--config", cfg, "--out", os.path.join(out, "limit")])
print("exit code", code)
print(open(os.path.join(out, "limit", "limit.csv")).read())

# %%
# A bad value is reported, nothing is computed.
print("exit code", run(["--mode", "energy", "--epsilon", "0.5", "--out", os.path.join(out, "bad")]))

# %%
# The oracle check on a small grid.
code = run(["--mode", "oracle-check", "--set", "oracle_count=3", "--set", "oracle_n=32",
            "--out", os.path.join(out, "oracle")])
print("exit code", code, sorted(os.listdir(os.path.join(out, "oracle"))))
