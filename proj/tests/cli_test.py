"""End-to-end checks of the elhom command-line tool: exit codes, report
contents, config handling and byte-identical reruns."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

EXE = sys.argv[1]
failures = []


def run(*args, cwd):
    return subprocess.run([EXE, *args], cwd=cwd, capture_output=True, text=True)


def check(name, cond, detail=""):
    print(("ok   " if cond else "FAIL ") + name + ("" if cond else "  " + detail))
    if not cond:
        failures.append(name)


with tempfile.TemporaryDirectory() as tmp:
    d = Path(tmp)

    r = run("validate", "--density", "layered", "--alpha", "0.5", "-o", "v", cwd=d)
    rep = json.loads((d / "v/validate.json").read_text())
    check("validate layered passes", r.returncode == 0 and rep["result"]["all_pass"], r.stderr)
    check("report schema", rep["schema"] == 1 and rep["config"]["density"]["alpha"] == 0.5)

    r = run("validate", "--density", "prestressed_perforated", "--samples", "50", "-o", "v2", cwd=d)
    check("validate perforated exits 2", r.returncode == 2, str(r.returncode))

    r = run("homogenize", "--density", "layered", "--alpha", "1", "--F", "id", "--res", "4", "-o", "h", cwd=d)
    rep = json.loads((d / "h/homogenize.json").read_text())
    check("homogenize identity is zero", r.returncode == 0 and rep["result"]["energy"] == 0.0, r.stderr)

    r = run("expand", "--density", "stvk", "--G", "e1e1", "--k", "1", "--h", "0.1,0.05,0.025", "--res", "4", "-o", "e", cwd=d)
    rows = (d / "e/expand.csv").read_text().splitlines()
    res = [float(x.split(",")[3]) for x in rows[1:]]
    check("expand csv header", rows[0] == "h,k,energy,residual")
    check("expand residuals decrease", r.returncode == 0 and res[0] > res[1] > res[2], str(res))

    r = run("quad-homogenize", "--density", "layered", "--base", "stvk", "--alpha", "0.5", "--G", "e1e1", "--res", "8", "-o", "q", cwd=d)
    rep = json.loads((d / "q/quad-homogenize.json").read_text())
    check("quad-homogenize laminate value", r.returncode == 0 and abs(rep["result"]["q_hom"] - 0.75) < 1e-8)

    r = run("expand", "--density", "stvk", "--G", "e1e1", "--h", "0.05,0.1", cwd=d)
    check("increasing h is a validation failure", r.returncode == 2, str(r.returncode))
    r = run("homogenize", "--density", "stvk", "--F", "1,2,3", cwd=d)
    check("bad matrix is a validation failure", r.returncode == 2, str(r.returncode))
    r = run("expand", "--G", "e1e1", "--no-such-flag", cwd=d)
    check("unknown flag exits 64", r.returncode == 64, str(r.returncode))
    r = run("frobnicate", cwd=d)
    check("unknown command exits 64", r.returncode == 64, str(r.returncode))

    (d / "bad.ini").write_text("[expand]\nresolution = 8\n")
    r = run("--config", "bad.ini", "expand", "--G", "e1e1", cwd=d)
    check("unknown config key exits 65", r.returncode == 65, str(r.returncode))
    r = run("--config", "missing.ini", "validate", cwd=d)
    check("missing config exits 65", r.returncode == 65, str(r.returncode))

    (d / "run.ini").write_text("seed = 4\n[expand]\nres = 4\nG = e1e1\nk = 1\n[homogenize]\nk = 1,2\n")
    r = run("--config", "run.ini", "expand", "--density", "layered", "--k", "2", "-o", "c", cwd=d)
    rep = json.loads((d / "c/expand.json").read_text())
    cfg = rep["config"]
    check("config file values used", r.returncode == 0 and cfg["res"] == 4 and cfg["seed"] == 4, r.stderr)
    check("flags override config file", cfg["k"] == 2)

    r = run("splitting", "--F", "id", "--F", "1.02,0,0,0,1,0.03,0,0,1", "--res", "8", "-o", "s", cwd=d)
    rep = json.loads((d / "s/splitting.json").read_text())
    check("splitting identity within bound", r.returncode == 0 and rep["result"]["all_pass"] and len(rep["result"]["rows"]) == 2, r.stderr)

    args = ["counterexample2", "--density", "layered", "--base", "stvk", "--G", "e1e1", "--k", "1,2", "--res", "4", "--seed", "9"]
    r1 = run(*args, "-o", "d1", cwd=d)
    r2 = run(*args, "-o", "d2", cwd=d)
    a = (d / "d1/counterexample2.json").read_bytes()
    b = (d / "d2/counterexample2.json").read_bytes()
    check("reruns are byte-identical", r1.returncode == 0 and r2.returncode == 0 and a == b)
    check("csv reruns are byte-identical", (d / "d1/counterexample2.csv").read_bytes() == (d / "d2/counterexample2.csv").read_bytes())
    check("layered probe commutes", json.loads(a)["result"]["verdict"] == "commutes")

sys.exit(1 if failures else 0)
