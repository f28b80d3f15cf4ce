"""Smoke test for the broadcast_nonlocality extension module.

Build and install it first:
    pip install -e crates/python --no-build-isolation
"""

import math
import pathlib
import sys

import broadcast_nonlocality as bn

ROOT = pathlib.Path(__file__).resolve().parent.parent
failures = []


def check(name, ok, detail=""):
    print(f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
    if not ok:
        failures.append(name)


v = bn.vertices([2, 2])
check("ns vertices (2,2)", v["count"] == 24 and v["local"] == 16, f"{v['count']}/{v['local']}")

b = bn.analytic_behaviour("chsh")
chsh = bn.evaluate("chsh", b["table"])
check("chsh on phi+", abs(chsh - 2 * math.sqrt(2)) < 1e-10, f"{chsh:.12f}")

value, exact = bn.bound_in_model("i3_broadcast", "broadcast_three")
check("i3 bound", exact == "4" or exact == "4/1", exact)

ent = bn.analytic_behaviour("i3_paper", alpha=1.0)
noise = bn.analytic_behaviour("i3_paper", alpha=0.0)
r = bn.critical_visibility(ent["table"], noise["table"], "broadcast_three", ent["inputs"], exact=True)
check("i3 visibility", abs(r["v_star"] - 1 / math.sqrt(3)) < 1e-6, f"{r['v_star']:.9f} exact={r['exact_confirmed']}")

m = bn.membership(ent["table"], "broadcast_three", ent["inputs"])
check("i3_paper outside the model", m["feasible"] is False)

r = bn.scenario_visibility(str(ROOT / "scenarios" / "chsh.scn"))
check("chsh scenario file", abs(r["v_star"] - 1 / math.sqrt(2)) < 1e-7, f"{r['v_star']:.9f}")

s = bn.seesaw("chsh", "chsh", restarts=5, seed=1)
check("seesaw chsh", abs(s["best_value"] - 2 * math.sqrt(2)) < 1e-6, f"{s['best_value']:.9f}")

rows = bn.fig2(steps=1)
check("fig2 at pi/4", abs(rows[-1]["v_broadcast"] - 1 / math.sqrt(3)) < 2e-3, f"{rows[-1]['v_broadcast']:.9f}")

try:
    bn.vertices([2, 2], kind="bogus")
    check("bad kind raises", False)
except ValueError:
    check("bad kind raises", True)

sys.exit(1 if failures else 0)
