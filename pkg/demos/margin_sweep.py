"""MAP as a function of the angular margin, through the command-line entry point.

Writes runs/demo_sweep/sweep.csv next to a manifest.json of the resolved config.
"""

from pathlib import Path

from atcl.cli import main

out = Path("runs/demo_sweep")
main(["sweep", "--out", str(out), "--axis", "margin", "--values", "0.1,0.4,0.7,1.0,1.4"])
print((out / "sweep.csv").read_text())
