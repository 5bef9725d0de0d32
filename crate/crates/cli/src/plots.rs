//! Plotting-script templates written next to sweep outputs.

pub const SUPPORT_SCRIPT: &str = r#"# Atom locations and masses per parameter value, from support.csv.
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "support.csv"
rows = defaultdict(list)
with open(path) as f:
    for r in csv.DictReader(f):
        rows[int(r["parameter"])].append((float(r["location"]), float(r["mass"])))

fig, ax = plt.subplots(figsize=(7, 4))
for k, atoms in sorted(rows.items()):
    xs = [x for x, _ in atoms]
    ws = [300 * w for _, w in atoms]
    ax.scatter(xs, [k] * len(xs), s=ws, alpha=0.7)
ax.set_xlabel("atom location")
ax.set_ylabel("parameter")
fig.tight_layout()
fig.savefig("support.png", dpi=150)
"#;

pub const PMF_SCRIPT: &str = r#"# Cumulative mass of each prior, from pmf.csv.
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "pmf.csv"
rows = defaultdict(list)
with open(path) as f:
    for r in csv.DictReader(f):
        rows[int(r["parameter"])].append((float(r["location"]), float(r["cumulative_mass"])))

fig, ax = plt.subplots(figsize=(7, 4))
for k, pts in sorted(rows.items()):
    xs = [x for x, _ in pts]
    cs = [c for _, c in pts]
    ax.step([xs[0]] + xs, [0.0] + cs, where="post", label=str(k))
ax.set_xlabel("x")
ax.set_ylabel("cumulative mass")
ax.legend(title="parameter", fontsize="small")
fig.tight_layout()
fig.savefig("pmf.png", dpi=150)
"#;
