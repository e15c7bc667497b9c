"""
The command line, end to end
============================

Writes a synthetic dataset to TSV files and drives every subcommand the
way a shell user would, inside a temporary directory.
"""

import tempfile
from pathlib import Path

from dyernie.cli import main
from dyernie.synthetic import hierarchy_dataset

work = Path(tempfile.mkdtemp(prefix="dyernie-demo-"))
paths = hierarchy_dataset(seed=0).to_tsv(work / "data")
data = [f"--{k}={v}" for k, v in paths.items()]
out = str(work / "run")


def sh(*argv):
    print("\n$ dyernie", " ".join(a.replace(str(work) + "/", "") for a in argv))
    code = main(list(argv))
    print(f"(exit {code})")


sh("estimate-curvature", "--train", str(paths["train"]), "--out", out, "--n-iter", "100")
sh("propose-signature", "--histogram", f"{out}/curvature.csv", "--dim", "10")
sh("train", *data, "--out", out, "--signature", "P10@-1", "--max-epochs", "20",
   "--validate-every", "10", "--deterministic")
sh("evaluate", *data, "--checkpoint", f"{out}/checkpoint", "--out", out)
# e0 is the root; its seven children e1..e7 should fill the top of the list.
# The default triple filter would drop them, since they are known facts.
sh("predict", *data, "--checkpoint", f"{out}/checkpoint", "--query", "e0,parent_of,?,0", "--topk", "8",
   "--filter", "raw")
sh("export", *data, "--checkpoint", f"{out}/checkpoint", "--out", out, "--kind", "velocity-norms")
sh("fd-check", "--signature", "P3@-1,S2@1,E2@0", "--max-coords", "30")
print("\noutputs in", work)
