"""Driving everything from a JSON problem file, as the command line does."""
import json
import tempfile
from pathlib import Path

from padic_lipschitz.cli import main

here = Path(__file__).resolve().parent
spec = here / "specs" / "identity_q3.json"

with tempfile.TemporaryDirectory() as out:
    code = main(["run", str(spec), "--format", "text", "--out", out])
    print((Path(out) / "report.txt").read_text())
    print("exit code", code)
    saved = Path(out) / "extension-center.json"
    print("saved center extension has", len(json.loads(saved.read_text())["extensions"]), "member(s)")
    main(["eval", str(spec), "2", "--extension", str(saved)])

# Claiming a constant below the attained ratio fails with a witness pair.
code = main(["run", str(here / "specs" / "center_overclaim_q3.json"), "--format", "text"])
print("exit code", code)
