"""Validates report.json files from a few small runs against the shipped schema."""
import json
import subprocess
import sys
from pathlib import Path

import jsonschema


def run(cli, *args):
    subprocess.run([cli, *args], check=True, stdout=subprocess.DEVNULL)


def main():
    cli, schema_path, work = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
    schema = json.loads(schema_path.read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    small = ["--phase1-steps", "20", "--phase2-steps", "20", "--batch-size", "32",
             "--projections", "16", "--no-checkpoints"]
    run(cli, "generate", "--nodes", "60", "--categories", "2", "--out", str(work / "m2"))
    run(cli, "generate", "--sources", "1", "--nodes", "60", "--categories", "2", "--out", str(work / "m1"))
    cases = {
        "full": ["--data", str(work / "m2"), "--target", "0", "--target", "1"],
        "front": ["--data", str(work / "m2"), "--ablate", "front"],
        "soo": ["--data", str(work / "m2"), "--soo-only"],
        "single": ["--data", str(work / "m1")],
    }
    for name, args in cases.items():
        out = work / name
        run(cli, "train", *args, *small, "--out", str(out))
        jsonschema.validate(json.loads((out / "report.json").read_text()), schema)
        print(f"{name}: report.json valid")


if __name__ == "__main__":
    main()
