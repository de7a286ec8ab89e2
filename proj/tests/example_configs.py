"""Runs every shipped config in configs/ and validates the JSON reports.

usage: example_configs.py MISI SCHEMA REPO_ROOT
"""

import glob
import json
import os
import subprocess
import sys

import jsonschema

MISI, SCHEMA, ROOT = sys.argv[1:4]
with open(SCHEMA) as f:
    validator = jsonschema.Draft202012Validator(json.load(f))

# Subcommand per config; configs not listed are rankings.
COMMANDS = {"edlc_sample.toml": "sample", "regional_loop.toml": "loop"}

failures = []
configs = sorted(glob.glob(os.path.join(ROOT, "configs", "*.toml")))
if not configs:
    failures.append("no configs found")
for path in configs:
    name = os.path.basename(path)
    cmd = COMMANDS.get(name, "rank")
    res = subprocess.run([MISI, cmd, "--config", path], capture_output=True, text=True, cwd=ROOT)
    ok = res.returncode == 0 and res.stdout
    if ok and cmd != "sample":
        errors = list(validator.iter_errors(json.loads(res.stdout)))
        ok = not errors
        if errors:
            print(errors[0].message)
    print(("ok   " if ok else "FAIL ") + f"{cmd} {name}")
    if not ok:
        print(res.stderr[-2000:])
        failures.append(name)

if failures:
    print("failed: " + ", ".join(failures))
    sys.exit(1)
print("all configs ran")
