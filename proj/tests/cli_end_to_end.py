"""End-to-end checks of the misi executable.

usage: cli_end_to_end.py MISI SCHEMA WORKDIR FAKE_MODEL
"""

import json
import os
import subprocess
import sys

import jsonschema

MISI, SCHEMA, WORK, FAKE = sys.argv[1:5]
os.makedirs(WORK, exist_ok=True)
with open(SCHEMA) as f:
    schema = json.load(f)
jsonschema.Draft202012Validator.check_schema(schema)
validator = jsonschema.Draft202012Validator(schema)

failures = []


def check(ok, what):
    print(("ok   " if ok else "FAIL ") + what)
    if not ok:
        failures.append(what)


def write(name, text):
    path = os.path.join(WORK, name)
    with open(path, "w") as f:
        f.write(text)
    return path


def misi(*args):
    return subprocess.run([MISI, *args], capture_output=True, text=True)


def run_to_file(cmd, config, out, *extra):
    path = os.path.join(WORK, out)
    if os.path.exists(path):
        os.remove(path)
    r = misi(cmd, "--config", config, "--out", path, *extra)
    data = open(path).read() if os.path.exists(path) else None
    return r, data


configs = {
    "adjusted": write("adjusted.toml", """
[model]
name = "linear_gaussian"
[analysis]
samples = 1500
[subspace]
x2 = [-1.0, 1.0]
[curve]
cv = "x1"
qoi = "y"
samples = 200
"""),
    "second": write("second.toml", """
[model]
name = "product_gaussian"
[analysis]
order = 2
samples = 800
"""),
    "percentile": write("percentile.toml", """
[model]
name = "linear_gaussian"
[analysis]
algorithm = "percentile"
samples = 300
replications = 10
"""),
    "constant": write("constant.toml", """
[model]
name = "constant"
[analysis]
samples = 300
"""),
    "edlc": write("edlc.toml", """
[model]
kind = "none"
[prior]
kind = "edlc"
[sample]
count = 50
"""),
}

# byte determinism across thread counts, and schema validity
for name, cfg in configs.items():
    cmds = ["sample"] if name == "edlc" else ["rank", "sample"]
    if name == "adjusted":
        cmds += ["curve", "loop"]
    for cmd in cmds:
        r1, a = run_to_file(cmd, cfg, f"{name}_{cmd}_1", "--threads", "1", "--seed", "11")
        r4, b = run_to_file(cmd, cfg, f"{name}_{cmd}_4", "--threads", "4", "--seed", "11")
        check(r1.returncode == 0 and r4.returncode == 0, f"{name} {cmd} exits 0 ({r1.stderr.strip()})")
        check(a is not None and a == b, f"{name} {cmd} identical across --threads 1/4")
        if cmd in ("rank", "loop") and a:
            doc = json.loads(a)
            errors = sorted(validator.iter_errors(doc), key=str)
            check(not errors, f"{name} {cmd} report validates" + (f": {errors[0].message}" if errors else ""))

# the seed changes the report, a repeat does not
r, a = run_to_file("rank", configs["adjusted"], "seed_a", "--seed", "1")
r, b = run_to_file("rank", configs["adjusted"], "seed_b", "--seed", "2")
r, c = run_to_file("rank", configs["adjusted"], "seed_c", "--seed", "1")
check(a != b and a == c, "seed controls the report")

# stdout without --out, table on stderr
r = misi("rank", "--config", write("table.toml", """
[model]
name = "linear_gaussian"
[analysis]
samples = 500
[output]
table = true
"""))
check(r.returncode == 0 and json.loads(r.stdout)["report"] == "rank", "report on stdout")
check("resolved pairs" in r.stderr, "table on stderr")

# exit codes
r = misi("rank", "--config", os.path.join(WORK, "does_not_exist.toml"))
check(r.returncode == 2, "missing config file is a usage error (exit 2)")
r = misi("rank", "--config", write("ok.toml", "[model]\nname = \"linear_gaussian\"\n"), "--bogus")
check(r.returncode == 2, "unknown flag exits 2")
r = misi("--help")
check(r.returncode == 0 and "rank" in r.stdout, "--help exits 0")
bad = write("bad.toml", "[model]\nname = \"linear_gaussian\"\nbogus = 1\n")
r, data = run_to_file("rank", bad, "bad_out")
check(r.returncode == 2 and data is None, "config error exits 2 with no output")
sub = write("badsub.toml", "[model]\nname = \"linear_gaussian\"\n[subspace]\nx1 = [1.0, 1.0]\n")
r, data = run_to_file("loop", sub, "badsub_out")
check(r.returncode == 2 and data is None, "degenerate subspace exits 2")
crash = write("crash.toml", f"""
[model]
kind = "external"
command = "'{FAKE}' fail"
inputs = ["x1", "x2"]
outputs = ["y"]
[prior]
kind = "generic"
[[prior.variables]]
name = "x1"
[[prior.variables]]
name = "x2"
[analysis]
samples = 50
""")
r, data = run_to_file("rank", crash, "crash_out")
check(r.returncode == 1 and data is None, "model failure exits 1 with no output")
check("ModelFailure" in r.stderr, "model failure is named on stderr")
leftovers = [f for f in os.listdir(WORK) if ".tmp." in f]
check(not leftovers, "no temporary files left behind")

# external model through the CLI
ext = write("external.toml", f"""
[model]
kind = "external"
command = "'{FAKE}' linear"
inputs = ["x1", "x2", "x3"]
outputs = ["y"]
[prior]
kind = "generic"
[[prior.variables]]
name = "x1"
[[prior.variables]]
name = "x2"
[[prior.variables]]
name = "x3"
[analysis]
samples = 2000
""")
r, a = run_to_file("rank", ext, "ext_a", "--threads", "1")
r, b = run_to_file("rank", ext, "ext_b", "--threads", "4")
check(a is not None and a == b, "external model report is deterministic")
if a:
    doc = json.loads(a)
    labels = [x["label"] for x in doc["results"][0]["ranking"]]
    check(labels == ["x1", "x2", "x3"], "external linear model ranks x1 > x2 > x3")

if failures:
    print(f"{len(failures)} checks failed")
    sys.exit(1)
print("all checks passed")
