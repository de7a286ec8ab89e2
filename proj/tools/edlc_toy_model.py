#!/usr/bin/env python3
"""Toy stand-in for a pore-scale diffusivity model, for the external-model protocol.

Reads CSV (T, cin, r, omega, lambda_D, phi_G, l_por) on stdin and writes
deff_plus, deff_minus (m^2/s) on stdout, one row per input row. The
functional form is illustrative only: bulk Stokes-Einstein scaling with T,
Bruggeman tortuosity omega^1.5 and a double-layer factor in lambda_D / l_por
that favours counter-ions.
"""
import csv
import math
import sys

D_PLUS, D_MINUS, T_REF = 1.33e-9, 2.03e-9, 298.15

rows = list(csv.DictReader(sys.stdin))
out = csv.writer(sys.stdout, lineterminator="\n")
out.writerow(["deff_plus", "deff_minus"])
for row in rows:
    T, omega = float(row["T"]), float(row["omega"])
    ratio = float(row["lambda_D"]) / float(row["l_por"])
    phi = float(row["phi_G"])
    pore = omega ** 1.5
    out.writerow([
        repr(D_PLUS * T / T_REF * pore * (1.0 + ratio * (1.0 + phi))),
        repr(D_MINUS * T / T_REF * pore * math.exp(-ratio)),
    ])
