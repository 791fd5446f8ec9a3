#!/usr/bin/env python3
"""Regenerates src/sobol_directions.inc from the Joe-Kuo (new-joe-kuo-6.21201)
direction numbers bundled with scipy.

Layout: a flat uint32 array; per dimension: the primitive polynomial (with the
leading and trailing bits), followed by `degree` initial direction integers.
"""
import os
import sys

import numpy as np
import scipy.stats

path = os.path.join(os.path.dirname(scipy.stats.__file__), "_sobol_direction_numbers.npz")
data = np.load(path)
poly = data["poly"]
vinit = data["vinit"]

out = sys.argv[1] if len(sys.argv) > 1 else "src/sobol_directions.inc"
with open(out, "w") as f:
    f.write("// Generated by scripts/gen_sobol_table.py; do not edit.\n")
    f.write("// Joe & Kuo direction numbers, new-joe-kuo-6.21201.\n")
    f.write(f"constexpr std::size_t kSobolTableDimensions = {len(poly)};\n")
    f.write("constexpr std::uint32_t kSobolTable[] = {\n")
    for d in range(len(poly)):
        p = int(poly[d])
        deg = max(p.bit_length() - 1, 1) if d > 0 else 1
        vals = [p] + [int(v) for v in vinit[d][:deg]]
        f.write(",".join(str(v) for v in vals) + ",\n")
    f.write("};\n")
