"""
Fit the layer thicknesses of the two-layer achromatic quarter-wave plate.

The vendor publishes retardations, not thicknesses. This script fits the
MgF2 and SiO2 thicknesses (opposed fast axes) to the measured single-pass
retardations and prints a waveplate document for sandwichpy/data/.

Usage:
    python scripts/calibrate_waveplate.py [--start 550 700] > waveplates.json
"""

import argparse
import json
import math
import sys

import numpy as np
from scipy.optimize import minimize

from sandwichpy.components.dispersion import Material
from sandwichpy.components.phasecomp import WaveplateLayer, WaveplateStack, waveplate_retardation
from sandwichpy.utils.logger import SandwichLogger

# (wavelength nm, |retardation| rad)
MEASURED = (
    (785.0, 0.93 * math.pi / 2.0),
    (850.0, 0.93 * math.pi / 2.0),
    (405.4, 2.0 * math.pi / 7.0),
)


def stack_for(thicknesses_um) -> WaveplateStack:
    mgf2, sio2 = thicknesses_um
    return WaveplateStack((WaveplateLayer(Material.MGF2, float(mgf2), 1), WaveplateLayer(Material.SIO2, float(sio2), -1)),
                          name="ac-qwp-mgf2-sio2")


def cost(thicknesses_um) -> float:
    if np.any(np.asarray(thicknesses_um) <= 0):
        return math.inf
    stack = stack_for(thicknesses_um)
    residuals = [abs(waveplate_retardation(stack, lam)) - target for lam, target in MEASURED]
    return float(np.sum(np.square(residuals)))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("--start", type=float, nargs=2, default=(550.0, 700.0), metavar=("MGF2_UM", "SIO2_UM"))
    args = parser.parse_args()

    result = minimize(cost, np.asarray(args.start), method="Nelder-Mead",
                      options={"xatol": 1e-3, "fatol": 1e-12, "maxiter": 4000})
    if not result.success:
        SandwichLogger.warning(f"Fit did not converge: {result.message}", "Waveplate")
    stack = stack_for(np.round(result.x, 2))
    for lam, target in MEASURED:
        print(f"# {lam:7.1f} nm: {waveplate_retardation(stack, lam):+.6f} rad (target {target:.6f})", file=sys.stderr)
    document = stack.to_dict()
    document["schema"] = "sandwichpy.waveplate/1"
    json.dump(document, sys.stdout, indent=2)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
