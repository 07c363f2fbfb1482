"""Measured values of the two-ring silicon device, used as comparison targets."""

TABLE = {
    # dof: (fidelity, fidelity_err, purity, purity_err, S, S_err)
    "FB": (0.906, 0.011, 0.837, 0.013, 2.55, 0.02),
    "TB": (0.949, 0.006, 0.921, 0.006, 2.669, 0.013),
}
STABILIZERS = (0.905, 0.981, 0.720, 0.994)
STABILIZER_ERRS = (0.005, 0.004, 0.007, 0.001)
WITNESS = -0.60
WITNESS_ERR = 0.01
VISIBILITY = {"FB": 0.834, "TB": 0.93}
VISIBILITY_ERR = {"FB": 0.014, "TB": 0.01}
ON_CHIP_RATE_HZ = 4.7e3
CAR = 30.0
FSR_GHZ = 524.0
SPACING_TO_LINEWIDTH = 100.0
