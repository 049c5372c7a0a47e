# Copyright 2026 The dpjl Authors
# SPDX-License-Identifier: Apache-2.0

"""Independent epsilon for the subsampled Gaussian reference configuration.

Uses Google's dp_accounting package (PLD and RDP accountants), which shares
no code with this library. The printed PLD value is frozen in
tests/acceptance.cc; rerun this script after any change to the reference
configuration.

    python3 tests/oracles/accountant_crosscheck.py
"""

import dp_accounting
from dp_accounting.pld import pld_privacy_accountant
from dp_accounting.rdp import rdp_privacy_accountant

SIGMA = 0.6
SAMPLE_RATE = 256 / 25000
STEPS = 1470
DELTA = 1e-5


def event():
    return dp_accounting.SelfComposedDpEvent(
        dp_accounting.PoissonSampledDpEvent(
            SAMPLE_RATE, dp_accounting.GaussianDpEvent(SIGMA)),
        STEPS)


def main():
    pld = pld_privacy_accountant.PLDAccountant(value_discretization_interval=1e-3)
    pld.compose(event())
    rdp = rdp_privacy_accountant.RdpAccountant()
    rdp.compose(event())
    print(f"pld_epsilon={pld.get_epsilon(DELTA)!r}")
    print(f"rdp_epsilon={rdp.get_epsilon(DELTA)!r}")


if __name__ == "__main__":
    main()
