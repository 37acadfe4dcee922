"""Pinned physical constants (CGS) and model defaults.

The values are rounded on purpose; order-of-magnitude checks against
published numbers are only meaningful if the constants do not drift.
"""

HBAR = 1.0546e-27          # erg s
C_LIGHT = 2.9979e10        # cm / s
YEAR = 3.156e7             # s
PROTON_MASS = 1.6726e-24   # g
NUCLEON_MASS = 1.67e-24    # g, the rounded value used for single-nucleon estimates

# GRW / SL collapse parameters
GRW_LAMBDA = 1e-16         # 1 / s
GRW_A = 1e-5               # cm

AGE_OF_UNIVERSE_YR = 13.7e9

# SI conversion factors (used only by the dimensional audit)
ERG_TO_J = 1e-7
CM_TO_M = 1e-2
G_TO_KG = 1e-3

# Documented constraints that depend on matrix elements from outside this
# package. Shipped as reference numbers only; nothing recomputes them.
GE_ELECTRON_RATIO_BOUND = 13.0  # 0 <= alpha_e/alpha_N <= 13 m_e/m_N (Ge slab, 11.1 keV pulses)
SNO_NEUTRON_PROTON_SPREAD = 4e-3  # alpha_n/alpha_p = m_n/m_p +- 4e-3 (deuteron dissociation)
EQUILIBRIUM_PACKET_WIDTH = 1e-8  # cm, dust sphere centre-of-mass width
EQUILIBRIUM_PACKET_TIME = 0.6    # s to reach that width
