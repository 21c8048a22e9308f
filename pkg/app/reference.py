"""
Published reference values for f = eta(3 tau)^8 that reproduce-paper checks against.
"""

BETA = 1.0468
BETA_TOLERANCE = 1.5e-3
GAMMA = -0.0796
DELTA = -0.8756

# Dhat(f, f, h; 3) for h = 3, ..., 15
DHAT = {3: -10.7466, 6: 12.7931, 9: 6.4671, 12: -79.2777, 15: 64.2494}
ANCHORS = (3, 6)
DHAT_TOLERANCE = 1e-2

# normalized holomorphic Maass-Poincare coefficients, equal to those of L_f
MAASS_NORMALIZED = {2: -1 / 4, 5: 49 / 125}
MAASS_TOLERANCE = 1e-3

# pi(3^t; X) as printed to three decimals, t = 1..5; cells agree within DENSITY_TOLERANCE
DENSITY = {
    3000: (1.0, 0.912, 0.784, 0.705, 0.676),
    6000: (1.0, 0.917, 0.792, 0.711, 0.679),
    9000: (1.0, 0.920, 0.798, 0.716, 0.680),
    12000: (1.0, 0.922, 0.800, 0.718, 0.681),
    15000: (1.0, 0.923, 0.803, 0.720, 0.683),
}
DENSITY_TOLERANCE = 1e-3
