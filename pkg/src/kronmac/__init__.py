"""Deterministic equivalents and precoder optimization for Kronecker MIMO-MAC channels."""

__version__ = '0.1.0'

from .deteq import (SystemConfig, FixedPointSolution, ShannonValue,  # noqa: E402
                    solve_fixed_point, stieltjes_de, shannon_de,
                    shannon_integral_check, rate_region_constraints)
from .precoding import (PrecoderSet, WaterfillResult, waterfill_step,  # noqa: E402
                        iterative_waterfill, concavity_probe)
from .correlation import (AntennaArray, AngularSpread, jakes_correlation,  # noqa: E402
                          grid_array, scenario_two_user)
from .montecarlo import (sample_channel, empirical_mutual_info,  # noqa: E402
                         ergodic_estimate, empirical_stieltjes)
