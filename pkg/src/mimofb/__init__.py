"""Finite-bit feedback power control for MIMO fading channels.

Quantizer design (equi-power and optimal), outage simulation under six
transmitter-knowledge regimes, and closed-form diversity-multiplexing curves,
with a compiled eigenvalue kernel for the Monte Carlo hot path (pure-numpy
fallback selected automatically at import).
"""

from .backend import BACKEND, HAVE_COMPILED
from .eigdist import (AsymptoticPower, EmpiricalTable, SmallestAnalytic,
                      build_empirical, cdf_exponent, mass, smallest_eig_pdf)
from .quantizer import (DesignReport, Quantizer, QuantizerError, avg_power,
                        design_equi_power, design_kkt, gamma0_asymptotic,
                        outage_analytic, quantizer_from_json, quantizer_to_json)
from .randmat import AntennaConfig, eig_hh, joint_eig_density, sample_channel, \
    sample_eigs, substream
from .schemes import (Beamforming, JointRatePower, NoCsit, OptimalPerfect,
                      PowerAllocation, QuantizedTemporal, TemporalPerfect,
                      allocate, csir_full_mux_outage, effective_k, g_function,
                      joint_threshold, joint_throughput, mutual_information,
                      temporal_cutoff_budget, temporal_cutoff_perfect)
from .sim import (DiversityFit, OutagePoint, SweepConfig, fit_diversity,
                  read_sweep_csv, reproduce_figure, run_sweep, write_sweep_csv)
from .special import IncompleteGammaPair, exp1, incomplete_gamma, inverse_upper
from .tradeoff import (d_beamforming, d_joint, d_no_csit, d_perfect,
                       d_quantized, d_temporal_perfect)

__version__ = "0.1.0"
