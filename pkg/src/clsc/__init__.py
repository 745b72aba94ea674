"""Chirp-layered superposition coding for LoRa.

A high-SF BPSK layer rides on a low-SF LoRa symbol; this package synthesises
both layers, demodulates them by successive cancellation, evaluates the
error-rate theory and runs reproducible Monte Carlo sweeps.
"""

from .analysis import (
    FeasibleCell,
    SpectrumPrediction,
    ber_bpsk,
    eff_snr_high,
    eff_snr_low,
    feasible_region,
    rayleigh_cdf,
    rice_pdf,
    ser_lora,
    u_spectrum_bruteforce,
    u_spectrum_stationary,
)
from .channel import PowerModel, SuperposConfig, awgn, compose_tx
from .demod import DemodResult, SuperposDecision, bandpass, correlate_bpsk, demod_lora, reconstruct_and_cancel
from .sim import ErrorRatePoint, Scenario, run_trial, sweep
from .waveform import DecisionMetric, IqBuffer, LoraConfig, decimate, dechirp, dft_metric, gen_high_segment, gen_symbol

__version__ = "0.1.0"
