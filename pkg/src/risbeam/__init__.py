"""Statistical-CSI joint beamforming for RIS-aided multi-user MISO downlink.

Submodules:

- channel_model: array geometry, steering vectors, correlated channel
  synthesis, path loss, pilot-overhead accounting
- ese_metrics: SINR, Monte Carlo and closed-form ergodic spectral
  efficiency, shared quadratic-form context
- active_beamforming: SVD and fractional-programming AP beamformers
- passive_beamforming: projected-gradient RIS phase optimization and
  phase quantization
- pipelines: joint SVD-GD / FP-GD algorithms and quantized evaluation
- sim_cli: command-line sweeps with CSV output (entry point risbeam-sim)
"""

__version__ = "0.1.0"
