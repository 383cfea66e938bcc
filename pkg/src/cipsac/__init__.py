"""Link-level simulator for coded integrated passive sensing and
communication (CIPSAC) over SIMO-OFDM: sparse superposition coding with
CRC-assisted K-best decoding, subspace AoA estimation, 2D-FFT
delay-Doppler sensing, and the iterative sensing/decoding receiver."""

from .channel import (TargetParameters, apply_channel, complex_normal,
                      per_symbol_noise_var, reconstruct_channel,
                      sample_targets)
from .config import SCENARIOS, SystemConfig, preset_config, snr_db_to_noise_var
from .crc import CRC6, CRC8, CRC11, CrcPolynomial, crc_check, crc_encode
from .exceptions import (CipsacError, CodebookFormatError, ConfigError,
                         DimensionError, IllConditionedError,
                         InvalidInputError)
from .harness import (ExperimentSpec, PsrSpec, ResultsTable, load_experiment_file,
                      run_experiment, run_psr)
from .ipscd import DecodeState, IterationTrace, ipscd_run
from .metrics import outage_rate, packet_error_rate, sensing_mse
from .numerics import fft2, hermitian_eig, mmse_solve
from .sensing import (AoaGrid, SensingEstimate, estimate_aoa_music,
                      estimate_delay_doppler, estimate_rcs, psr_estimate,
                      sense, spatial_filter, substitute_and_equalize,
                      top_delay_doppler_peaks)
from .sparc import (Candidate, Codebook, CsiCodebook, choose_layer_order,
                    crc_select, decode_packet, kbest_decode, load_codebook,
                    looped_kbest, make_random_codebook, save_codebook,
                    sparc_encode, update_codebook_csi)

__version__ = "0.1.0"
