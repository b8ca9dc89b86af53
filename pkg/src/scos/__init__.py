"""Successive cancellation ordered search decoding of modified G_N-coset codes."""

from .codes import (CodeSpec, CrcSpec, crc_polar_spec, encode, encode_u, pac_code, polar_code,
                    rm_code, rm_polar_code, sample_drm_polar)
from .engine import path_metric, sc_decode
from .ordered_search import BiasProfile, ScosConfig, ScosDecoder, compute_bias, scos
from .baselines import (DscfConfig, DscfDecoder, ScConfig, ScDecoder, SclConfig, SclDecoder,
                        brute_force_ml, dscf_decode, scl_decode)

__all__ = [
    "CodeSpec", "CrcSpec", "crc_polar_spec", "encode", "encode_u", "pac_code", "polar_code",
    "rm_code", "rm_polar_code", "sample_drm_polar", "path_metric", "sc_decode", "BiasProfile",
    "ScosConfig", "ScosDecoder", "compute_bias", "scos", "DscfConfig", "DscfDecoder",
    "ScConfig", "ScDecoder",
    "SclConfig", "SclDecoder", "brute_force_ml", "dscf_decode", "scl_decode",
]
