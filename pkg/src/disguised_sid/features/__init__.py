from .base import METHODS, FeatureConfig, FeatureMatrix, pool_utterance, read_feature_csv, write_feature_csv
from .dct import dct, dct_features, dct_matrix, idct
from .extractors import (
    EXTRACTORS,
    DctExtractor,
    DwpdExtractor,
    LpcExtractor,
    Mfcc,
    MfccDeltaDelta,
    make_extractor,
)
from .lpc import levinson_durbin, lpc_coefficients, lpc_features
from .mel import MelFilterbank, hz_to_mel, mel_filterbank, mel_to_hz
from .mfcc import delta, mfcc_delta_delta, mfcc_static
from .wavelet import (
    analysis_matrix,
    dwpd_features,
    dwpd_frame_features,
    dwt_chain,
    dwt_step,
    idwt_step,
    wpd_decompose,
)

__all__ = [
    "METHODS", "FeatureConfig", "FeatureMatrix", "pool_utterance", "read_feature_csv",
    "write_feature_csv", "dct", "dct_features", "dct_matrix", "idct", "EXTRACTORS",
    "DctExtractor", "DwpdExtractor", "LpcExtractor", "Mfcc", "MfccDeltaDelta",
    "make_extractor", "levinson_durbin", "lpc_coefficients", "lpc_features",
    "MelFilterbank", "hz_to_mel", "mel_filterbank", "mel_to_hz", "delta",
    "mfcc_delta_delta", "mfcc_static", "dwpd_features", "dwt_chain", "dwt_step",
    "idwt_step", "wpd_decompose", "analysis_matrix", "dwpd_frame_features",
]
