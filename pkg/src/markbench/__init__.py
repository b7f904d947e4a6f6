"""markbench: a robustness bench for post-hoc audio watermarks.

Transforms audio with parameterized attacks (native DSP, cascades, plugin
codecs/denoisers), embeds and detects a built-in spread-spectrum reference
watermark (with band-splitting for arbitrary sample rates), and scores
detection as TPR at a fixed false-positive rate with per-transformation
threshold calibration, alongside quality-preservation metrics.
"""

from .audio import (
    DEFAULT_STFT,
    AudioBuffer,
    Spectrogram,
    StftParams,
    istft,
    measure_snr,
    resample,
    stft,
)
from .attacks import (
    AttackSearchConfig,
    CascadeSpec,
    SearchResult,
    apply_cascade,
    denoise_attack,
    search_cascade,
    spectral_subtract_denoise,
)
from .bandsplit import BandedEmbedder, BandedWatermark, detect_banded, embed_banded, split_bands
from .corpus import CorpusManifest, generate_synthetic_corpus, load_manifest, synthetic_clip
from .errors import MarkbenchError, ParameterError, UndefinedSnrError
from .evaluation import EvaluationPlan, RobustnessReport, TrialRecord, evaluate
from .metrics import (
    calibrate_threshold,
    cer,
    cosine_sim,
    log_spectral_distance,
    mfcc_embedding,
    roc,
    tpr_at_fpr,
)
from .plugins import (
    PluginError,
    PluginFailure,
    PluginProtocolError,
    PluginSpec,
    PluginTimeout,
    PluginWatermark,
    run_detect_plugin,
    run_embed_plugin,
    run_metric_plugin,
    run_transform_plugin,
)
from .rng import derive_seed, make_rng
from .runner import rerender_from_records, run_evaluation
from .transforms import TransformSpec, apply
from .watermark import SpreadSpectrumWatermark, WatermarkKey, detect, embed
from .wavio import read_wav, write_wav

__version__ = "0.1.0"
