"""Detection and quality-preservation metrics.

Detection: per-condition threshold calibration on clean scores, TPR at a
fixed false-positive budget, and empirical ROC/AUC. Quality: character error
rate for transcripts, cosine similarity for embeddings, an MFCC-statistics
embedding standing in when no speaker-embedding plugin is configured, and a
log-spectral distance proxy.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.fft import dct

from .audio import DEFAULT_STFT, AudioBuffer, stft
from .errors import MarkbenchError, ParameterError

__all__ = [
    "calibrate_threshold",
    "tpr_at_fpr",
    "roc",
    "cer",
    "cosine_sim",
    "mfcc_embedding",
    "log_spectral_distance",
]


def calibrate_threshold(clean_scores, fpr: float) -> float:
    """Smallest decision threshold whose false-positive count on the clean
    scores stays within floor(fpr * N).

    With k = floor(fpr * N): the threshold is the k-th largest clean score,
    unless ties push the count of scores >= it past k (or k == 0), in which
    case the threshold is nudged just above the offending value so the bound
    holds unconditionally.
    """
    scores = np.asarray(list(clean_scores), dtype=np.float64)
    if scores.size == 0:
        raise ParameterError("cannot calibrate a threshold from zero clean scores")
    if not 0.0 < fpr < 1.0:
        raise ParameterError(f"fpr must be in (0, 1), got {fpr}")
    if scores.size < 100:
        warnings.warn(
            f"calibrating on only {scores.size} clean scores; the realized FPR is coarse",
            stacklevel=2,
        )
    n = scores.size
    k = int(math.floor(fpr * n))
    desc = np.sort(scores)[::-1]
    if k == 0:
        return float(np.nextafter(desc[0], np.inf))
    tau = desc[k - 1]
    if int(np.sum(scores >= tau)) > k:  # ties at the rank-k value
        return float(np.nextafter(tau, np.inf))
    return float(tau)


def tpr_at_fpr(pos_scores, clean_scores, fpr: float = 0.01) -> float:
    """Fraction of positive scores at or above the calibrated threshold."""
    pos = np.asarray(list(pos_scores), dtype=np.float64)
    if pos.size == 0:
        raise ParameterError("no positive scores")
    tau = calibrate_threshold(clean_scores, fpr)
    return float(np.mean(pos >= tau))


def roc(pos_scores, clean_scores):
    """Empirical ROC by sweeping all distinct thresholds.

    Returns (points, auc) where points is a list of (fpr, tpr) from (0, 0)
    to (1, 1) and auc is the trapezoidal area.
    """
    pos = np.asarray(list(pos_scores), dtype=np.float64)
    neg = np.asarray(list(clean_scores), dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ParameterError("roc needs nonempty score lists")
    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    points = [(0.0, 0.0)]
    for tau in thresholds:
        points.append(
            (float(np.mean(neg >= tau)), float(np.mean(pos >= tau)))
        )
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    auc = float(np.trapezoid(ys, xs))
    return points, auc


def _normalize_text(text: str) -> str:
    return " ".join(text.lower().split())


def cer(reference_text: str, hypothesis_text: str) -> float:
    """Character error rate: unit-cost edit distance over reference length.

    Both strings are lowercased with whitespace collapsed first.
    """
    ref = _normalize_text(reference_text)
    hyp = _normalize_text(hypothesis_text)
    if not ref:
        raise ParameterError("reference transcript is empty after normalization")
    prev = list(range(len(hyp) + 1))
    for i, rc in enumerate(ref, start=1):
        curr = [i]
        for j, hc in enumerate(hyp, start=1):
            cost = 0 if rc == hc else 1
            curr.append(min(prev[j] + 1, curr[j - 1] + 1, prev[j - 1] + cost))
        prev = curr
    return prev[len(hyp)] / len(ref)


def cosine_sim(a, b) -> float:
    va = np.asarray(a, dtype=np.float64).ravel()
    vb = np.asarray(b, dtype=np.float64).ravel()
    if va.shape != vb.shape:
        raise ParameterError(f"vector shapes differ: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ParameterError("cosine similarity is undefined for zero vectors")
    return float(np.dot(va, vb) / (na * nb))


def _mel_filterbank(n_mels: int, n_bins: int, rate: int) -> np.ndarray:
    def hz_to_mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    mel_edges = np.linspace(hz_to_mel(0.0), hz_to_mel(rate / 2.0), n_mels + 2)
    hz_edges = mel_to_hz(mel_edges)
    bin_freqs = np.arange(n_bins) * rate / ((n_bins - 1) * 2)
    fb = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lo, mid, hi = hz_edges[m : m + 3]
        up = (bin_freqs - lo) / max(mid - lo, 1e-9)
        down = (hi - bin_freqs) / max(hi - mid, 1e-9)
        fb[m] = np.clip(np.minimum(up, down), 0.0, None)
    return fb


def mfcc_embedding(buffer: AudioBuffer, n_coeffs: int = 20, n_mels: int = 40) -> np.ndarray:
    """Mean and std of the first `n_coeffs` MFCCs (energy term dropped, so the
    vector is invariant to pure gain) -> a 2*n_coeffs vector."""
    if len(buffer) < buffer.sample_rate:
        raise ParameterError("mfcc_embedding needs at least 1 s of audio")
    spec = stft(buffer, DEFAULT_STFT)
    power = np.abs(spec.frames) ** 2
    fb = _mel_filterbank(n_mels, spec.params.n_bins, buffer.sample_rate)
    mel = fb @ power
    floor = float(mel.max()) * 1e-10
    if floor == 0.0:
        return np.zeros(2 * n_coeffs)
    logmel = np.log(np.maximum(mel, floor))
    coeffs = dct(logmel, axis=0, norm="ortho")[1 : n_coeffs + 1]
    return np.concatenate([coeffs.mean(axis=1), coeffs.std(axis=1)])


def log_spectral_distance(reference: AudioBuffer, test: AudioBuffer) -> float:
    """Frame-averaged RMS difference of log-magnitude spectra, in dB."""
    if reference.sample_rate != test.sample_rate:
        raise ParameterError("log_spectral_distance requires matching rates")
    if len(reference) != len(test):
        raise ParameterError("log_spectral_distance requires equal lengths")
    sa = stft(reference, DEFAULT_STFT)
    sb = stft(test, DEFAULT_STFT)
    ma = np.abs(sa.frames)
    mb = np.abs(sb.frames)
    peak = max(float(ma.max()), float(mb.max()))
    if peak == 0.0:
        return 0.0
    floor = peak * 1e-9
    la = 20.0 * np.log10(np.maximum(ma, floor))
    lb = 20.0 * np.log10(np.maximum(mb, floor))
    per_frame = np.sqrt(np.mean((la - lb) ** 2, axis=0))
    live = (ma.max(axis=0) > floor) | (mb.max(axis=0) > floor)
    if not live.any():
        return 0.0
    return float(per_frame[live].mean())
