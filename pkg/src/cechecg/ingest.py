"""ECG loading, baseline/noise removal and segmentation into trial matrices."""
from __future__ import annotations

import enum
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pywt
from scipy.ndimage import median_filter

from .errors import ParameterError, ParseError, ValidationError

BINARY_MAGIC = b"ECG1"
# magic, channel count, samples per channel, sampling rate, gain (mV per count)
BINARY_HEADER = struct.Struct("<4sIIff")


class Label(str, enum.Enum):
    NSR = "NSR"
    MCI = "MCI"
    NONMCI = "NONMCI"

    @classmethod
    def parse(cls, text, rhythm_map=None):
        """Accept a class name (``NSR``, ``MCI``, ``NONMCI``/``non-MCI``) or a
        rhythm annotation resolved through ``rhythm_map``."""
        key = str(text).strip()
        norm = key.upper().replace("-", "").replace("_", "")
        if norm in cls.__members__:
            return cls[norm]
        table = DEFAULT_RHYTHM_MAP if rhythm_map is None else rhythm_map
        rhythm = key.lstrip("(").upper()
        if rhythm in table:
            return table[rhythm]
        raise ValueError(f"unknown label {text!r}")


# Arrhythmia annotations (MIT-BIH rhythm codes and plain names) -> class.
DEFAULT_RHYTHM_MAP = {
    "N": Label.NSR,
    "NSR": Label.NSR,
    "VFL": Label.MCI,
    "VF": Label.MCI,
    "VENTRICULAR FIBRILLATION": Label.MCI,
    "VT": Label.MCI,
    "VENTRICULAR TACHYCARDIA": Label.MCI,
    "AFIB": Label.MCI,
    "ATRIAL FIBRILLATION": Label.MCI,
    "SBR": Label.MCI,
    "SINUS BRADYCARDIA": Label.MCI,
    "AFL": Label.NONMCI,
    "ATRIAL FLUTTER": Label.NONMCI,
    "SVTA": Label.NONMCI,
    "SUPRAVENTRICULAR TACHYCARDIA": Label.NONMCI,
    "B": Label.NONMCI,
    "AB": Label.NONMCI,
    "BIGEMINY": Label.NONMCI,
    "T": Label.NONMCI,
    "TRIGEMINY": Label.NONMCI,
}


def parse_rhythm_map(text):
    """Parse ``CODE:LABEL,CODE:LABEL`` into a rhythm table."""
    table = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        code, sep, label = item.partition(":")
        if not sep:
            raise ParameterError(f"rhythm map entry {item!r} is not CODE:LABEL")
        table[code.strip().lstrip("(").upper()] = Label.parse(label, rhythm_map={})
    return table


@dataclass
class EcgRecord:
    channels: np.ndarray  # (ch, s) millivolts
    sampling_rate_hz: float
    channel_names: list
    label: Label
    subject_id: str

    def __post_init__(self):
        self.channels = np.atleast_2d(np.asarray(self.channels, dtype=np.float64))
        if self.channels.shape[0] < 1 or self.channels.shape[1] < 1:
            raise ValidationError("record needs at least one channel and one sample")
        if not self.sampling_rate_hz > 0:
            raise ValidationError(f"sampling rate must be positive, got {self.sampling_rate_hz}")
        if len(self.channel_names) != self.channels.shape[0]:
            raise ValidationError(
                f"{len(self.channel_names)} channel names for {self.channels.shape[0]} channels"
            )
        self.label = Label.parse(self.label) if not isinstance(self.label, Label) else self.label

    @property
    def n_channels(self):
        return self.channels.shape[0]

    @property
    def n_samples(self):
        return self.channels.shape[1]

    def with_channels(self, channels):
        return EcgRecord(channels, self.sampling_rate_hz, list(self.channel_names),
                         self.label, self.subject_id)


@dataclass
class TrialMatrix:
    data: np.ndarray  # (n, t)
    trial_duration_s: float = 4.0
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2 or min(self.data.shape) < 1:
            raise ValidationError(f"trial matrix must be non-empty 2-D, got shape {self.data.shape}")

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def t(self):
        return self.data.shape[1]

    def to_channels(self):
        """Undo the channel-major vectorization: returns (ch, n * samples)."""
        ch = int(self.provenance["channels"])
        per = self.t // ch
        return self.data.reshape(self.n, ch, per).transpose(1, 0, 2).reshape(ch, self.n * per)


def _parse_header(line, path):
    if not line.startswith("#"):
        raise ParseError("expected '# fs=<hz> label=<label> subject=<id>' header", path, 1)
    fields = {}
    for token in line[1:].split():
        key, sep, value = token.partition("=")
        if not sep:
            raise ParseError(f"malformed header token {token!r}", path, 1)
        fields[key.strip().lower()] = value.strip()
    missing = {"fs", "label", "subject"} - fields.keys()
    if missing:
        raise ParseError(f"header missing {sorted(missing)}", path, 1)
    try:
        fs = float(fields["fs"])
    except ValueError:
        raise ParseError(f"non-numeric sampling rate {fields['fs']!r}", path, 1) from None
    if not fs > 0:
        raise ParseError(f"sampling rate must be positive, got {fs}", path, 1)
    return fs, fields["label"], fields["subject"]


def _load_csv(path, rhythm_map):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ParseError("empty file", path, 1)
    fs, label_text, subject = _parse_header(lines[0].strip(), path)
    try:
        label = Label.parse(label_text, rhythm_map)
    except ValueError as exc:
        raise ParseError(str(exc), path, 1) from None
    if len(lines) < 2 or not lines[1].strip():
        raise ParseError("missing channel-name line", path, 2)
    names = [n.strip() for n in lines[1].split(",")]
    ch = len(names)
    rows = []
    for lineno, text in enumerate(lines[2:], start=3):
        if not text.strip():
            continue
        parts = text.split(",")
        if len(parts) != ch:
            raise ParseError(f"ragged row: {len(parts)} values for {ch} channels", path, lineno)
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise ParseError(f"non-numeric sample in {text!r}", path, lineno) from None
    if not rows:
        raise ParseError("no samples", path, 3)
    return EcgRecord(np.array(rows).T, fs, names, label, subject)


def _load_binary16(path, label, subject_id):
    blob = Path(path).read_bytes()
    if len(blob) < BINARY_HEADER.size:
        raise ParseError("truncated header", path, offset=len(blob))
    magic, ch, s, fs, gain = BINARY_HEADER.unpack_from(blob, 0)
    if magic != BINARY_MAGIC:
        raise ParseError(f"bad magic {magic!r}", path, offset=0)
    if ch < 1 or s < 1:
        raise ParseError(f"invalid dimensions ch={ch} s={s}", path, offset=4)
    if not fs > 0:
        raise ParseError(f"sampling rate must be positive, got {fs}", path, offset=12)
    expected = BINARY_HEADER.size + 2 * ch * s
    if len(blob) != expected:
        raise ParseError(f"payload is {len(blob)} bytes, expected {expected}", path,
                         offset=min(len(blob), expected))
    if label is None:
        raise ParseError("binary16 records carry no label; pass one explicitly", path, offset=0)
    raw = np.frombuffer(blob, dtype="<i2", offset=BINARY_HEADER.size).reshape(ch, s)
    names = [f"ch{i}" for i in range(ch)]
    return EcgRecord(raw.astype(np.float64) * float(gain), float(fs), names,
                     Label.parse(label), subject_id or Path(path).stem)


def load_record(path, format=None, label=None, subject_id=None, rhythm_map=None):
    """Read a record in ``csv`` or ``binary16`` format (inferred from suffix
    when not given). No resampling is performed."""
    path = Path(path)
    if not path.exists():
        raise ParseError("file not found", path)
    if format is None:
        format = "binary16" if path.suffix.lower() in (".bin", ".ecg") else "csv"
    if format == "csv":
        return _load_csv(path, rhythm_map)
    if format == "binary16":
        return _load_binary16(path, label, subject_id)
    raise ParameterError(f"unknown record format {format!r}")


def save_record_csv(record, path, fmt="%.6f"):
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# fs={record.sampling_rate_hz:g} label={record.label.value} "
                 f"subject={record.subject_id}\n")
        fh.write(",".join(record.channel_names) + "\n")
        np.savetxt(fh, record.channels.T, delimiter=",", fmt=fmt)


def save_record_binary16(record, path, gain=None):
    """Quantize to int16 with ``gain`` mV per count (auto-scaled if None)."""
    if gain is None:
        peak = float(np.max(np.abs(record.channels))) or 1.0
        gain = peak / 32000.0
    counts = np.clip(np.round(record.channels / gain), -32768, 32767).astype("<i2")
    header = BINARY_HEADER.pack(BINARY_MAGIC, record.n_channels, record.n_samples,
                                record.sampling_rate_hz, gain)
    Path(path).write_bytes(header + counts.tobytes())


def _window_samples(ms, fs):
    w = int(round(ms * fs / 1000.0))
    return max(1, w | 1)  # odd length keeps the filter centred


def median_baseline_removal(record, win1_ms=200.0, win2_ms=600.0, boundary="nearest"):
    """Subtract a two-stage median baseline estimate from every channel."""
    if not 0 < win1_ms < win2_ms:
        raise ParameterError(f"need 0 < win1_ms < win2_ms, got {win1_ms}, {win2_ms}")
    if boundary not in ("nearest", "reflect"):
        raise ParameterError(f"unknown boundary mode {boundary!r}")
    fs = record.sampling_rate_hz
    w1, w2 = _window_samples(win1_ms, fs), _window_samples(win2_ms, fs)
    if w2 > record.n_samples:
        raise ParameterError(
            f"median window of {w2} samples is longer than the {record.n_samples}-sample signal"
        )
    out = np.empty_like(record.channels)
    for i, x in enumerate(record.channels):
        baseline = median_filter(median_filter(x, size=w1, mode=boundary), size=w2, mode=boundary)
        out[i] = x - baseline
    return record.with_channels(out)


def soft_threshold(x, thr):
    return np.sign(x) * np.maximum(np.abs(x) - thr, 0.0)


def universal_threshold(finest_detail, n):
    sigma = np.median(np.abs(finest_detail)) / 0.6745
    return sigma * np.sqrt(2.0 * np.log(n))


def dwt_denoise(record, wavelet="db4", level=4, threshold_rule="universal", threshold=None):
    """Multi-level DWT with soft thresholding of all detail bands.

    ``threshold`` overrides the rule (``threshold=0`` gives perfect reconstruction).
    """
    if threshold_rule != "universal":
        raise ParameterError(f"unsupported threshold rule {threshold_rule!r}")
    if level < 1 or 2 ** level > record.n_samples:
        raise ParameterError(
            f"level {level} needs at least {2 ** max(level, 1)} samples, have {record.n_samples}"
        )
    try:
        pywt.Wavelet(wavelet)
    except ValueError:
        raise ParameterError(f"unknown wavelet {wavelet!r}") from None
    n = record.n_samples
    out = np.empty_like(record.channels)
    with warnings.catch_warnings():
        # deep levels on short signals only warn about boundary effects
        warnings.simplefilter("ignore", UserWarning)
        for i, x in enumerate(record.channels):
            coeffs = pywt.wavedec(x, wavelet, level=level, mode="symmetric")
            thr = universal_threshold(coeffs[-1], n) if threshold is None else float(threshold)
            if thr > 0:
                coeffs[1:] = [soft_threshold(c, thr) for c in coeffs[1:]]
            out[i] = pywt.waverec(coeffs, wavelet, mode="symmetric")[:n]
    return record.with_channels(out)


def segment_trials(record, trial_s=4.0, provenance=None):
    """Cut every channel into non-overlapping ``trial_s`` windows and vectorize
    each window channel-major into one row. The trailing partial window is dropped."""
    per = int(round(trial_s * record.sampling_rate_hz))
    if per < 1:
        raise ParameterError(f"trial of {trial_s} s is shorter than one sample")
    n = record.n_samples // per
    if n < 1:
        raise ValidationError(
            f"record of {record.n_samples} samples is shorter than one {per}-sample trial"
        )
    ch = record.n_channels
    data = record.channels[:, : n * per].reshape(ch, n, per).transpose(1, 0, 2).reshape(n, ch * per)
    prov = {
        "subject_id": record.subject_id,
        "label": record.label.value,
        "sampling_rate_hz": record.sampling_rate_hz,
        "channels": ch,
        "samples_per_trial_per_channel": per,
        "layout": "channel-major",
        "dropped_tail_samples": record.n_samples - n * per,
    }
    prov.update(provenance or {})
    return TrialMatrix(np.ascontiguousarray(data), float(trial_s), prov)


def preprocess(record, win1_ms=200.0, win2_ms=600.0, wavelet="db4", level=4,
               median_boundary="nearest"):
    """Baseline removal followed by wavelet denoising."""
    cleaned = median_baseline_removal(record, win1_ms, win2_ms, boundary=median_boundary)
    return dwt_denoise(cleaned, wavelet=wavelet, level=level)
