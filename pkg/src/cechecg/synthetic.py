"""Synthetic fixtures: labelled point clouds and ECG-like records."""
import numpy as np

from .ingest import EcgRecord, Label


def circle_cloud(n_points, rng, radius=1.0, noise=0.08):
    """Noisy circle in the xy-plane of R^3: one persistent loop."""
    theta = rng.uniform(0.0, 2.0 * np.pi, n_points)
    pts = np.column_stack([radius * np.cos(theta), radius * np.sin(theta), np.zeros(n_points)])
    return pts + rng.normal(0.0, noise, pts.shape)


def blob_cloud(n_points, rng, scale=0.6):
    """Isotropic Gaussian blob in R^3: no persistent loop."""
    return rng.normal(0.0, scale, (n_points, 3))


def synthetic_clouds(n_subjects=40, n_points=24, seed=0):
    """Half circles (label MCI), half blobs (label NSR).

    Returns a list of (subject_id, label, points).
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_subjects):
        if i % 2 == 0:
            out.append((f"syn{i:03d}", Label.MCI.value, circle_cloud(n_points, rng)))
        else:
            out.append((f"syn{i:03d}", Label.NSR.value, blob_cloud(n_points, rng)))
    return out


def _beat(t, amp, center, width):
    return amp * np.exp(-0.5 * ((t - center) / width) ** 2)


def synthetic_ecg(subject_id, label, fs=250.0, duration_s=120.0, n_channels=2, seed=0,
                  drift_mv=0.3, noise_mv=0.02):
    """ECG-like record: P-QRS-T Gaussian waves on a drifting baseline.

    NSR subjects beat regularly at ~70 bpm. MCI subjects get irregular RR
    intervals and beat-to-beat morphology changes; NONMCI subjects get an
    intermediate, alternating (bigeminy-like) rhythm.
    """
    rng = np.random.default_rng(seed)
    label = Label.parse(label)
    n = int(round(fs * duration_s))
    t = np.arange(n) / fs
    beats = []
    now = rng.uniform(0.0, 0.5)
    k = 0
    while now < duration_s:
        if label is Label.NSR:
            rr = 0.86 + rng.normal(0, 0.01)
            amp = 1.0
        elif label is Label.MCI:
            rr = rng.uniform(0.4, 1.3)
            amp = rng.uniform(0.5, 1.5)
        else:
            rr = 0.6 if k % 2 == 0 else 1.1
            amp = 1.0 if k % 2 == 0 else 0.7
        beats.append((now, amp))
        now += rr
        k += 1
    base = np.zeros(n)
    for onset, amp in beats:
        lo, hi = np.searchsorted(t, [onset - 0.3, onset + 0.6])
        seg = t[lo:hi]
        base[lo:hi] += (_beat(seg, 0.15 * amp, onset - 0.16, 0.025)
                        + _beat(seg, -0.1 * amp, onset - 0.03, 0.01)
                        + _beat(seg, 1.2 * amp, onset, 0.012)
                        + _beat(seg, -0.2 * amp, onset + 0.03, 0.01)
                        + _beat(seg, 0.3 * amp, onset + 0.25, 0.05))
    chans = []
    for c in range(n_channels):
        gain = 1.0 - 0.3 * c
        drift = drift_mv * np.sin(2 * np.pi * 0.2 * t + rng.uniform(0, 2 * np.pi))
        chans.append(gain * base + drift + rng.normal(0, noise_mv, n))
    names = [f"lead{c + 1}" for c in range(n_channels)]
    return EcgRecord(np.array(chans), fs, names, label, subject_id)
