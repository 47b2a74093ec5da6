"""Cech-complex topological features for multi-channel ECG classification."""
