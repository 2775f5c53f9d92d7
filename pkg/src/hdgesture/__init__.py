"""Limb-position-aware EMG gesture classification with hyperdimensional computing."""
