"""Simulated QST counts and SET intensities, and the records CSV contract."""
