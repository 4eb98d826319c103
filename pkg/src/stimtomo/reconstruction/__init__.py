"""Probability extraction and physical least-squares reconstruction."""
