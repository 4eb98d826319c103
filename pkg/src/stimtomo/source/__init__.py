"""Photon-pair source model: true states, angular weights, seeding and loss."""
