"""Tests for stimtomo."""
