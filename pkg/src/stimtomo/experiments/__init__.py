"""Scripted QST-vs-SET experiments, reports and the acceptance suite."""
