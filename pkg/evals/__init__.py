"""Acceptance checks for the link engine."""
