"""Unit tests for the link engine."""
