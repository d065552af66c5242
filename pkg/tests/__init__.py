"""Tests for the drift Green's function laboratory."""
