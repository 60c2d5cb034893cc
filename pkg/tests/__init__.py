"""Tests for Mixed IGA."""
