"""Tests for MGMC."""
