"""Unit tests for releff."""
