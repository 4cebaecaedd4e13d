"""Utility helpers for releff."""
