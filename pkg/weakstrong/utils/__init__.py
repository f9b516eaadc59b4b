"""Utility modules for configuration, files and report text."""
