"""Unit test package for pysqueeze."""
