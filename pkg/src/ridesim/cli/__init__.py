"""CLI package for ridesim."""
