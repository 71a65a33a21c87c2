"""Visually grounded humanoid agents at desk scale."""
