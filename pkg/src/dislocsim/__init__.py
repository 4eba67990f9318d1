"""Dislocation-density parabolic system: simulator and verification suite."""
