"""Homotopy solver for programs with complementarity constraints."""
