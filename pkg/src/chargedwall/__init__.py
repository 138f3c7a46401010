"""Charged domain walls in thin ferromagnetic strips."""
