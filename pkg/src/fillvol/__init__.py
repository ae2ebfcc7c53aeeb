"""Filling volumes of random cycles."""
