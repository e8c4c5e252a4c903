"""Photonic reservoir reinforcement learning simulator."""
