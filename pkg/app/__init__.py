"""Convolution Lab package."""
