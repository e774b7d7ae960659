"""Hyper-parameter search that ranks network configurations by a closed-form
strong-convexity proxy of the loss and fully trains only the flattest ones."""

__version__ = "0.1.0"
