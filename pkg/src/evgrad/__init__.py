"""Policy-gradient RL with variance-minimizing baseline criteria."""

__version__ = "0.1.0"
