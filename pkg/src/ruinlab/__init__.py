"""Ruin, overshoot and two-regime functionals of Markov-modulated risk processes."""
