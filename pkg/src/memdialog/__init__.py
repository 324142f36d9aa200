"""Goal-oriented dialog system: Memory Network encoder with candidate
selection or word-by-word response generation, trained from scratch."""

__version__ = "0.1.0"
