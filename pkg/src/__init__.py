# bagforge - gene-guided, origin-robust multiple-instance training engine

__version__ = "0.1.0"
