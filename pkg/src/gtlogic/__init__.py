"""Graph transformers, GPS networks and GNNs over exact floats, with logic compilers."""
__version__ = "0.1.0"
