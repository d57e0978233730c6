"""Ends and edge-ends of finitely presented infinite graphs.

The package computes end spaces and edge-end spaces of a small class of
infinite graphs, runs the clique-expansion and dominator-duplication
transformations between them, and implements order-tree ray spaces with
the end game and its strategy-tree reconstruction.
"""

__version__ = "0.1.0"
