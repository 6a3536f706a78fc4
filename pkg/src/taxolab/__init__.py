"""Interactive taxonomy workbench.

Core engine for turning heterogeneous text descriptors into a curated
classification: descriptor cleaning and deduplication, per-model embedding
handling, exact nearest-neighbour search, 2D projection grids with cluster
overlays, and the iterative accept/reject session protocol.
"""

__version__ = "0.1.0"
