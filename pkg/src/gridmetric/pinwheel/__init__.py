"""Pinwheel tilings and their embedding into the weighted grid."""
from .embed import (INTERIOR_RANGE, OFF_PATH, SHARED, EmbeddingError, GridEmbedding, RoutingError,
                    audit_embedding, embed_into_grid, nearest_point)
from .graph import PinwheelGraph, build_pinwheel_graph, graph_from_triangles, planarity_violations
from .stretch import StretchReport, default_bins, measure_stretch, stretch_pairs
from .tiling import (GAMMA, Disk, InvalidTriangle, PinwheelTriangle, ResourceLimit, angle_distance,
                     angles_of_descendants, expand_to_cover, parent_of, progression, progression_covered,
                     subdivide, tile_window)
