"""Hierarchical highway construction."""
from .assemble import (OFF_HIGHWAY, HighwayCollision, HighwayWeights, assemble_weights,
                       build_highways, collision_audit)
from .lines import (FatRegion, LeveledSegments, LineSpec, enumerate_lines, highway_weight,
                    trim_lines)
from .params import LevelParams, build_level_params
from .raster import max_discrepancy, raster_cells, rasterize_highway
from .ring import RingTilingWeights, ring_tiles, ring_tiling_weights
from .verify import (LowerBoundViolation, VerifyReport, network_upper_bound,
                     random_highway_discrepancy, same_line_gaps, sample_pairs,
                     separation_audit, verify_guarantees)
