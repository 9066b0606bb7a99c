"""Integer-lattice edge weightings whose shortest-path metric tracks Euclidean distance."""
from .grid import DenseWeights, Rect, WeightGrid, distance_field

__version__ = "0.1.0"

__all__ = ["DenseWeights", "Rect", "WeightGrid", "distance_field", "__version__"]
