"""Tree GP laboratory for the Boolean 6-multiplexer.

Bit-parallel fitness over all 64 cases at once, compact one-byte-per-node
postfix genomes, a crossover-only generational engine built for very long
runs, and the measurement suite around it (introns, evolved constants,
effective code, size/depth statistics and their reference curves).
"""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
