import os
from dotenv import load_dotenv

load_dotenv()

class Config:
    """Application configuration"""

    # Output
    OUT_DIR = os.getenv("WLLN_OUT_DIR", "results")

    # Monte Carlo engine
    THREADS = int(os.getenv("WLLN_THREADS", 1))
    CHUNK_REPS = int(os.getenv("WLLN_CHUNK_REPS", 64))  # replications per worker chunk
    MIN_REPS = 100

    # Convergence verdict thresholds
    CONVERGE_UPPER = float(os.getenv("WLLN_CONVERGE_UPPER", 0.05))
    DIVERGE_LOWER = float(os.getenv("WLLN_DIVERGE_LOWER", 0.2))

    # Regularization grid for slowly varying functions
    SV_GRID_STEP = float(os.getenv("WLLN_SV_GRID_STEP", 0.01))
    SV_GRID_MAX = float(os.getenv("WLLN_SV_GRID_MAX", 1e6))

    # de Bruijn fixed point
    FIXED_POINT_DAMPING = float(os.getenv("WLLN_FIXED_POINT_DAMPING", 0.5))
    FIXED_POINT_MAX_ITER = int(os.getenv("WLLN_FIXED_POINT_MAX_ITER", 200))

    # Quadrature
    QUAD_EPSREL = float(os.getenv("WLLN_QUAD_EPSREL", 1e-10))
    QUAD_EPSABS = float(os.getenv("WLLN_QUAD_EPSABS", 1e-14))

    # Index horizon when a sup over a varying family has no closed form
    FAMILY_SCAN = int(float(os.getenv("WLLN_FAMILY_SCAN", 1e6)))

    @classmethod
    def validate(cls):
        """Validate configuration values"""
        if cls.THREADS < 1:
            raise ValueError("WLLN_THREADS must be >= 1")
        if cls.CHUNK_REPS < 1:
            raise ValueError("WLLN_CHUNK_REPS must be >= 1")
        if not 0 < cls.CONVERGE_UPPER < 1 or not 0 < cls.DIVERGE_LOWER < 1:
            raise ValueError("verdict thresholds must lie in (0, 1)")
        if cls.CONVERGE_UPPER >= cls.DIVERGE_LOWER:
            raise ValueError("WLLN_CONVERGE_UPPER must be below WLLN_DIVERGE_LOWER")
        if cls.SV_GRID_STEP <= 0 or cls.SV_GRID_MAX <= cls.SV_GRID_STEP:
            raise ValueError("invalid regularization grid")
        return True

config = Config()
