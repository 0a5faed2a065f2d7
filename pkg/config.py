import logging
import os
from dotenv import load_dotenv

load_dotenv()

class Config:
    # Numerical tolerances
    HERMITIAN_TOL = 1e-12
    TRACE_TOL = 1e-12
    PSD_TOL = 1e-10  # absorbs eigensolver noise
    LEGENDRE_SLACK = 1e-12
    CG_ZERO_TOL = 1e-12

    # Angular-momentum kernel
    LN_FACTORIAL_TABLE_SIZE = 200  # covers layers up to S = 50

    # Conditioning of the per-order systems
    COND_WARN = 1e3
    COND_MAX = 1e6

    # Measurement-direction design
    DESIGN_RESTARTS = 16
    DESIGN_ITERATIONS = 400
    DESIGN_COND_CAP = 50.0
    DESIGN_SOFTMIN_SHARPNESS = 40.0

    # Wave-plate gadget solver
    DECOMPOSE_TOL = 1e-12
    DECOMPOSE_MAX_RESTARTS = 64
    DECOMPOSE_ACCEPT = 1e-9

    # Intensity moments may dip this far below zero from rounding
    MOMENT_TOL = 1e-9

    # Reconstruction
    DEFAULT_LAMBDA = float(os.getenv('POLARISCOPE_LAMBDA', '0.0'))

    # Verification
    VERIFY_THRESHOLD = 1e-8

    # Logging
    LOG_DIR = os.getenv('POLARISCOPE_LOG_DIR', './logs')

    @classmethod
    def threads(cls) -> int:
        """Worker cap for direction sweeps"""
        try:
            return max(1, int(os.getenv('POLARISCOPE_THREADS', '1')))
        except ValueError:
            return 1

    @classmethod
    def log_level(cls) -> int:
        level = logging.getLevelName(os.getenv('POLARISCOPE_LOG_LEVEL', 'INFO').upper())
        return level if isinstance(level, int) else logging.INFO

    @classmethod
    def is_development(cls):
        return os.getenv('ENVIRONMENT', 'development') == 'development'
