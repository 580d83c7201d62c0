import os
from dotenv import load_dotenv

load_dotenv()

class Config:
    # Numerics
    DEFAULT_GRID = int(os.environ.get('OPTWANNIER_GRID', 100))
    THREADS = int(os.environ.get('OPTWANNIER_THREADS', os.cpu_count() or 1))
    GAP_TOL = float(os.environ.get('OPTWANNIER_GAP_TOL', 1e-8))
    SOLVABILITY_TOL = float(os.environ.get('OPTWANNIER_SOLVABILITY_TOL', 1e-8))
    WINDING_TOL = float(os.environ.get('OPTWANNIER_WINDING_TOL', 0.1))

    # Wannier function rendering
    ORBITAL_SIGMA = float(os.environ.get('OPTWANNIER_ORBITAL_SIGMA', 0.3))  # in units of min |a_i|
    WANNIER_WINDOW = int(os.environ.get('OPTWANNIER_WINDOW', 8))
    WANNIER_RESOLUTION = int(os.environ.get('OPTWANNIER_RESOLUTION', 12))  # samples per lattice length

    # Output
    OUTPUT_DIR = os.environ.get('OPTWANNIER_OUTPUT_DIR') or './output'
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO').upper()

    # Application
    DEBUG = os.environ.get('DEBUG', 'false').lower() == 'true'
    HOST = os.environ.get('HOST', '127.0.0.1')
    PORT = int(os.environ.get('PORT', 5000))

    # Largest grid accepted over HTTP
    MAX_GRID = int(os.environ.get('MAX_GRID', 512))
