# app/config.py
import os
from dotenv import load_dotenv

load_dotenv()  # a .env next to the working directory only changes defaults


def _float_env(name: str, default: str) -> float:
    raw = os.getenv(name, default)
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{name} must be a number, got {raw!r}")


def _int_env(name: str, default: str) -> int:
    raw = os.getenv(name, default)
    try:
        return int(float(raw))
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}")


QUAD_TOL = _float_env("HYPSPIKE_TOL", "1e-10")
KERNEL_TOL = _float_env("HYPSPIKE_KERNEL_TOL", "1e-12")
SERIES_KMAX = _int_env("HYPSPIKE_SERIES_KMAX", "5000")
NODE_BUDGET = _int_env("HYPSPIKE_NODE_BUDGET", str(2 ** 18))
MC_SAMPLES = _int_env("HYPSPIKE_SAMPLES", str(10 ** 6))
MC_SEED = _int_env("HYPSPIKE_SEED", "20140101")
MC_CHUNK = _int_env("HYPSPIKE_MC_CHUNK", "65536")
LOG_LEVEL = os.getenv("HYPSPIKE_LOG_LEVEL", "WARNING").upper()

if QUAD_TOL <= 0 or KERNEL_TOL <= 0:
    raise ValueError("HYPSPIKE_TOL and HYPSPIKE_KERNEL_TOL must be positive")
if SERIES_KMAX < 1 or NODE_BUDGET < 16 or MC_CHUNK < 1:
    raise ValueError("HYPSPIKE_SERIES_KMAX, HYPSPIKE_NODE_BUDGET and HYPSPIKE_MC_CHUNK must be positive")
