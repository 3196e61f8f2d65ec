import os

from dotenv import find_dotenv, load_dotenv

from src.errors import InputError

load_dotenv(find_dotenv())

# Enumeration limits
MAX_CLIENTS = int(os.getenv("CDX_MAX_CLIENTS", "14"))
MAX_PACKETS = int(os.getenv("CDX_MAX_PACKETS", str(2**20)))

# Coding simulation defaults
FIELD_BITS = int(os.getenv("CDX_FIELD_BITS", "16"))
MAX_RETRIES = int(os.getenv("CDX_MAX_RETRIES", "3"))

# Sweep fan-out (0 means one process per CPU)
SWEEP_WORKERS = int(os.getenv("CDX_SWEEP_WORKERS", "0"))

# Redis configuration
REDIS_URL = os.getenv("REDIS_URL", "redis://localhost:6379/0")

# Field moduli: x^8+x^4+x^3+x^2+1 and x^16+x^5+x^3+x^2+1
IRREDUCIBLE_POLYS = {
    8: 0x11D,
    16: 0x1002D,
}


def get_irreducible_poly(bits: int) -> int:
    """
    Return the fixed irreducible polynomial for GF(2^bits).

    Only the two published widths are supported so that simulation
    reports stay reproducible across installs.
    """
    try:
        return IRREDUCIBLE_POLYS[bits]
    except KeyError:
        raise InputError(
            f"Unsupported field width {bits}; expected one of {sorted(IRREDUCIBLE_POLYS)}",
            field="field_bits",
        ) from None
