"""Small unit helpers: byte-size and frequency parsing for the CLI layer.

Machine and kernel files always store plain numbers in fixed units (bytes,
Hz, cycles, watts); these parsers exist only for human-facing arguments.
Size suffixes are binary (kB = 1024 B), matching common benchmarking usage.
"""

import re

LINE_SIZE_BYTES = 64  # cache line size, global constant for all machines

_SIZE_FACTORS = {
    "": 1,
    "b": 1,
    "kb": 1024,
    "mb": 1024**2,
    "gb": 1024**3,
}

_FREQ_FACTORS = {
    "hz": 1.0,
    "khz": 1e3,
    "mhz": 1e6,
    "ghz": 1e9,
}


def parse_size(text: str | int) -> int:
    """Parse '10kB', '1 GB', '512' ... into bytes (binary prefixes)."""
    if isinstance(text, int):
        return text
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+)\s*([a-zA-Z]*)\s*", text)
    if not m:
        raise ValueError(f"cannot parse size {text!r}")
    value, suffix = float(m.group(1)), m.group(2).lower()
    if suffix not in _SIZE_FACTORS:
        raise ValueError(f"unknown size suffix {suffix!r} in {text!r}")
    return int(round(value * _SIZE_FACTORS[suffix]))


def parse_frequency(text: str | float) -> float:
    """Parse '2.3GHz', '1200 MHz', '2.3e9' ... into Hz."""
    if isinstance(text, (int, float)):
        return float(text)
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*([a-zA-Z]*)\s*", text)
    if not m:
        raise ValueError(f"cannot parse frequency {text!r}")
    value, suffix = float(m.group(1)), m.group(2).lower()
    if suffix == "":
        return value
    if suffix not in _FREQ_FACTORS:
        raise ValueError(f"unknown frequency suffix {suffix!r} in {text!r}")
    return value * _FREQ_FACTORS[suffix]


def format_hz(hz: float) -> str:
    if hz >= 1e9:
        return f"{hz / 1e9:.2f} GHz"
    if hz >= 1e6:
        return f"{hz / 1e6:.0f} MHz"
    return f"{hz:.0f} Hz"
