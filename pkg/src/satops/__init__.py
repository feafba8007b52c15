"""On-demand satellite operations platform.

Pass prediction and imaging-opportunity search from orbital elements,
a session database with request lifecycle and interference resolution,
a command-template language compiled to uploadable CMD files, simulated
ground-station tracking with downlink accounting, and an HTTP + CLI face.
"""

__version__ = "0.1.0"
