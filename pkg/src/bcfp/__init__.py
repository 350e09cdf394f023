"""Bond-centered (BCFP) and atom-centered (ECFP) count fingerprints with a
random-forest benchmark harness."""

__version__ = "0.1.0"
