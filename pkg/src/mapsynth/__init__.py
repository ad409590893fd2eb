"""mapsynth: discover project-join queries that satisfy multiresolution constraints."""

__version__ = "0.1.0"
