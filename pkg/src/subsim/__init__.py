"""Deterministic, headless underwater simulation kernel.

Modules: geodesy (WGS 84 <-> Pseudo-Mercator), bathymetry (heightmaps,
depth queries, ray casting), tiling (terrain mesh tiles with dynamic
load/unload), currents (stratified + tidal + Gauss-Markov), dvl, sonar,
lidar, coupling (plug-and-socket state machine), meshtools (distortion),
and scenario (YAML-driven runs, also behind the `subsim` CLI).
"""

__version__ = "0.1.0"
