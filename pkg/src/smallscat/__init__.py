"""Small-particle electromagnetic scattering and homogenization."""
