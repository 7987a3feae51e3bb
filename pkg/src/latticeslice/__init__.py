"""Dimensions of leveled lattice sets and their slices by width-1 tubes."""
