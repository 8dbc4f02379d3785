"""levylab operational scripts."""
