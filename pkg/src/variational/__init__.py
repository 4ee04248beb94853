"""Surface tension and the limit-shape variational problem."""
