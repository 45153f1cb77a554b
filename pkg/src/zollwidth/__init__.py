"""Width-isospectral Zoll metrics on the 2-sphere: construction and numerical checks."""
