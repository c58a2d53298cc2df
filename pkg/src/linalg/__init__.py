# Core linear algebra: points, norm geometries, trust-region steps
