from .quasi_newton import OptimOptions, OptimReport, minimize, DENSE_LIMIT
