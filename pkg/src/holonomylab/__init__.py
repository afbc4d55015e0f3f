"""holonomylab: numerical workbench for wave-type Lorentzian metrics.

Builds product-type Lorentzian metrics over Riemannian factors, computes
their holonomy algebras from curvature and parallel transport, classifies
the result against the admissible stabilizer subalgebras, and runs causal
structure checks (cone bounds, time functions, causal diamonds).
"""

__version__ = "0.1.0"
