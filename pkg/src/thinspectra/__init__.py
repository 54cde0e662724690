"""Numerical verification of limit spectra for the Laplacian on a thin
two-cylinder multidomain: rescaled finite-parameter eigensolves, exact limit
problems, and convergence studies."""

from .assembly import ConstraintSet, Pencil, assemble_pencil, build_constraints
from .eigensolve import Spectrum, dense_oracle, smallest_eigenpairs
from .geometry import (Geometry, Grading, Interval, Mesh, MeshLevels, Rect,
                       Regime, RegimeSchedule, ThinParams, make_geometry,
                       make_mesh, make_schedule)
from .limit_spectra import (LimitEigenvalue, LimitEigenvector, LimitSpectrum,
                            coupled_junction_spectrum, cross_section_dirichlet,
                            gathered_spectrum, junction_characteristic,
                            junction_matrix, limit_inner_products,
                            rod_dirichlet_dirichlet, rod_neumann_dirichlet)
from .study import (CorrectorNorms, MeshPolicy, SolverOptions, StudyReport,
                    corrector_check, match_spectra, orthonormality_check,
                    run_convergence_study, solve_at)

__version__ = "0.1.0"
