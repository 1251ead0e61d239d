"""Numerical analysis of jumping normal bundles and the meromorphic Obata connection."""

__version__ = "0.1.0"

from .errors import JumpfoldError  # noqa: F401
from .families import (CehFamily, FlatFamily, Point, ProjFamily, family_from_spec,  # noqa: F401
                       section_eval, section_jacobian, tau_invariant_point)
from .kronecker import (build_frame, complex_structure, distribution_integrability,  # noqa: F401
                        find_jump, logarithmic_test, nijenhuis_norm)
from .obata import (conjugated_connection, obata_christoffel, pole_order_fit,  # noqa: F401
                    residue_estimate, symbol_identity_check)
from .splitting import classify_point, h_sequence, splitting_from_h  # noqa: F401
