"""Random polytopes in convex bodies: simulation and verification toolkit."""

from .bodies import (AffineMap, Ball, BodyError, ConversionError, ConvexBody,
                     DegenerateBodyError, Ellipsoid, HPolytope,
                     UnboundedBodyError, VPolytope, affine_image,
                     body_from_dict, load_body, save_body, unit_ball_volume)
from .ellipsoid import (ConvergenceError, MveeCertificate, enclosing_ellipsoid,
                        mvee, normalize, ratio_check)
from .experiments import (FitResult, MomentTable, ReplicateRecord, SteinerFit,
                          TailCurve, affine_invariance_test, lemma2_check,
                          lower_bound_check, moment_table, packing_fit,
                          packing_number, random_polygons, rate_fit,
                          run_missing_volume, steiner_coefficient_fit,
                          tail_curve)
from .hull import (DegenerateHullError, HullResult, SampleOutsideBodyError,
                   convex_hull, missing_volume, polytope_volume)
from .metrics import (ConstantsTable, constants, direction_net, hausdorff,
                      neighborhood_volume_2d, nikodym_2d, nikodym_mc,
                      polygon_area, polygon_intersection_area,
                      steiner_coeffs_ball)
from .sampler import (ALGORITHM_ID, EnvelopeTooLooseError, RngStream,
                      make_stream, rejection_acceptance, sample_uniform)

__version__ = "0.1.0"
