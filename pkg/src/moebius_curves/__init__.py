"""Conformal (Möbius) geometry of curves in the n-sphere and conformal geodesics."""

from .conformal import (
    ConformalFrenetData,
    VertexError,
    classify_degeneracy,
    osculating_sphere,
    reconstruct_from_invariants,
    reduce_frames,
    trace_invariant,
)
from .euclidean import conformal_density, euclidean_frenet, mu1_from_euclidean, total_twist
from .geodesics import (
    AdmissibleTriple,
    InadmissibleTriple,
    build_geodesic,
    classify_triple,
    conserved_omega,
    degenerate_q3_curvatures,
    el_residual,
    lax_matrix,
    solve_curvatures,
    triple_from_roots,
    verify_codimension_reduction,
)
from .lorentz import (
    LightRay,
    LorentzVector,
    MoebiusElement,
    act,
    inner,
    is_moebius,
    metric,
    random_moebius,
    spectral_split,
)
from .models import Curve, SampledCurve, derivatives_from_samples, read_csv

__version__ = "0.1.0"
