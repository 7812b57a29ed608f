"""Random walks, Schreier graphs and intersectional IRS diagnostics on free groups."""

__version__ = "0.1.0"

from .words import ResourceError, ball, ball_size, format_word, parse_word, rad, reduce_word  # noqa: E402
from .nilquot import NilElement, nil_mul, nil_project, pi_s  # noqa: E402
from .walks import StepLaw, geodesic_tail, law_from_spec, lazy, make_rng, srw  # noqa: E402

__all__ = [
    "__version__", "ResourceError", "ball", "ball_size", "format_word", "parse_word", "rad", "reduce_word",
    "NilElement", "nil_mul", "nil_project", "pi_s",
    "StepLaw", "geodesic_tail", "law_from_spec", "lazy", "make_rng", "srw",
]
