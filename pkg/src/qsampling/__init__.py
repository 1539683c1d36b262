"""Classical simulation and validation of BosonSampling and IQP sampling."""

__version__ = "0.1.0"

from .boson import (
    BosonInstance,
    collision_statistics,
    distinguishable_distribution,
    event_probability,
    event_space,
    exact_distribution,
    haar_instance,
    lossy_sample,
    make_instance,
    sample,
    scattershot_instance,
    submatrix,
)
from .distribution import BitStringSpace, Distribution, OccupationSpace, SampleSet
from .iqp import (
    IQPCircuit,
    PhasePolynomial,
    full_distribution,
    output_probability,
    random_family1,
    random_family2,
    random_sparse,
    sample_iqp,
)
from .matrices import embed_scaled, haar_unitary, perturb_unitary, reck_decompose, reck_reconstruct
from .permanent import permanent_fast, permanent_magnitude_squared, permanent_naive
from .stats import tv_distance
