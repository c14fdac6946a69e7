"""Forward evaluation of MLPs, attention, GT / GPS / GNN layers and networks."""
from .backends import (
    ATTENTION_KINDS,
    DOUBLE,
    EXACT,
    Backend,
    DoubleBackend,
    ExactBackend,
    ExactTranscendental,
    FloatBackend,
    backend_from_spec,
)
from .forward import (
    AlphabetMismatch,
    aggregate,
    attention_forward,
    classify,
    classify_arrays,
    forward_arrays,
    head_forward,
    layer_forward,
    mlp_forward,
    mp_forward,
    network_forward,
    output_values,
    readout_forward,
    resolve_backend,
)
from .model import (
    MLP,
    Attention,
    AttentionHead,
    BasicGPSLayer,
    GPSLayer,
    MessagePassing,
    MPLayer,
    MPReadoutLayer,
    Network,
    Perceptron,
    Readout,
    TransformerLayer,
    frac_matrix,
    identity,
    load_network,
    network_from_dict,
    network_to_dict,
    save_network,
    zeros,
)
from .rational import RatArray
