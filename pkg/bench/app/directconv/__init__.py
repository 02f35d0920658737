"""Direct-convolution CNNs: architectures, in-place execution and search."""
from app.core.serialization import register_codec
from app.directconv.arch import ArchSpec, LayerSpec, enumerate_models, format_arch, parse_arch
from app.directconv.codec import CnnCodec
from app.directconv.executor import forward_inplace, forward_naive
from app.directconv.model import CnnModel
from app.directconv.planner import (
    TraversalPlan, activation_peak, cnn_footprint, plan_herringbone, plan_traversal,
)
from app.directconv.search import sampling_search
from app.directconv.training import train_cnn

register_codec(CnnCodec(), CnnModel)
