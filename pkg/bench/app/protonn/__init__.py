"""ProtoNN: sparse projection, learned prototypes, Gaussian-kernel scores."""
from app.core.serialization import register_codec
from app.protonn.codec import ProtoNNCodec
from app.protonn.model import ProtoNNModel, protonn_footprint, protonn_loss, protonn_predict
from app.protonn.search import (
    ProtoNNSpec, feasible_grid, full_grid, protonn_grid_search, protonn_sweep, select_for_budget,
)
from app.protonn.training import protonn_train

register_codec(ProtoNNCodec(), ProtoNNModel)
