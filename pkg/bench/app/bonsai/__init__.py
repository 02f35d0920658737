"""Bonsai: a shallow tree of node predictors over a sparse projection."""
from app.core.serialization import register_codec
from app.bonsai.codec import BonsaiCodec
from app.bonsai.model import (
    BonsaiModel, BonsaiSpec, bonsai_footprint, bonsai_loss, bonsai_predict, hard_path,
)
from app.bonsai.search import BonsaiSweep, bonsai_search, bonsai_sweep, select_for_budget, sweep_specs
from app.bonsai.training import bonsai_train

register_codec(BonsaiCodec(), BonsaiModel)
