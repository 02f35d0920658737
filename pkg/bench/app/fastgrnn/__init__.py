"""FastGRNN: gated recurrent cells over image rows, in three sequencing modes."""
from app.core.serialization import register_codec
from app.fastgrnn.candidates import all_candidates, build_candidates, spec_grid
from app.fastgrnn.codec import FastGrnnCodec
from app.fastgrnn.model import (
    FastGrnnCell, FastGrnnModel, FastGrnnSpec, SequenceMode, SequencePlan, cell_step,
    fastgrnn_classify, fastgrnn_footprint, fastgrnn_loss, sequence_image, sequence_plan,
)
from app.fastgrnn.search import fastgrnn_search, fastgrnn_sweep, select_for_budget
from app.fastgrnn.training import fastgrnn_train, init_fastgrnn

register_codec(FastGrnnCodec(), FastGrnnModel)
