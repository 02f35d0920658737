"""Layer vocabulary, serial architecture patterns and the text notation.

Text form: `A,C1(6,3),C1(32,1),M,C2(64,3),Dr,D(32),D*`. C layers print
(output_dim, kernel), D layers print output_dim.
"""
from dataclasses import dataclass
from functools import lru_cache
import itertools
import re

from app.core.config import Config
from app.core.errors import ShapeMismatchError, SpecError

POOL_KINDS = ("A", "M")
CONV_KINDS = ("C1", "C2")
KINDS = ("A", "M", "D", "D*", "C1", "C2", "Dr")

CONV_DIMS = (4, 6, 8, 10, 12, 16, 32, 64)
DENSE_DIMS = (16, 32, 64)
KERNELS = {"C1": (1, 3, 5), "C2": (3, 5)}

# "C" is either C1 or C2
PATTERNS = (
    "A,C,C,C,M,Dr,D*",
    "A,C,M,D,Dr,D*",
    "A,C,D,Dr,D*",
    "A,C,M,C,Dr,D*",
    "A,C,C,M,Dr,D*",
    "A,C,C,Dr,D*",
    "A,D,D,D,Dr,D*",
    "A,C,M,C,D,Dr,D*",
    "A,C,D,D,Dr,D*",
    "A,C,M,D,D,D*",
    "A,C,C,M,D,D*",
    "A,C,C,D,D*",
    "A,C,M,C,C,Dr,D*",
    "A,C,C,M,C,Dr,D*",
    "A,D,D,Dr,D*",
    "A,C,C,C,Dr,D*",
)


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    output_dim: int | None = None
    kernel: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown layer kind {self.kind!r}")
        if self.kind in CONV_KINDS:
            if self.output_dim not in CONV_DIMS:
                raise SpecError(f"{self.kind} output_dim {self.output_dim} not in {CONV_DIMS}")
            if self.kernel not in KERNELS[self.kind]:
                raise SpecError(f"{self.kind} kernel {self.kernel} not in {KERNELS[self.kind]}")
        elif self.kind == "D":
            if self.output_dim not in DENSE_DIMS or self.kernel is not None:
                raise SpecError(f"D output_dim {self.output_dim} not in {DENSE_DIMS}")
        elif self.kind == "D*":
            if self.output_dim not in (None, Config.NUM_CLASSES) or self.kernel is not None:
                raise SpecError("D* has a fixed output_dim of 10")
            object.__setattr__(self, "output_dim", Config.NUM_CLASSES)
        elif self.output_dim is not None or self.kernel is not None:
            raise SpecError(f"{self.kind} takes no parameters")

    @property
    def is_conv(self):
        return self.kind in CONV_KINDS

    @property
    def is_pool(self):
        return self.kind in POOL_KINDS

    @property
    def is_dense(self):
        return self.kind in ("D", "D*")

    def __str__(self):
        if self.is_conv:
            return f"{self.kind}({self.output_dim},{self.kernel})"
        if self.kind == "D":
            return f"D({self.output_dim})"
        return self.kind


def output_shape(layer: LayerSpec, in_shape):
    """Shape after `layer`; spatial shapes are (H, W, C), flat ones (N,)."""
    if layer.kind == "Dr":
        return in_shape
    if layer.is_dense:
        return (layer.output_dim,)
    if len(in_shape) != 3:
        raise ShapeMismatchError(f"{layer} needs a spatial input, got {in_shape}")
    h, w, c = in_shape
    if layer.is_pool:
        if h < 2 or w < 2:
            raise ShapeMismatchError(f"{layer} cannot pool a {h}x{w} input")
        return (h // 2, w // 2, c)
    k = layer.kernel
    if h < k or w < k:
        raise ShapeMismatchError(f"{layer} kernel {k} exceeds a {h}x{w} input")
    return (h - k + 1, w - k + 1, layer.output_dim)


def param_count(layer: LayerSpec, in_shape) -> int:
    if layer.kind == "C1":
        return layer.kernel * layer.kernel * in_shape[2] * layer.output_dim + layer.output_dim
    if layer.kind == "C2":
        c = in_shape[2]
        return layer.kernel * layer.kernel * c + c * layer.output_dim + layer.output_dim
    if layer.is_dense:
        n = 1
        for s in in_shape:
            n *= s
        return n * layer.output_dim + layer.output_dim
    return 0


@dataclass(frozen=True)
class ArchSpec:
    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers or layers[-1].kind != "D*":
            raise SpecError("an architecture must end in D*")
        if any(layer.kind == "D*" for layer in layers[:-1]):
            raise SpecError("D* may only appear as the final layer")

    def shapes(self, input_shape=Config.INPUT_SHAPE):
        """[(in_shape, out_shape)] per layer; raises ShapeMismatchError if the chain breaks."""
        out = []
        shape = tuple(input_shape)
        for layer in self.layers:
            if len(shape) == 1 and not (layer.is_dense or layer.kind == "Dr"):
                raise ShapeMismatchError(f"{layer} cannot follow a dense layer")
            nxt = output_shape(layer, shape)
            out.append((shape, nxt))
            shape = nxt
        return out

    def is_valid(self, input_shape=Config.INPUT_SHAPE) -> bool:
        try:
            self.shapes(input_shape)
        except ShapeMismatchError:
            return False
        return True

    def param_count(self) -> int:
        return sum(param_count(layer, s_in) for layer, (s_in, _) in zip(self.layers, self.shapes()))

    @property
    def pattern(self):
        return ",".join("C" if layer.is_conv else layer.kind for layer in self.layers)

    def __str__(self):
        return format_arch(self)


_TOKEN = re.compile(r"^(A|M|Dr|D\*|D\((\d+)\)|(C1|C2)\((\d+),(\d+)\))$")


def parse_layer(token: str) -> LayerSpec:
    m = _TOKEN.match(token.strip())
    if not m:
        raise SpecError(f"cannot parse layer {token!r}")
    whole, dense_dim, conv_kind, conv_dim, conv_k = m.groups()
    if dense_dim is not None:
        return LayerSpec("D", int(dense_dim))
    if conv_kind is not None:
        return LayerSpec(conv_kind, int(conv_dim), int(conv_k))
    return LayerSpec(whole)


def parse_arch(text: str) -> ArchSpec:
    # split on commas outside parentheses
    tokens = re.findall(r"[^,(]+(?:\([^)]*\))?", text.replace(" ", ""))
    if not tokens or ",".join(tokens) != text.replace(" ", ""):
        raise SpecError(f"cannot parse architecture {text!r}")
    return ArchSpec(tuple(parse_layer(t) for t in tokens))


def format_arch(arch: ArchSpec) -> str:
    return ",".join(str(layer) for layer in arch.layers)


def _slot_options(slot):
    if slot == "C":
        c1 = [LayerSpec("C1", d, k) for d in CONV_DIMS for k in KERNELS["C1"]]
        c2 = [LayerSpec("C2", d, k) for d in CONV_DIMS for k in KERNELS["C2"]]
        return c1 + c2
    if slot == "D":
        return [LayerSpec("D", d) for d in DENSE_DIMS]
    return [LayerSpec(slot)]


def expand_pattern(pattern: str, input_shape=Config.INPUT_SHAPE):
    """Every shape-valid instantiation of one serial pattern, in slot order."""
    options = [_slot_options(slot) for slot in pattern.split(",")]
    for combo in itertools.product(*options):
        arch = ArchSpec(combo)
        if arch.is_valid(input_shape):
            yield arch


@lru_cache(maxsize=4)
def _enumerate(patterns, input_shape):
    seen = dict.fromkeys(arch for pattern in patterns for arch in expand_pattern(pattern, input_shape))
    return tuple(seen)


def enumerate_models(patterns=PATTERNS, input_shape=Config.INPUT_SHAPE):
    """All shape-valid architectures of the serial patterns, deduplicated, in pattern order."""
    return list(_enumerate(tuple(patterns), tuple(input_shape)))
