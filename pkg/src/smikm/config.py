"""Pipeline parameters and the flat ``key=value`` config file format."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .bovw import DEFAULT_K
from .errors import ParameterError
from .features import DEFAULT_WEIGHTS, HS_BINS, LBP_BINS
from .keypoints import DOG_THRESHOLD, MAX_KEYPOINTS, PATCH_SIDE
from .moments import MULTI_ORDER, SINGLE_ORDER


@dataclass(frozen=True)
class Config:
    patch_side: int = PATCH_SIDE
    vocab_k: int = DEFAULT_K
    ikm_mode: str = "single"
    hs_bins: int = HS_BINS
    lbp_bins: int = LBP_BINS
    weights: tuple[float, ...] = DEFAULT_WEIGHTS
    seed: int = 42
    max_keypoints: int = MAX_KEYPOINTS
    dog_threshold: float = DOG_THRESHOLD
    skip_grayscale: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.ikm_mode not in ("single", "multi"):
            raise ParameterError(f"ikm_mode must be 'single' or 'multi', got {self.ikm_mode!r}")
        if len(self.weights) != 8:
            raise ParameterError("weights needs exactly 8 values")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @property
    def order_pairs(self):
        return MULTI_ORDER if self.ikm_mode == "multi" else SINGLE_ORDER

    @property
    def descriptor_dim(self) -> int:
        return 6 * len(self.order_pairs)

    def with_lbp_sm_weight(self, value: float) -> "Config":
        w = list(self.weights)
        w[7] = float(value)
        return replace(self, weights=tuple(w))

    def snapshot(self) -> dict[str, str]:
        """String form of the parameters that shape an index (stored in it)."""
        out = {}
        for key, value in asdict(self).items():
            if key == "workers":
                continue
            out[key] = ",".join(repr(float(v)) for v in value) if key == "weights" else str(value)
        return out


_BOOL = {"1": True, "true": True, "yes": True, "0": False, "false": False, "no": False}


def _coerce(name: str, raw: str):
    types = {f.name: f.type for f in fields(Config)}
    raw = raw.strip()
    if name == "weights":
        return tuple(float(v) for v in raw.split(","))
    kind = types[name]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        try:
            return _BOOL[raw.lower()]
        except KeyError:
            raise ParameterError(f"{name}: expected a boolean, got {raw!r}") from None
    return raw


def parse_config(text: str, base: Config | None = None) -> Config:
    """Read ``key=value`` lines; ``#`` starts a comment.

    ``lbp_sm_weight`` is accepted as a shortcut for the last fusion weight
    and is applied after ``weights``.
    """
    known = {f.name for f in fields(Config)}
    values = {}
    lbp_sm = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {lineno}: expected key=value")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key == "lbp_sm_weight":
            lbp_sm = float(raw)
        elif key in known:
            try:
                values[key] = _coerce(key, raw)
            except ValueError as exc:
                raise ParameterError(f"line {lineno}: {exc}") from None
        else:
            raise ParameterError(f"line {lineno}: unknown key {key!r}")
    cfg = replace(base or Config(), **values)
    if lbp_sm is not None:
        cfg = cfg.with_lbp_sm_weight(lbp_sm)
    return cfg


def load_config(path) -> Config:
    return parse_config(Path(path).read_text())


def config_from_snapshot(snapshot) -> Config:
    text = "\n".join(f"{k}={v}" for k, v in snapshot.items() if k in {f.name for f in fields(Config)})
    return parse_config(text)
