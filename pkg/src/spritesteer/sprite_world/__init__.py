from .clip import Clip, ClipMeta, SpriteClass, generate_clip, quantize, validate_dims
from .dataset import DatasetSpec, build_dataset, load_clips, read_index
from .io import read_clip, write_clip
from .raster import backend_name, cursor_mask

__all__ = [
    "Clip", "ClipMeta", "SpriteClass", "generate_clip", "quantize",
    "validate_dims", "DatasetSpec", "build_dataset", "load_clips",
    "read_index", "read_clip", "write_clip", "backend_name", "cursor_mask",
]
