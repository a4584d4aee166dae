from . import protocol
from .server import EchoBackend, StreamServer, echo_factory, model_factory
from .store import (
    CheckpointStore,
    load_codec,
    load_model,
    load_probe,
    save_codec,
    save_model,
    save_probe,
)

__all__ = [
    "protocol", "EchoBackend", "StreamServer", "echo_factory", "model_factory",
    "CheckpointStore", "load_codec", "load_model", "load_probe",
    "save_codec", "save_model", "save_probe",
]
