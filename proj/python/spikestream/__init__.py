from ._spikestream import (
    Error,
    Event,
    EventStream,
    Geometry,
    PspKernel,
    RunConfig,
    WeightMatrix,
    __version__,
    classify,
    classify_stream,
    concatenate,
    detect_peak,
    evaluate_voltage,
    generate_dataset,
    parse_config,
    parse_stream,
    preset,
    read_weights,
    serialize_stream,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
