from .engine import (
    AggregatorRegistry,
    ConfigurationError,
    Engine,
    EngineConfig,
    EngineError,
    Message,
    PartitionOutput,
    PartitionProgram,
    RunResult,
    SuperstepContext,
    VertexProgram,
    partition_vertices,
    reduce_aggregator,
    run,
)
