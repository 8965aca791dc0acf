"""Link-level mmWave ISAC simulator with compressed-sampling channel recovery."""

from isac_sim.array_channel import (
    ArrayGeometry,
    ChannelRealization,
    ChannelScenario,
    CirTensor,
    LinkKind,
    PathComponent,
    RaisedCosinePulse,
    generate_channel,
    sample_cir,
    steering_vector,
    upa_steering,
    virtual_angles,
)
from isac_sim.dictionary import (
    Dictionary,
    ambiguity_set,
    build_dictionary,
    correlation_profile,
    dirichlet_kernel,
)
from isac_sim.doppler import (
    DataPhaseBeams,
    DopplerSeries,
    UnreliableEstimate,
    build_data_beams,
    compensate_doppler,
    crb_reference,
    estimate_doppler,
    los_estimate_from_channel,
    schedule_uts,
    simulate_impulse_pilots,
)
from isac_sim.experiments import (
    ExperimentConfig,
    Fig10Row,
    MetricRecord,
    TrialFailure,
    preset_config,
    run_experiment,
    write_csv,
)
from isac_sim.link_sim import (
    CommObservation,
    QuantizerSpec,
    RadarObservation,
    quantize,
    simulate_radar_rx,
    simulate_ut_rx,
)
from isac_sim.metrics import ase, nmse
from isac_sim.ofdm import BerResult, simulate_ofdm_ber
from isac_sim.recovery import (
    LosEstimate,
    RecoveryResult,
    block_omp,
    ce_ut,
    ind2sub,
    omp_plain,
    omp_sr,
)
from isac_sim.waveform import (
    MeasurementMatrices,
    PilotFrame,
    PilotFrameParams,
    build_measurement_matrices,
    schedule_pilots,
    transmit_pilot,
)

__all__ = [
    "ArrayGeometry",
    "BerResult",
    "ChannelRealization",
    "ChannelScenario",
    "CirTensor",
    "CommObservation",
    "DataPhaseBeams",
    "Dictionary",
    "DopplerSeries",
    "ExperimentConfig",
    "Fig10Row",
    "LinkKind",
    "LosEstimate",
    "MeasurementMatrices",
    "MetricRecord",
    "PathComponent",
    "PilotFrame",
    "PilotFrameParams",
    "QuantizerSpec",
    "RadarObservation",
    "RaisedCosinePulse",
    "RecoveryResult",
    "TrialFailure",
    "UnreliableEstimate",
    "ambiguity_set",
    "ase",
    "block_omp",
    "build_data_beams",
    "build_dictionary",
    "build_measurement_matrices",
    "ce_ut",
    "compensate_doppler",
    "correlation_profile",
    "crb_reference",
    "dirichlet_kernel",
    "estimate_doppler",
    "generate_channel",
    "ind2sub",
    "los_estimate_from_channel",
    "nmse",
    "omp_plain",
    "omp_sr",
    "preset_config",
    "quantize",
    "run_experiment",
    "sample_cir",
    "schedule_pilots",
    "schedule_uts",
    "simulate_impulse_pilots",
    "simulate_ofdm_ber",
    "simulate_radar_rx",
    "simulate_ut_rx",
    "steering_vector",
    "transmit_pilot",
    "upa_steering",
    "virtual_angles",
    "write_csv",
]
