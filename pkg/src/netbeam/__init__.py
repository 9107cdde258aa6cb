"""Power control and link-level simulation for two-step amplify-and-forward
relay beamforming under per-node power constraints."""

from .beamsolver import (
    DegenerateRelayError,
    PowerAllocation,
    PowerBudget,
    ResourceLimitError,
    SolverWorkspace,
    build_workspace,
    larsson_alloc,
    oracle_grid,
    phi_statistic,
    receive_snr_no_dl,
    select_best_relay,
    solve_no_dl,
)
from .channel import (
    ChannelRealization,
    RelayPlacement,
    RngSeed,
    Topology,
    TopologyKind,
    path_loss_amplitude,
    realize,
    sample_disk_placement,
    sample_rayleigh,
)
from .cli import ConfigError, ExperimentConfig, gap_at_bler, parse_config, run
from .dlsolver import (
    Alpha0Root,
    DlAllocation,
    DlWorkspace,
    HighSnrCoeffs,
    IterationControl,
    alpha0_high_snr,
    build_dl_workspace,
    high_snr_coeffs,
    optimize_alpha0_second,
    psi,
    solve_dl_both,
    solve_dl_first,
    solve_dl_second,
    solve_relays_fixed_alpha0,
)
from .feedback import (
    FeedbackMessage,
    FeedbackVariant,
    ProtocolError,
    bit_cost,
    deserialize_message,
    encode_index_list,
    encode_threshold,
    relay_apply,
    serialize_message,
)
from .montecarlo import (
    BlerCurve,
    EstimationError,
    Scheme,
    TrialOutcome,
    diversity_slope,
    estimate_bler,
    mrc_decode,
    run_trial,
    wilson_interval,
)

__version__ = "0.1.0"
