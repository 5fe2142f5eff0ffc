"""Power-minimizing secure multiuser MISO downlink with cooperative jamming."""

from .config import (PhysicalConstants, PowerLimits, TopologyConfig,
                     dbm_to_watt, watt_to_dbm)
from .channel import (ChannelSet, NodePositions, assemble_channel_set,
                      correlated_eve_channel, friis_path_loss, realize_channels,
                      sample_topology)
from .precoding import (PrecoderSet, build_cfj_precoders, build_precoders,
                        build_zfbf_precoders, null_space_basis, zf_mrc_precoder)
from .metrics import (EveStatistics, PowerAllocation, SecrecySpec,
                      achievable_secrecy_rate, audit_known_ecsi,
                      audit_unknown_ecsi, build_eve_statistics,
                      empirical_outage, estimate_eve_covariance,
                      markov_outage_lhs, mutual_information, outage_threshold,
                      sinr_bob, sinr_eve)
from .allocation import (GridOracleResult, LinearProgram, LineSearchOptions,
                         SolveReport, build_lp_known_ecsi, build_lp_unknown_ecsi,
                         line_search_randomization, lp_grid_oracle, solve_lp)
from .scheduling import (ScheduleDecision, build_scheduled_problem, long_run_rate,
                         reduce_to_schedule, run_scheduled_blocks,
                         select_closest_bobs)
from .harness import (ExperimentConfig, ExperimentResult, ResultRow, ConfigError,
                      emit_results, load_config, parse_results_csv, run_experiment)

__version__ = "0.1.0"
