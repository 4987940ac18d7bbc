"""Link budgets, cooperative spectrum sensing, radio environment maps and
scenario evaluation for rapidly deployable airborne emergency networks."""

from ._accel import NUMBA_ENABLED, backend_name
from .errors import DomainError, GridSizeError, ReportError, ScenarioError
from .linkbudget import (AerialPlatform, LinkBudgetParams, SnrGrid, contour_radius_m,
                         extract_isolines, free_space_path_loss_db, received_power_dbm,
                         snr_db, snr_grid, thermal_noise_dbm)
from .sensing import (EnergyDetector, FusionModel, FusionRule, LocalDecision,
                      energy_statistic, false_alarm_prob_printed, fuse,
                      fusion_probs_closed_form, local_decision, local_pd,
                      miss_prob_printed, roc_curve, simulate_detection, simulate_fusion,
                      threshold_for_pfa)
from .rem import (GridSpec, OccupancyTable, ReportStore, SensorReport,
                  build_occupancy_table, free_channels, ingest_report, interpolate_map)
from .deployment import (BackhaulLink, DsaPolicy, Scenario, backhaul_delay_s,
                         best_server_association, evaluate_scenario, select_channel)

__version__ = "0.1.0"
