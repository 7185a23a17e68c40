"""Agent-based limit order book simulation and liquidity risk analysis."""

__version__ = "0.1.0"

from .agents import (ChiarellaParams, EmpiricalOrderDistribution,
                     FundamentalState, MomentumState, RateProfile, ZIParams)
from .book import BUY, SELL, L2Snapshot, Order, OrderBook, Trade
from .bundle import CalibrationBundle
from .calibration import (CalibrationResult, ImpactModel, build_distributions,
                          calibrate_chiarella, estimate_rates,
                          extract_fundamental_proxy, fit_impact)
from .errors import ConfigurationError, DegenerateDataError, LobsimError
from .execution import (ExecutionRecord, ExecutionSchedule, MetaOrder,
                        build_daily_schedule, build_uniform_schedule,
                        build_vwap_slices)
from .risk import (BloombergTCParams, CostRecord, LiquidityRiskSurface,
                   bloomberg_tc, build_surface, decompose, efficient_frontier,
                   implementation_shortfall, market_setup_from_bundle,
                   mean_impact_curves, run_paired, run_simulation)
from .rng import SeedSet
from .session import SessionSpec
from .simulator import MarketSetup, SimResult, run_market
from .stylized import (FactGrids, FactWeights, StylizedFactVector,
                       compute_stylized_facts, facts_distance)
from .surrogate import SurrogateResult, minimize_surrogate
