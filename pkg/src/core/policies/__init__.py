from .base import EstimatorPolicy, Policy, PolicyDecision
from .baselines import OraclePolicy, RandomPolicy
from .etc import ETCPolicy, exploration_length
from .manager import ALGORITHMS, PolicyManager
from .oracle import OracleDecision, fixed_point_prices, grid_search_prices, oracle_decision
from .thompson import TSAPolicy, default_sample_count
from .ucb import UCBAELCBPPolicy, UCBALCBPPolicy, UCBAPolicy
