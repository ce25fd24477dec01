"""Scalable actor-critic for networked multi-agent MDPs, plus exact oracles."""
from .errors import (ConfigError, ModelClassError, NetacError, NonErgodicError, NumericalError,
                     SizeGuardError)
from .graph import InteractionGraph, kappa_neighborhood
from .indexing import MixedRadixIndex, mixed_radix_decode, mixed_radix_encode
from .model import (AgentSpace, FactoredMdp, LocalKernel, LocalReward, joint_transition_prob,
                    load_model, sample_step, save_model)
from .policy import SoftmaxPolicy, grad_log_policy, policy_distribution

__version__ = "0.1.0"
