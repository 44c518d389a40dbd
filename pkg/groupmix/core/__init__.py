"""
Core groupmix classes: measures, moment tensors, counterexample
construction, identifiability tests and group simulation.
"""

from .measures import DiscreteMeasure, Mixture, SignedMixture, canonicalize
from .tensor import MomentTensor, group_law, marginalize
from .construct import CounterexamplePair, CounterexampleSpec, build_counterexample
from .identify import check_equal_laws, confusability_search, independence_certificate, reduce_common
from .simulate import GroupDataset, bernoulli_reduce, empirical_moment, sample_groups

__all__ = [
    'DiscreteMeasure',
    'Mixture',
    'SignedMixture',
    'canonicalize',
    'MomentTensor',
    'group_law',
    'marginalize',
    'CounterexamplePair',
    'CounterexampleSpec',
    'build_counterexample',
    'check_equal_laws',
    'confusability_search',
    'independence_certificate',
    'reduce_common',
    'GroupDataset',
    'bernoulli_reduce',
    'empirical_moment',
    'sample_groups',
]
