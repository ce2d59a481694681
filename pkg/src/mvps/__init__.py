"""Measure-valued Polya urn sequences on finite and binned real state spaces."""
from .errors import (
    Degenerate,
    EdgeMaximum,
    Flat,
    HorizonExceeded,
    MvpsError,
    NotConstantMass,
    NotSufficient,
    OutOfRange,
    ZeroMass,
    ZeroMassBlock,
)
from .measure import Kernel, Measure, StateSpace, condition, kernel_apply, mix, normalize, total_variation
from .partitions import Partition, bell_number, conditional_kernel, enumerate_partitions, recover_partition
from .process import (
    Iid,
    Mvps,
    MvpsSpec,
    Sufficientness,
    Trajectory,
    joint_probability,
    mvps_coefficients,
    predictive,
    rebalance,
    sample,
)

__version__ = "0.1.0"
