"""Direct-to-event spiking network transfer toolkit."""

from ._d2e import (
    ConfigError,
    DivergenceError,
    IoError,
    capacity_bound,
    cost_from_flops,
    count_sops,
    count_ttfs_codewords,
    encode_direct,
    encode_dvs,
    encode_ttfs,
    estimate_energy,
    gen_synthetic,
    kl,
    pinsker_check,
    run_subcommand,
    subcommands,
    ttfs_spike_time,
    tv,
)

__all__ = [
    "ConfigError",
    "DivergenceError",
    "IoError",
    "capacity_bound",
    "cost_from_flops",
    "count_sops",
    "count_ttfs_codewords",
    "encode_direct",
    "encode_dvs",
    "encode_ttfs",
    "estimate_energy",
    "gen_synthetic",
    "kl",
    "pinsker_check",
    "run_subcommand",
    "subcommands",
    "ttfs_spike_time",
    "tv",
]
