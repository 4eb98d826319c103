"""stimtomo commands."""

from stimtomo.commands.config import config_command
from stimtomo.commands.experiment import experiment_command
from stimtomo.commands.reconstruct import reconstruct_command
from stimtomo.commands.simulate import simulate_command
from stimtomo.commands.validate import validate_command

__all__ = [
    "config_command",
    "experiment_command",
    "reconstruct_command",
    "simulate_command",
    "validate_command",
]
