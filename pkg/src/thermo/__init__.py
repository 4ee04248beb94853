"""Free energy, phase diagram and their asymptotics."""
