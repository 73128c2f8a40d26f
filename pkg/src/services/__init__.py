# Storage, simulation and summary services
