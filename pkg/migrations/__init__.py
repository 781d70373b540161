"""Schema migrations for the MGMC results store."""
