"""Large-lambda concentration experiment."""
