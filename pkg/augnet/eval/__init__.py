"""Link-prediction metrics, node classification and experiment sweeps."""
