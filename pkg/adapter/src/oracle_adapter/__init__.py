from .adapter import AdapterConfig, load_predictor, serve

__version__ = "0.1.0"
