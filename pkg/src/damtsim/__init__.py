"""damtsim: deterministic simulator for semantic data-source discovery across
domain ontologies in peer-to-peer networks."""

__version__ = "0.1.0"
