"""Compressive-sensing video codec built on a 3-D lifting DWT.

Modules: ``lifting`` (9/7 and Haar steps), ``dwt3d`` (frame-pair transform),
``cs`` (Bernoulli measurement), ``recovery`` (AMP/IHT), ``bitstream`` (CSW1
container), ``codec`` (pipelines), ``strip_sim`` (datapath model), ``cli``.
"""

__version__ = "0.1.0"
