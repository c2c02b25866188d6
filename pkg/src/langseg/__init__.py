"""Language-guided segmentation refinement toolkit.

Submodules:

* grid         - raster types, boundaries, morphology, metrics
* cluster      - granularity-controlled seed clustering
* refine       - iterative directional expand/shrink refinement
* commands     - command grammar, program text format
* executor     - program execution over an image/mask/roi environment
* acquisition  - budgeted roi selection (entropy, random)
* simulate     - expert feedback synthesis from ground truth
* classify     - linear softmax pixel classifier
* adapt        - active-domain-adaptation loop
* effort       - annotation-effort estimation
* phantoms     - synthetic datasets and prediction perturbations
* formats      - PGM / FMAP / config file formats
* service      - HTTP refinement session facade
"""

from .grid import Direction, Roi, dice  # noqa: F401

__version__ = "0.1.0"
