"""mmWave leaf water content sensing toolkit.

Subpackages:
    em          dielectric models, Fresnel/Snell primitives
    leaf        two-layer leaf backscatter model
    radar       FMCW chirp simulation and range processing
    rawio       raw ADC capture container (LFRD)
    beam        Tx steering phases and Capon AoA estimation
    features    feature tensors, scaling, split protocols
    dataset     dataset container (LFDS), manifest, CSV export
    net         fusion regression network with analytic gradients
    train       AdamW, LR schedule, early stopping, ablation variants
    experiments leaf presets, capture pipeline, fold runner, reports
    cli         command-line entry point
"""

__version__ = "0.1.0"
