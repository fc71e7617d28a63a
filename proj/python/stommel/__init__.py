"""Stommel two-box AMOC model with ensemble data assimilation."""

from ._stommel import (  # noqa: F401
    SECONDS_PER_MONTH,
    SECONDS_PER_YEAR,
    BoxGeometry,
    ClimateScenario,
    DimensionlessState,
    FilterError,
    HarmonicCoeffs,
    ModelContext,
    ModelParams,
    NoEquilibriumError,
    NoRootError,
    NumericalBlowUp,
    OceanState,
    PhysicalConstants,
    PipelineError,
    SurfaceForcing,
    __version__,
    calibration,
    da,
    density,
    dynamics,
    experiments,
    integrate,
    model_time_to_year,
    nondimensionalize,
    obs,
    tendencies,
    transport,
    year_to_model_time,
)
