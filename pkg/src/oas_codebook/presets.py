"""Ready-made sweeps for the standard experiments (N = 200, rho = 0.1, sigma2 = 0.01)."""

from . import reference
from .harness import ExperimentSpec, spec_from_dict

_COMMON = {"N": 200, "sigma2": 0.01, "rho": 0.1}

PRESETS = {
    # MSE vs L for compression rates 1, 2, 4, 5 (M = 80, S = 1000, random selection)
    **{
        f"fig1{tag}": {
            "base": {**_COMMON, "R": R, "L": min(reference.MSE_VS_L[R]), "M": 80, "S": 1000},
            "sweep": {"param": "L", "values": sorted(reference.MSE_VS_L[R])},
            "strategies": ["random"],
            "baselines": ["reference"],
        }
        for tag, R in zip("abcd", (1, 2, 4, 5))
    },
    "fig2": {
        "base": {**_COMMON, "R": 4, "L": 25, "M": 60, "S": 1000},
        "sweep": {"param": "S", "values": sorted(reference.MSE_VS_S)},
        "strategies": ["random"],
        "baselines": ["reference"],
    },
    "fig3": {
        "base": {**_COMMON, "R": 4, "L": 25, "M": 60, "S": 1000},
        "sweep": {"param": "M", "values": sorted(reference.MSE_VS_M[1000])},
        "strategies": ["random"],
        "baselines": ["reference"],
    },
    "fig3-s500": {
        "base": {**_COMMON, "R": 4, "L": 25, "M": 60, "S": 500},
        "sweep": {"param": "M", "values": sorted(reference.MSE_VS_M[500])},
        "strategies": ["random"],
        "baselines": ["reference"],
    },
    "fig4": {
        "base": {**_COMMON, "R": 4, "L": 30, "M": 20, "S": 500},
        "sweep": {"param": "L", "values": sorted(reference.MSE_VS_L_BY_STRATEGY["random"])},
        "strategies": ["random", "stepwise"],
        "baselines": ["reference"],
    },
}


def preset(name: str, **overrides) -> ExperimentSpec:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return spec_from_dict({**PRESETS[name], "name": name, **overrides})
