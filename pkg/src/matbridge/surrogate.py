"""Analytic valve-physics stand-in for foundry, CFD and FEA data.

Every functional form here is synthetic. The constants are pinned so that the
model reproduces a handful of reported anchor values: the maximum inner-wall
stress and strain, the minimum fatigue life and the deformation at that stress.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .data import COMPOSITION_COLUMNS, COMPOSITION_RANGES, Dataset, Schema, default_schema
from .errors import ConfigurationError, DomainError

THICKNESS_GRID_M = (0.015, 0.017, 0.019, 0.021)
INNER_DIAMETER_M = 0.087
PRESSURE_RANGE_PA = (1.8e7, 3.5e7)

# anchor values at the calibration point (350 bar, 21 mm wall)
ANCHOR_STRESS_PA = 4.3302e8
ANCHOR_PRESSURE_PA = 3.5e7
ANCHOR_THICKNESS_M = 0.021
ANCHOR_LIFE_CYCLES = 2116.1

# K_t = ANCHOR_STRESS / (P * (ro^2 + ri^2) / (ro^2 - ri^2)) at the anchor point
CALIBRATED_KT = 4.636050557620818

# deformation / strain at the anchor, m
CHARACTERISTIC_LENGTH_M = 0.02734


@dataclass(frozen=True)
class ValveGeometry:
    inner_diameter: float = INNER_DIAMETER_M
    thickness: float = ANCHOR_THICKNESS_M
    stress_concentration: float = CALIBRATED_KT

    def __post_init__(self):
        if not self.thickness > 0:
            raise DomainError(f"wall thickness must be positive, got {self.thickness}")
        if not self.inner_diameter > 0:
            raise DomainError(f"inner diameter must be positive, got {self.inner_diameter}")
        if self.stress_concentration < 1:
            raise DomainError("stress concentration factor must be >= 1")

    @property
    def inner_radius(self) -> float:
        return self.inner_diameter / 2

    @property
    def outer_radius(self) -> float:
        return self.inner_radius + self.thickness


@dataclass(frozen=True)
class FluidCase:
    name: str
    density: float       # kg/m^3
    viscosity: float     # cP
    inlet_pressure: float  # Pa
    temperature: float   # deg C


FLUID_CASES = (
    FluidCase("water", 951.0, 1.0, 3.5e7, 110.0),
    FluidCase("lubricant", 875.0, 22.2, 2.8e7, 100.0),
    FluidCase("diesel", 834.0, 4.0, 1.8e7, 15.6),
)


@dataclass(frozen=True)
class StrengthModel:
    """Linear composition -> tensile strength map, MPa per mass %."""

    base: float = 250.0
    C: float = 800.0
    Mn: float = 80.0
    Cr: float = 120.0
    Mo: float = 100.0
    Ni: float = 50.0
    Si: float = 40.0
    yield_ratio: float = 0.75
    elongation_base: float = 35.0
    elongation_per_C: float = 50.0
    reduction_per_elongation: float = 1.9


@dataclass(frozen=True)
class MaterialModel:
    elastic_modulus: float = 2.0e11
    life_n0: float = ANCHOR_LIFE_CYCLES
    life_sigma_ref: float = ANCHOR_STRESS_PA
    life_exponent: float = 8.0
    cycles_per_year: float = 365.0
    characteristic_length: float = CHARACTERISTIC_LENGTH_M
    strength: StrengthModel = field(default_factory=StrengthModel)

    def __post_init__(self):
        if not (self.elastic_modulus > 0 and self.life_n0 > 0 and self.life_exponent > 0):
            raise ConfigurationError("E, N0 and the life exponent must be positive")
        if not self.cycles_per_year > 0:
            raise ConfigurationError("cycles_per_year must be positive")


@dataclass(frozen=True)
class SurrogateParams:
    sample_count: int = 146
    seed: int = 0
    noise_sigma: float = 0.01
    inner_diameter: float = INNER_DIAMETER_M
    stress_concentration: float = CALIBRATED_KT
    thicknesses: tuple[float, ...] = THICKNESS_GRID_M
    pressure_range: tuple[float, float] = PRESSURE_RANGE_PA
    material: MaterialModel = field(default_factory=MaterialModel)

    def __post_init__(self):
        if self.sample_count < 1:
            raise ConfigurationError(f"sample_count must be >= 1, got {self.sample_count}")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be nonnegative")
        lo, hi = self.pressure_range
        if not 0 < lo <= hi:
            raise ConfigurationError(f"bad pressure range {self.pressure_range}")
        if not self.thicknesses or min(self.thicknesses) <= 0:
            raise ConfigurationError("thickness grid must be nonempty and positive")

    def provenance(self) -> dict:
        d = asdict(self)
        mat = d.pop("material")
        strength = mat.pop("strength")
        d.update({f"material.{k}": v for k, v in mat.items()})
        d.update({f"strength.{k}": v for k, v in strength.items()})
        return d


def _check_composition(comp) -> dict[str, float]:
    comp = np.asarray(comp, dtype=np.float64).ravel()
    if comp.size != len(COMPOSITION_COLUMNS):
        raise DomainError(f"composition needs {len(COMPOSITION_COLUMNS)} entries, got {comp.size}")
    named = dict(zip(COMPOSITION_COLUMNS, comp.tolist()))
    for name, v in named.items():
        lo, hi = COMPOSITION_RANGES[name]
        if not lo <= v <= hi:
            raise DomainError(f"{name}={v} outside the grade range [{lo}, {hi}]")
    return named


def composition_to_properties(comp, model: StrengthModel | None = None) -> tuple[float, float, float, float]:
    """Return (TS MPa, YS MPa, EI %, RA %) for an 11-element composition in mass %."""
    m = model or StrengthModel()
    c = _check_composition(comp)
    ts = (m.base + m.C * c["C"] + m.Mn * c["Mn"] + m.Cr * c["Cr"]
          + m.Mo * c["Mo"] + m.Ni * c["Ni"] + m.Si * c["Si"])
    ei = m.elongation_base - m.elongation_per_C * c["C"]
    return ts, m.yield_ratio * ts, ei, m.reduction_per_elongation * ei


def lame_stress(geom: ValveGeometry, pressure: float) -> float:
    """Peak hoop stress at the inner wall of a thick cylinder, scaled by K_t."""
    if not pressure > 0:
        raise DomainError(f"pressure must be positive, got {pressure}")
    ri2 = geom.inner_radius ** 2
    ro2 = geom.outer_radius ** 2
    return geom.stress_concentration * pressure * (ro2 + ri2) / (ro2 - ri2)


def derived_outputs(stress: float, geom: ValveGeometry, mat: MaterialModel, ts: float):
    """Return (strain, deformation m, life cycles, service years) at ``stress``.

    ``geom`` and ``ts`` are accepted for interface stability; the default
    laws depend on stress alone.
    """
    if not stress > 0:
        raise DomainError(f"stress must be positive, got {stress}")
    strain = stress / mat.elastic_modulus
    deformation = strain * mat.characteristic_length
    life = mat.life_n0 * (mat.life_sigma_ref / stress) ** mat.life_exponent
    return strain, deformation, life, life / mat.cycles_per_year


def exact_row(comp, thickness_m: float, pressure: float, params: SurrogateParams) -> tuple[list[float], list[float]]:
    """Noise-free (inputs, outputs) for one design point."""
    mat = params.material
    ts, ys, ei, ra = composition_to_properties(comp, mat.strength)
    geom = ValveGeometry(params.inner_diameter, thickness_m, params.stress_concentration)
    stress = lame_stress(geom, pressure)
    strain, deformation, life, years = derived_outputs(stress, geom, mat, ts)
    inputs = [*np.asarray(comp, dtype=float).tolist(), ts, ys, ei, ra, thickness_m * 1000.0]
    return inputs, [stress, strain, deformation, life, years]


def _row_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, i]))


def generate_dataset(params: SurrogateParams, schema: Schema | None = None) -> tuple[Dataset, np.ndarray]:
    """Sample ``params.sample_count`` design points.

    Each row draws its own random stream from ``(seed, row index)``, so the
    output does not depend on generation order. Returns the dataset and the
    per-row inlet pressures (Pa), which are not part of the schema.
    """
    schema = schema or default_schema()
    if schema.input_names != default_schema().input_names or \
            schema.output_names != default_schema().output_names:
        raise ConfigurationError("the surrogate only emits the default column layout")
    lo_c = np.array([COMPOSITION_RANGES[n][0] for n in COMPOSITION_COLUMNS])
    hi_c = np.array([COMPOSITION_RANGES[n][1] for n in COMPOSITION_COLUMNS])
    xs, ys, ps = [], [], []
    for i in range(params.sample_count):
        rng = _row_rng(params.seed, i)
        comp = rng.uniform(lo_c, hi_c)
        thickness = params.thicknesses[int(rng.integers(len(params.thicknesses)))]
        pressure = float(rng.uniform(*params.pressure_range))
        noise = rng.standard_normal(len(schema.outputs))
        xin, yout = exact_row(comp, thickness, pressure, params)
        if params.noise_sigma:
            yout = [v * (1.0 + params.noise_sigma * e) for v, e in zip(yout, noise)]
        xs.append(xin)
        ys.append(yout)
        ps.append(pressure)
    return Dataset(schema, np.array(xs), np.array(ys)), np.array(ps)


def calibrate_kt(stress: float = ANCHOR_STRESS_PA, pressure: float = ANCHOR_PRESSURE_PA,
                 thickness: float = ANCHOR_THICKNESS_M, inner_diameter: float = INNER_DIAMETER_M) -> float:
    """Stress concentration factor that makes :func:`lame_stress` hit ``stress``."""
    nominal = lame_stress(ValveGeometry(inner_diameter, thickness, 1.0), pressure)
    return stress / nominal


def elastic_modulus_from_anchor(stress: float = ANCHOR_STRESS_PA, strain: float = 0.002165) -> float:
    return stress / strain
