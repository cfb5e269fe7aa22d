"""Animal parameters and physical constants for the swimming energetics model.

Every quantity is SI. Derived quantities (wetted surface area, added mass,
power normalization constant) are computed once at construction so that all
downstream modules agree on them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

# Seawater density used by the added-mass and drag models, kg/m^3.
RHO_SEAWATER = 1030.0
# Kinematic viscosity of seawater near 20 degC, m^2/s.
NU_SEAWATER = 1.044e-6
# Tissue density used to default body volume from mass, kg/m^3.
TISSUE_DENSITY = 1025.0

GRAVITY = 9.81


@dataclass(frozen=True)
class AnimalParams:
    """Morphometrics and model constants for one animal.

    Parameters
    ----------
    mass : float
        Body mass, kg.
    length : float
        Body length, m.
    p_rmr : float
        Resting metabolic power, W.
    volume : float, optional
        Body volume, m^3. Defaults to ``mass / 1025`` (near-neutral tissue
        density).
    body_diameter : float, optional
        Characteristic body diameter used for the submergence ratio of the
        wave-drag factor, m. Defaults to ``0.2 * length``.
    eta_ms : float
        Chemical-to-mechanical conversion efficiency.
    eta_sp : float
        Mechanical-to-propulsive conversion efficiency.
    rho : float
        Water density, kg/m^3.
    nu : float
        Kinematic viscosity of the water, m^2/s.
    g : float
        Gravitational acceleration, m/s^2.
    """

    mass: float
    length: float
    p_rmr: float
    volume: float | None = None
    body_diameter: float | None = None
    eta_ms: float = 0.25
    eta_sp: float = 0.85
    rho: float = RHO_SEAWATER
    nu: float = NU_SEAWATER
    g: float = GRAVITY

    def __post_init__(self) -> None:
        if self.volume is None:
            object.__setattr__(self, "volume", self.mass / TISSUE_DENSITY)
        if self.body_diameter is None:
            object.__setattr__(self, "body_diameter", 0.2 * self.length)
        for name in ("mass", "length", "p_rmr", "volume", "body_diameter",
                     "rho", "nu", "g"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        for name in ("eta_ms", "eta_sp"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must be in (0, 1]")

    @property
    def surface_area(self) -> float:
        """Wetted surface area from the mass scaling 0.08 * m^0.65, m^2."""
        return 0.08 * self.mass ** 0.65

    @property
    def added_mass(self) -> float:
        """Entrained-fluid mass 0.4 * rho * V, kg."""
        return 0.4 * self.rho * self.volume

    @property
    def effective_mass(self) -> float:
        """Body mass plus added mass, kg."""
        return self.mass + self.added_mass

    @property
    def norm_constant(self) -> float:
        """Power normalization constant m * g^1.5 * L^0.5, W."""
        return self.mass * self.g ** 1.5 * self.length ** 0.5

    def with_overrides(self, **kwargs) -> "AnimalParams":
        return replace(self, **kwargs)


# Study animals: mass, length, resting metabolic power.
ANIMALS: dict[str, AnimalParams] = {
    "TT01": AnimalParams(mass=156.2, length=2.24, p_rmr=347.9),
    "TT02": AnimalParams(mass=244.7, length=2.54, p_rmr=442.9),
    "TT03": AnimalParams(mass=142.6, length=2.20, p_rmr=317.6),
}


def get_animal(name: str) -> AnimalParams:
    """Look up a named preset animal."""
    try:
        return ANIMALS[name]
    except KeyError:
        raise KeyError(
            f"unknown animal {name!r}; presets: {sorted(ANIMALS)}") from None
