# src/models/params.py

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

CRITICAL_COUPLING_TOLERANCE = 1e-12


def critical_alpha(gamma: float) -> float:
    """Bessel exponent alpha = 1/2 - gamma/4 that balances u_x against Lambda^gamma."""
    return 0.5 - 0.25 * gamma


class VelocityKind(BaseModel):
    """
    Velocity law u = N(theta).

    kind = 'hilbert' gives u = H theta; kind = 'bessel' gives
    u = (1 - d_xx)^(-alpha) theta.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["hilbert", "bessel"] = "hilbert"
    alpha: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)

    @classmethod
    def hilbert(cls) -> "VelocityKind":
        return cls(kind="hilbert")

    @classmethod
    def bessel(cls, alpha: float) -> "VelocityKind":
        return cls(kind="bessel", alpha=alpha)

    @property
    def model_name(self) -> str:
        """Module name under src/models implementing this velocity law."""
        return f"{self.kind}_model"


class ModelParams(BaseModel):
    """
    Coefficients of theta_t + u theta_x + delta u_x theta + nu Lambda^gamma theta = eps theta_xx.

    ``nonlinear`` switches the transport terms off (pure linear flow) and
    ``divergence_form`` assembles them as -(u theta)_x + (1 - delta) u_x theta.
    """

    model_config = ConfigDict(frozen=True)

    gamma: float = Field(gt=0.0, le=2.0, description="Dissipation order")
    delta: float = Field(default=1.0, allow_inf_nan=False)
    nu: float = Field(default=1.0, ge=0.0, allow_inf_nan=False)
    epsilon_visc: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)
    velocity: VelocityKind = Field(default_factory=VelocityKind.hilbert)
    critical_coupling: bool = False
    nonlinear: bool = True
    divergence_form: bool = False

    @model_validator(mode="after")
    def validate_critical_coupling(self) -> "ModelParams":
        if self.critical_coupling:
            if self.velocity.kind != "bessel":
                raise ValueError("critical_coupling requires the bessel velocity")
            expected = critical_alpha(self.gamma)
            if abs(self.velocity.alpha - expected) >= CRITICAL_COUPLING_TOLERANCE:
                raise ValueError(
                    f"critical_coupling requires alpha = 1/2 - gamma/4 = {expected:.12g}, got {self.velocity.alpha:.12g}"
                )
        return self

    @property
    def is_hilbert(self) -> bool:
        return self.velocity.kind == "hilbert"

    @property
    def is_bessel(self) -> bool:
        return self.velocity.kind == "bessel"
