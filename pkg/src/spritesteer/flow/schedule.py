"""The fixed few-step denoising schedule."""

from dataclasses import dataclass

from ..errors import ConfigurationError

DEFAULT_SIGMAS = (1.0, 0.75, 0.5, 0.25)


@dataclass(frozen=True)
class NoiseSchedule:
    """Descending noise scales; inference starts from pure noise (sigma=1)."""

    sigmas: tuple = DEFAULT_SIGMAS

    def __post_init__(self):
        s = tuple(float(v) for v in self.sigmas)
        if len(s) == 0:
            raise ConfigurationError("schedule must contain at least one step")
        if s[0] != 1.0:
            raise ConfigurationError(f"schedule must start at 1.0, got {s[0]}")
        if any(not (0.0 < v <= 1.0) for v in s):
            raise ConfigurationError(f"sigmas must lie in (0, 1]: {s}")
        if any(a <= b for a, b in zip(s, s[1:])):
            raise ConfigurationError(f"sigmas must be strictly decreasing: {s}")
        object.__setattr__(self, "sigmas", s)

    def __len__(self):
        return len(self.sigmas)

    def to_list(self):
        return list(self.sigmas)
