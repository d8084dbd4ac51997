"""Residual bottleneck adapters inserted into a frozen image encoder.

An adapter maps a width-``c`` activation through a down-projection to a
strict bottleneck ``c_b = max(1, c // downsample_factor)``, a GELU, and an
up-projection back to ``c``, added residually:

    out = x + W_u @ gelu(W_d @ x)

The up-projection starts at zero so a freshly built adapter is the exact
identity and training departs from the frozen encoder's behaviour.
"""

import torch
from torch import nn

from ..errors import ConfigurationError, ContractViolation


def bottleneck_width(c: int, downsample_factor: int) -> int:
    return max(1, c // downsample_factor)


class Adapter(nn.Module):
    """One residual bottleneck adapter for a host layer of width ``c``."""

    def __init__(self, c: int, downsample_factor: int,
                 generator: torch.Generator | None = None):
        super().__init__()
        c_b = bottleneck_width(c, downsample_factor)
        if not c_b < c:
            raise ConfigurationError(
                f"adapter bottleneck must be strict: c_b={c_b} >= c={c}"
            )
        self.c = c
        self.c_b = c_b
        w_d = torch.empty(c_b, c, dtype=torch.float64)
        w_d.normal_(mean=0.0, std=0.02, generator=generator)
        self.W_d = nn.Parameter(w_d)
        self.W_u = nn.Parameter(torch.zeros(c, c_b, dtype=torch.float64))
        self.act = nn.GELU()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Apply the adapter to ``x`` of shape ``(..., c)``."""
        if x.shape[-1] != self.c:
            raise ContractViolation(
                f"adapter expects width {self.c}, got input width {x.shape[-1]}"
            )
        return x + self.act(x @ self.W_d.T) @ self.W_u.T


def adapter_apply(x: torch.Tensor, adapter: Adapter) -> torch.Tensor:
    """Functional form of :meth:`Adapter.forward`."""
    return adapter(x)
