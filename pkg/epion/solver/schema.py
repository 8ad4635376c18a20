"""Euler-Poisson ion lab - simulation configuration"""

import math
import logging
from epion.elliptic import EllipticConfig
from epion.paley import NormParams
from epion.misc import ConfigError, validate

# Module's logger
LOGGER = logging.getLogger(__name__)

# Initial data profile shapes
PROFILES = ("gaussian", "random")


class InitialData:
    """Parameters of the initial data generator"""

    # JSON schema for initial data parameters
    JSON_SCHEMA = {
        "type": "object",
        "properties": {
            "amplitude": {"type": "number", "minimum": 0},
            "profile": {"enum": list(PROFILES)},
            "width": {"type": "number", "exclusiveMinimum": 0},
            "band": {"type": "number", "exclusiveMinimum": 0},
            "gamma0": {"type": "boolean"},
        },
        "additionalProperties": False,
    }

    # pylint: disable=too-many-arguments
    def __init__(self, amplitude=1e-2, profile="gaussian", width=2.0,
                 band=2.0, gamma0=False):
        """
        Initialize the parameters.

        Args:
            amplitude:  The energy norm of the initial U.
            profile:    "gaussian" for a Gaussian in both rho and psi, or
                        "random" for seeded band-limited noise under a
                        Gaussian window.
            width:      The width of the Gaussian (window).
            band:       The largest frequency magnitude of random data.
            gamma0:     Concentrate random data on frequencies near gamma0,
                        if true.

        Raises:
            ConfigError if the parameters are invalid.
        """
        if not amplitude >= 0:
            raise ConfigError(f"Amplitude must be non-negative, "
                              f"got {amplitude!r}")
        if profile not in PROFILES:
            raise ConfigError(f"Unknown profile {profile!r}")
        if not width > 0 or not band > 0:
            raise ConfigError("Width and band must be positive")
        self.amplitude = amplitude
        self.profile = profile
        self.width = width
        self.band = band
        self.gamma0 = bool(gamma0)

    @classmethod
    def from_json(cls, data):
        """
        Create parameters from their JSON representation.

        Raises:
            ConfigError if the JSON is invalid.
        """
        return cls(**validate(data, cls.JSON_SCHEMA))

    def to_json(self):
        """Get the JSON representation"""
        return dict(amplitude=self.amplitude, profile=self.profile,
                    width=self.width, band=self.band, gamma0=self.gamma0)


class SimConfig:
    """Simulation configuration"""

    # JSON schema for the configuration
    JSON_SCHEMA = {
        "type": "object",
        "properties": {
            "grid": {"type": "integer", "minimum": 8},
            "domain_length": {"type": "number", "exclusiveMinimum": 0},
            "dt": {
                "anyOf": [
                    {"type": "number", "exclusiveMinimum": 0},
                    {"const": "auto"},
                ]
            },
            "t_end": {"type": "number", "minimum": 0},
            "dealias": {
                "type": "object",
                "properties": {
                    "padding": {"type": "number", "minimum": 1},
                    "filter_order": {"type": "integer", "minimum": 0},
                },
                "additionalProperties": False,
            },
            "diagnostics_every": {"type": "integer", "minimum": 1},
            "snapshot_every": {"type": "integer", "minimum": 0},
            "initial_data": InitialData.JSON_SCHEMA,
            "elliptic": EllipticConfig.JSON_SCHEMA,
            "norm_params": NormParams.JSON_SCHEMA,
            "z_k_range": {
                "anyOf": [
                    {
                        "type": "array",
                        "items": {"type": "integer",
                                  "minimum": -20, "maximum": 20},
                        "minItems": 2, "maxItems": 2,
                    },
                    {"type": "null"},
                ]
            },
        },
        "required": ["grid", "domain_length", "t_end"],
        "additionalProperties": False,
    }

    # pylint: disable=too-many-arguments,too-many-locals
    # pylint: disable=too-many-instance-attributes
    def __init__(self, grid, domain_length, t_end, dt="auto",
                 dealias=None, diagnostics_every=10, snapshot_every=0,
                 initial_data=None, elliptic=None, norm_params=None,
                 z_k_range=(-2, 2)):
        """
        Initialize the configuration.

        Args:
            grid:               The grid size, a power of two.
            domain_length:      The periodic domain length.
            t_end:              The simulated horizon.
            dt:                 The time step, or "auto" to pick the
                                largest stable one.
            dealias:            A dictionary with the "padding" factor of
                                nonlinear terms and the exponential
                                "filter_order" (zero disables the filter),
                                or None for the defaults.
            diagnostics_every:  Number of steps between diagnostics
                                records.
            snapshot_every:     Number of records between snapshots of U,
                                zero for none.
            initial_data:       The InitialData, None for the default.
            elliptic:           The EllipticConfig of the potential solves,
                                None for a tolerance of 1e-12.
            norm_params:        The NormParams of the recorded norms, None
                                for the default.
            z_k_range:          The (min, max) frequency shells of the
                                recorded Z-norm, None to skip it.

        Raises:
            ConfigError if the configuration is invalid.
        """
        if not (isinstance(grid, int) and grid >= 8 and
                not grid & (grid - 1)):
            raise ConfigError(f"Grid size {grid!r} is not a power of two")
        if not domain_length > 0 or not t_end >= 0:
            raise ConfigError("Domain length must be positive and the "
                              "horizon non-negative")
        if dt != "auto" and not (isinstance(dt, (int, float)) and dt > 0):
            raise ConfigError(f"Time step must be positive, got {dt!r}")
        dealias = dict(dict(padding=2.0, filter_order=0), **(dealias or {}))
        if not dealias["padding"] >= 1 or \
           not (isinstance(dealias["filter_order"], int) and
                dealias["filter_order"] >= 0):
            raise ConfigError(f"Invalid dealiasing {dealias!r}")
        if not (isinstance(diagnostics_every, int) and
                diagnostics_every >= 1 and
                isinstance(snapshot_every, int) and snapshot_every >= 0):
            raise ConfigError("Invalid diagnostics or snapshot cadence")
        if z_k_range is not None and z_k_range[0] > z_k_range[1]:
            raise ConfigError(f"Empty Z-norm shell range {z_k_range!r}")
        self.grid = grid
        self.domain_length = float(domain_length)
        self.t_end = float(t_end)
        self.dt = dt
        self.padding = float(dealias["padding"])
        self.filter_order = dealias["filter_order"]
        self.diagnostics_every = diagnostics_every
        self.snapshot_every = snapshot_every
        self.initial_data = initial_data or InitialData()
        self.elliptic = elliptic or EllipticConfig(tol=1e-12)
        self.norm_params = norm_params or NormParams()
        self.z_k_range = None if z_k_range is None else tuple(z_k_range)
        assert isinstance(self.initial_data, InitialData)
        assert isinstance(self.elliptic, EllipticConfig)
        assert isinstance(self.norm_params, NormParams)

    def steps(self, dt):
        """
        Get the number of steps covering the horizon with steps no longer
        than dt, and the step length dividing the horizon evenly.
        """
        assert dt > 0
        count = max(int(math.ceil(self.t_end / dt - 1e-9)), 1)
        return count, self.t_end / count

    @classmethod
    def from_json(cls, data):
        """
        Create a configuration from its JSON representation.

        Raises:
            ConfigError if the JSON is invalid.
        """
        data = dict(validate(data, cls.JSON_SCHEMA))
        for name, config_type in (("initial_data", InitialData),
                                  ("elliptic", EllipticConfig),
                                  ("norm_params", NormParams)):
            if name in data:
                data[name] = config_type.from_json(data[name])
        return cls(**data)

    def to_json(self):
        """Get the JSON representation"""
        return dict(
            grid=self.grid, domain_length=self.domain_length,
            t_end=self.t_end, dt=self.dt,
            dealias=dict(padding=self.padding,
                         filter_order=self.filter_order),
            diagnostics_every=self.diagnostics_every,
            snapshot_every=self.snapshot_every,
            initial_data=self.initial_data.to_json(),
            elliptic=self.elliptic.to_json(),
            norm_params=self.norm_params.to_json(),
            z_k_range=None if self.z_k_range is None
            else list(self.z_k_range),
        )
