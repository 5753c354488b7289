"""INI-style experiment configuration with dotted-key overrides.

A configuration is a set of ``[section]`` blocks of ``key = value`` lines.
Anything not given falls back to :data:`DEFAULTS`.  Overrides use
``section.key=value``.
"""

import configparser
import io

from .encoder import LayerSpec

DEFAULTS = {
    "experiment": {
        "mode": "single",  # single | two_layer | multi_resolution
        "seed": "0",
        "train_images": "0",  # 0 = all available
        "test_images": "0",
        "features": "phi1+phi2",  # two_layer only: phi1 | phi2 | phi1+phi2
        "snapshots": "",  # comma-separated layer-1 patch counts
        "n_jobs": "1",
    },
    "data": {"dir": ""},
    "layer1": {
        "receptive_field": "6",
        "neurons": "100",
        "whiten": "true",
        "epsilon": "0.1",
        "var_floor": "10",
        "patches": "200000",
        "train_sweeps": "50",
        "infer_sweeps": "10",
        "cd_tolerance": "1e-6",
        "y_hat_init": "1e-3",
    },
    "layer2": {
        "receptive_field": "2",
        "neurons": "50",
        "whiten": "true",
        "epsilon": "0.1",
        "var_floor": "1e-3",
        "patches": "200000",
        "train_sweeps": "50",
        "infer_sweeps": "10",
        "cd_tolerance": "1e-6",
        "y_hat_init": "1e-3",
    },
    "multi_resolution": {
        "receptive_fields": "4,6,8",
        "neurons": "1600",
    },
    "svm": {"reg": "1e-4", "epochs": "20", "tune": "false"},
    "sweep": {
        "receptive_fields": "4,5,6,7,8,9",
        "neurons": "400,500,600,800",
        "whiten": "true,false",
    },
}


class Config:
    def __init__(self, text=None, overrides=()):
        self._cp = configparser.ConfigParser(interpolation=None)
        self._cp.read_dict(DEFAULTS)
        if text:
            self._cp.read_string(text)
        for item in overrides:
            self.set_override(item)

    @classmethod
    def from_file(cls, path=None, overrides=()):
        text = None
        if path:
            with open(path) as f:
                text = f.read()
        return cls(text, overrides)

    def set_override(self, item):
        key, sep, value = item.partition("=")
        section, dot, name = key.strip().partition(".")
        if not sep or not dot:
            raise ValueError(f"override {item!r} is not of the form section.key=value")
        if not self._cp.has_section(section):
            self._cp.add_section(section)
        self._cp.set(section, name, value.strip())

    def get(self, section, key):
        return self._cp.get(section, key)

    def int(self, section, key):
        return self._cp.getint(section, key)

    def float(self, section, key):
        return self._cp.getfloat(section, key)

    def bool(self, section, key):
        return self._cp.getboolean(section, key)

    def list(self, section, key, cast=str):
        raw = self._cp.get(section, key)
        return [cast(v.strip()) for v in raw.split(",") if v.strip()]

    def bools(self, section, key):
        states = configparser.ConfigParser.BOOLEAN_STATES
        return [states[v.lower()] for v in self.list(section, key)]

    def layer_spec(self, section, channels, **changes):
        fields = dict(
            receptive_field=self.int(section, "receptive_field"),
            channels=channels,
            neurons=self.int(section, "neurons"),
            whiten=self.bool(section, "whiten"),
            epsilon=self.float(section, "epsilon"),
            var_floor=self.float(section, "var_floor"),
            train_sweeps=self.int(section, "train_sweeps"),
            infer_sweeps=self.int(section, "infer_sweeps"),
            cd_tolerance=self.float(section, "cd_tolerance"),
            y_hat_init=self.float(section, "y_hat_init"),
        )
        fields.update(changes)
        return LayerSpec(**fields)

    def dumps(self):
        buf = io.StringIO()
        self._cp.write(buf)
        return buf.getvalue()
