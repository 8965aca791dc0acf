"""INI-style config files mapping onto ExperimentConfig fields.

Sections group related knobs; every key must be a known field of its
section.  Values follow the field's type: ints, floats, booleans
(true/false), or comma-separated number lists for tuple fields.  Inline
comments after # or ; are allowed, so units can be documented next to the
values they qualify.
"""
from __future__ import annotations

import configparser

from isac_sim.experiments import ExperimentConfig


class ConfigError(Exception):
    pass


_SECTIONS = {
    "arrays": ("n_x", "n_y", "n_rf", "m_x", "m_y",
               "wsa_n_x", "wsa_n_y", "wsa_spacing"),
    "channel": ("carrier_hz", "t_s", "n_taps", "rolloff", "tau_p_taps",
                "npsd_dbm_hz", "n_clusters", "n_paths", "wsa_clusters",
                "wsa_paths", "rician_db", "ut_range_m", "tgt_range_m",
                "rcs_range_m2", "doppler_max_hz", "angle_spread_deg",
                "delay_spread_taps"),
    "waveform": ("p_len", "p_dl_dbm", "t_rf_cu", "t_rf_ut", "t_gi",
                 "gi_offset", "ideal_waveform"),
    "quantizer": ("adc_bits", "clip_scale"),
    "recovery": ("wsa_grid_ratio", "g_cu_radar", "r_dic", "n_iters",
                 "block_iters"),
    "data_phase": ("n_users", "p_ut_dbm", "p_d", "n_d", "n_symbols"),
    "monte_carlo": ("trials", "seed", "sweep"),
}

_DEFAULTS = ExperimentConfig()
_BOOL_WORDS = {"true": True, "false": False, "yes": True, "no": False,
               "1": True, "0": False, "on": True, "off": False}


def _parse_value(key, raw):
    default = getattr(_DEFAULTS, key)
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            word = raw.lower()
            if word not in _BOOL_WORDS:
                raise ValueError(f"not a boolean: {raw!r}")
            return _BOOL_WORDS[word]
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(float(tok) for tok in raw.split(",") if tok.strip())
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from exc


def load_config(path):
    """Parse one config file into an overrides dict for preset_config."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc

    overrides = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            known = ", ".join(sorted(_SECTIONS))
            raise ConfigError(f"unknown section [{section}] (known: {known})")
        allowed = _SECTIONS[section]
        for key, raw in parser.items(section):
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            overrides[key] = _parse_value(key, raw)
    return overrides
