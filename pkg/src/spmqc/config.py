"""JSON session configuration.

Layout::

    {
      "channel": {"delta": 0.2, "eta_d": 0.6, "e0": 0.5, "e_det": 0.0131,
                  "p_d": 1e-6, "e_d": 0.015},
      "session": {"distance_km": 20, "basis": "X", "check_bases": ["X", "Y", "Z"],
                  "incum": true, "message_bits": 64, "repetition": 3,
                  "check_fraction": 0.5, "integrity_fraction": 0.1,
                  "dber_threshold": null, "qber_threshold": null,
                  "max_attempts": 5, "bootstrap_key": null,
                  "bootstrap_capacity_factor": 0.5, "record_transcript": true,
                  "n_frames": 20, "seed": 0},
      "attack": null | {"fraction": 1.0, "eve_bases": ["Z", "X"]}
    }

Every key is optional; missing keys take the defaults above.
"""

from __future__ import annotations

import dataclasses
import json

from .channel import ChannelParams, ModelError
from .protocol.engine import ConfigError, SessionConfig
from .protocol.events import InterceptResend

_CHANNEL_KEYS = {f.name for f in dataclasses.fields(ChannelParams)}
_SESSION_KEYS = {f.name for f in dataclasses.fields(SessionConfig)} - {"params", "attack"}
_RUN_KEYS = {"n_frames", "seed"}
_NUMBER = (int, float)


def _typed(path, value, kind):
    if kind is float and (isinstance(value, bool) or not isinstance(value, _NUMBER)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if kind is bool and not isinstance(value, bool):
        raise ConfigError(path, f"expected true/false, got {value!r}")
    return float(value) if kind is float else value


_SESSION_TYPES = {
    "distance_km": float,
    "incum": bool,
    "message_bits": int,
    "repetition": int,
    "check_fraction": float,
    "integrity_fraction": float,
    "max_attempts": int,
    "bootstrap_capacity_factor": float,
    "record_transcript": bool,
    "n_frames": int,
    "seed": int,
}


def parse_channel(data: dict, path: str = "channel") -> ChannelParams:
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    for key in data:
        if key not in _CHANNEL_KEYS:
            raise ConfigError(f"{path}.{key}", "unknown key")
    values = {k: _typed(f"{path}.{k}", v, float) for k, v in data.items()}
    try:
        return ChannelParams(**values)
    except ModelError as exc:
        name = str(exc).split()[0]
        raise ConfigError(f"{path}.{name}", str(exc)) from None


def parse_config(data: dict) -> tuple[SessionConfig, dict]:
    """Build a SessionConfig plus run options (``n_frames``, ``seed``) from a parsed JSON object."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected an object")
    for key in data:
        if key not in ("channel", "session", "attack"):
            raise ConfigError(key, "unknown section")
    params = parse_channel(data.get("channel", {}))
    sess = data.get("session", {})
    if not isinstance(sess, dict):
        raise ConfigError("session", "expected an object")
    kwargs, run = {}, {"n_frames": 20, "seed": 0}
    for key, value in sess.items():
        path = f"session.{key}"
        if key not in _SESSION_KEYS | _RUN_KEYS:
            raise ConfigError(path, "unknown key")
        if key in _SESSION_TYPES:
            value = _typed(path, value, _SESSION_TYPES[key])
        elif key in ("dber_threshold", "qber_threshold") and value is not None:
            value = _typed(path, value, float)
        elif key == "check_bases":
            if not isinstance(value, list):
                raise ConfigError(path, "expected a list of basis names")
            value = tuple(value)
        elif key in ("basis", "bootstrap_key") and value is not None and not isinstance(value, str):
            raise ConfigError(path, "expected a string")
        if key in _RUN_KEYS:
            run[key] = value
        else:
            kwargs[key] = value
    if run["n_frames"] < 0:
        raise ConfigError("session.n_frames", "must be >= 0")
    attack = data.get("attack")
    if attack is not None:
        if not isinstance(attack, dict):
            raise ConfigError("attack", "expected an object or null")
        for key in attack:
            if key not in ("fraction", "eve_bases"):
                raise ConfigError(f"attack.{key}", "unknown key")
        try:
            kwargs["attack"] = InterceptResend(
                fraction=_typed("attack.fraction", attack.get("fraction", 1.0), float),
                eve_bases=tuple(attack.get("eve_bases", ("Z", "X"))),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("attack", str(exc)) from None
    return SessionConfig(params=params, **kwargs), run


def load_config(path) -> tuple[SessionConfig, dict]:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    return parse_config(data)


def config_to_dict(cfg: SessionConfig, run: dict | None = None) -> dict:
    session = {k: getattr(cfg, k) for k in sorted(_SESSION_KEYS)}
    session["check_bases"] = list(cfg.check_bases)
    if run:
        session.update(run)
    attack = None
    if cfg.attack is not None:
        attack = {"fraction": cfg.attack.fraction, "eve_bases": list(cfg.attack.eve_bases)}
    return {"channel": cfg.params.to_dict(), "session": session, "attack": attack}
