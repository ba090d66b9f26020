"""Scenario files: TOML load, validate and save.

Schema (``schema_version = 1``)::

    schema_version = 1
    name = "scenario1"
    description = "free text"            # optional
    protocol = "secbeam"                 # sls | auth_sls | secbeam
    trials = 1000

    [params]
    epsilon_db = 6.557
    beta = 0.5
    l_alpha = 8                          # authenticator bytes
    seed = 1                             # 0 <= seed < 2**64
    secret_hex = "..."                   # optional, >= 16 bytes
    benign_twin = true                   # also run each trial without the adversary

    [environment]
    room_size_m = [5.0, 5.0]             # or room_vertices_m = [[x, y], ...] (counter-clockwise)
    carrier_frequency_hz = 28e9
    noise_floor_dbm = -82.0
    shadowing_sigma_db = 1.8
    wall_permittivity = 3.24

    [[environment.obstacles]]
    start_m = [x, y]
    end_m = [x, y]
    permittivity = 2.0
    penetration_loss_db = "opaque"       # or a number

    [initiator]                          # [responder] is identical
    position_m = [x, y]
    p_max_dbm = 0.0
    snr_min_db = 10.0
    [initiator.antenna]
    n_sectors = 32
    n_quasi = 6
    hpbw_deg = 12.0                      # every angle also accepts a *_rad key
    quasi_hpbw_deg = 60.0                # optional
    mainlobe_gain_dbi = 14.77            # optional, defaults to lossless value
    quasi_gain_dbi = 7.78                # optional
    sidelobe_gain_dbi = -10.0
    boresight_offset_deg = 0.0

    [adversary]                          # optional
    position_m = [x, y]
    strategy = "fixed_amplification"     # fixed_power | fixed_amplification | forgery
    gain_db = 40.0                       # fixed_amplification only
    p_fix_dbm = 30.0                     # fixed_power only
    subset_size = 0                      # 0 = relay every heard sector
    relay_sensitivity_dbm = -100.0
    relay_p_max_dbm = 30.0
    processing_delay_s = 0.0
    selection = "random"                 # random | strongest
    target_sector = 12                   # optional
    [adversary.antenna]
    face_hpbw_deg = 30.0
    face_gain_dbi = 20.0
    sidelobe_gain_dbi = -10.0
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Literal

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from ..adversary import AdversaryConfig, FixedAmplification, FixedPower, Forgery, RelayAntenna
from ..antenna import AntennaConfig
from ..channel import OPAQUE, Environment, Segment
from ..errors import DomainError, GeometryError, ParseError, ValidationError
from ..protocol.radio import DeviceConfig

SCHEMA_VERSION = 1
Protocol = Literal["sls", "auth_sls", "secbeam"]
PROTOCOLS = ("sls", "auth_sls", "secbeam")


@dataclass(frozen=True)
class ScenarioParams:
    epsilon: float = 6.6
    beta: float = 0.5
    l_alpha: int = 8
    seed: int = 0
    secret: bytes | None = None
    benign_twin: bool = True


@dataclass(frozen=True)
class Scenario:
    name: str
    environment: Environment
    initiator: DeviceConfig
    responder: DeviceConfig
    adversary: AdversaryConfig | None = None
    protocol: Protocol = "secbeam"
    params: ScenarioParams = field(default_factory=ScenarioParams)
    trials: int = 1
    description: str = ""

    def with_overrides(self, **kw) -> "Scenario":
        """Copy with top-level fields or ``params`` fields replaced."""
        param_keys = {k: kw.pop(k) for k in list(kw) if k in ScenarioParams.__dataclass_fields__}
        out = replace(self, **kw)
        if param_keys:
            out = replace(out, params=replace(out.params, **param_keys))
        validate(out)
        return out

    def benign(self) -> "Scenario":
        return replace(self, adversary=None)


_TOP = {"schema_version", "name", "description", "protocol", "trials", "params",
        "environment", "initiator", "responder", "adversary"}
_PARAMS = {"epsilon_db", "beta", "l_alpha", "seed", "secret_hex", "benign_twin"}
_ENV = {"room_size_m", "room_vertices_m", "carrier_frequency_hz", "noise_floor_dbm",
        "shadowing_sigma_db", "wall_permittivity", "obstacles"}
_OBST = {"start_m", "end_m", "permittivity", "penetration_loss_db"}
_DEV = {"position_m", "p_max_dbm", "snr_min_db", "antenna", "name"}
_ANT = {"n_sectors", "n_quasi", "hpbw_deg", "hpbw_rad", "quasi_hpbw_deg", "quasi_hpbw_rad",
        "mainlobe_gain_dbi", "quasi_gain_dbi", "sidelobe_gain_dbi",
        "boresight_offset_deg", "boresight_offset_rad"}
_ADV = {"position_m", "strategy", "gain_db", "p_fix_dbm", "subset_size", "relay_sensitivity_dbm",
        "relay_p_max_dbm", "processing_delay_s", "selection", "target_sector", "antenna"}
_ADV_ANT = {"face_hpbw_deg", "face_hpbw_rad", "face_gain_dbi", "sidelobe_gain_dbi"}
_STRATEGIES = ("fixed_amplification", "fixed_power", "forgery")


def _line_of(text: str, key: str) -> int | None:
    leaf = key.split(".")[-1].split("[")[0]
    pat = re.compile(rf"^\s*(\[+\s*)?[\w.]*\b{re.escape(leaf)}\b")
    for n, line in enumerate(text.splitlines(), start=1):
        if pat.match(line):
            return n
    return None


class _Reader:
    """Typed access to a parsed table that records every problem found."""

    def __init__(self, text: str):
        self.text = text
        self.problems: list[str] = []

    def unknown(self, table: dict, allowed: set[str], where: str) -> None:
        for key in sorted(set(table) - allowed):
            full = f"{where}.{key}" if where else key
            raise ParseError(f"unknown key {full!r}", line=_line_of(self.text, key), field=full)

    def get(self, table: dict, key: str, kind, where: str, default=None, required=False):
        full = f"{where}.{key}" if where else key
        if key not in table:
            if required:
                self.problems.append(f"{full}: required")
            return default
        value = table[key]
        ok = {
            "float": isinstance(value, (int, float)) and not isinstance(value, bool),
            "int": isinstance(value, int) and not isinstance(value, bool),
            "str": isinstance(value, str),
            "bool": isinstance(value, bool),
            "point": isinstance(value, list) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value),
            "table": isinstance(value, dict),
        }[kind]
        if not ok:
            raise ParseError(f"{full} must be a {kind}, got {value!r}", line=_line_of(self.text, key), field=full)
        if kind == "float":
            value = float(value)
            if not math.isfinite(value):
                self.problems.append(f"{full}: must be finite")
        if kind == "point":
            value = (float(value[0]), float(value[1]))
        return value

    def angle(self, table: dict, stem: str, where: str, default=None):
        deg = self.get(table, f"{stem}_deg", "float", where)
        rad = self.get(table, f"{stem}_rad", "float", where)
        if deg is not None and rad is not None:
            self.problems.append(f"{where}.{stem}: give either _deg or _rad, not both")
        if rad is not None:
            return rad
        return math.radians(deg) if deg is not None else default

    def build(self, what: str, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (DomainError, GeometryError, ValueError, TypeError) as exc:
            self.problems.append(f"{what}: {exc}")
            return None


def _read_antenna(rd: _Reader, table: dict, where: str) -> AntennaConfig | None:
    rd.unknown(table, _ANT, where)
    kwargs = dict(
        n_sectors=rd.get(table, "n_sectors", "int", where, 1),
        n_quasi=rd.get(table, "n_quasi", "int", where, 1),
        hpbw=rd.angle(table, "hpbw", where),
        quasi_hpbw=rd.angle(table, "quasi_hpbw", where),
        mainlobe_gain=rd.get(table, "mainlobe_gain_dbi", "float", where),
        quasi_gain=rd.get(table, "quasi_gain_dbi", "float", where),
        sidelobe_gain=rd.get(table, "sidelobe_gain_dbi", "float", where, -10.0),
        boresight_offset=rd.angle(table, "boresight_offset", where, 0.0),
    )
    return rd.build(where, AntennaConfig, **kwargs)


def _read_device(rd: _Reader, table: dict, where: str) -> DeviceConfig | None:
    rd.unknown(table, _DEV, where)
    pos = rd.get(table, "position_m", "point", where, required=True)
    ant_t = rd.get(table, "antenna", "table", where, {})
    ant = _read_antenna(rd, ant_t, f"{where}.antenna")
    p_max = rd.get(table, "p_max_dbm", "float", where, 0.0)
    snr_min = rd.get(table, "snr_min_db", "float", where, 10.0)
    name = rd.get(table, "name", "str", where, where)
    if pos is None or ant is None:
        return None
    return rd.build(where, DeviceConfig, pos, ant, p_max, snr_min, name)


def _read_environment(rd: _Reader, table: dict) -> Environment | None:
    where = "environment"
    rd.unknown(table, _ENV, where)
    size = rd.get(table, "room_size_m", "point", where)
    verts = table.get("room_vertices_m")
    if size is not None and verts is not None:
        rd.problems.append("environment: give room_size_m or room_vertices_m, not both")
    if size is None and verts is None:
        rd.problems.append("environment: room_size_m or room_vertices_m required")
        return None
    if verts is not None:
        if not isinstance(verts, list) or not all(isinstance(v, list) and len(v) == 2 for v in verts):
            raise ParseError("environment.room_vertices_m must be a list of [x, y]",
                             line=_line_of(rd.text, "room_vertices_m"), field="environment.room_vertices_m")
        verts = tuple((float(x), float(y)) for x, y in verts)
    else:
        if not (size[0] > 0 and size[1] > 0):
            rd.problems.append("environment.room_size_m: sides must be positive")
            return None
        w, h = size[0] / 2.0, size[1] / 2.0
        verts = ((-w, -h), (w, -h), (w, h), (-w, h))
    obstacles = []
    for k, ob in enumerate(table.get("obstacles", [])):
        w2 = f"environment.obstacles[{k}]"
        if not isinstance(ob, dict):
            raise ParseError(f"{w2} must be a table", field=w2)
        rd.unknown(ob, _OBST, w2)
        pen = ob.get("penetration_loss_db", "opaque")
        if pen == "opaque":
            pen = OPAQUE
        elif isinstance(pen, (int, float)) and not isinstance(pen, bool):
            pen = float(pen)
        else:
            raise ParseError(f"{w2}.penetration_loss_db must be a number or \"opaque\"",
                             line=_line_of(rd.text, "penetration_loss_db"), field=f"{w2}.penetration_loss_db")
        seg = rd.build(w2, Segment, rd.get(ob, "start_m", "point", w2, required=True),
                       rd.get(ob, "end_m", "point", w2, required=True),
                       rd.get(ob, "permittivity", "float", w2, 3.24), pen)
        if seg is not None:
            obstacles.append(seg)
    freq = rd.get(table, "carrier_frequency_hz", "float", where, 28e9)
    noise = rd.get(table, "noise_floor_dbm", "float", where, -128.0)
    if not -250.0 < noise < 30.0:
        rd.problems.append(f"environment.noise_floor_dbm: {noise} is not a plausible dBm level")
    if not 1e6 <= freq <= 1e12:
        rd.problems.append(f"environment.carrier_frequency_hz: {freq} is outside 1 MHz..1 THz")
    return rd.build("environment", Environment, verts, tuple(obstacles),
                    rd.get(table, "wall_permittivity", "float", where, 3.24), freq, noise,
                    rd.get(table, "shadowing_sigma_db", "float", where, 0.0))


def _read_adversary(rd: _Reader, table: dict) -> AdversaryConfig | None:
    where = "adversary"
    rd.unknown(table, _ADV, where)
    kind = rd.get(table, "strategy", "str", where, required=True)
    if kind is None:
        return None
    if kind not in _STRATEGIES:
        rd.problems.append(f"adversary.strategy: {kind!r} is not one of {_STRATEGIES}")
        return None
    if kind == "fixed_amplification":
        strategy = FixedAmplification(rd.get(table, "gain_db", "float", where, required=True) or 0.0)
    elif kind == "fixed_power":
        strategy = FixedPower(rd.get(table, "p_fix_dbm", "float", where, required=True) or 0.0)
    else:
        strategy = Forgery()
    for extra, owner in (("gain_db", "fixed_amplification"), ("p_fix_dbm", "fixed_power")):
        if extra in table and kind != owner:
            rd.problems.append(f"adversary.{extra}: only valid with strategy {owner!r}")
    ant_t = rd.get(table, "antenna", "table", where, {})
    rd.unknown(ant_t, _ADV_ANT, "adversary.antenna")
    ant = rd.build("adversary.antenna", RelayAntenna,
                   rd.angle(ant_t, "face_hpbw", "adversary.antenna", math.pi / 3),
                   rd.get(ant_t, "face_gain_dbi", "float", "adversary.antenna"),
                   rd.get(ant_t, "sidelobe_gain_dbi", "float", "adversary.antenna", -10.0))
    pos = rd.get(table, "position_m", "point", where, required=True)
    if pos is None or ant is None:
        return None
    return rd.build(where, AdversaryConfig, pos, strategy,
                    rd.get(table, "subset_size", "int", where, 0),
                    rd.get(table, "relay_sensitivity_dbm", "float", where, -100.0),
                    rd.get(table, "relay_p_max_dbm", "float", where, 30.0),
                    rd.get(table, "processing_delay_s", "float", where, 0.0),
                    ant, rd.get(table, "selection", "str", where, "random"),
                    rd.get(table, "target_sector", "int", where))


def parse_scenario(text: str) -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ParseError(f"malformed scenario file: {exc}", line=int(m.group(1)) if m else None) from exc
    rd = _Reader(text)
    rd.unknown(doc, _TOP, "")
    version = rd.get(doc, "schema_version", "int", "", required=True)
    if version is not None and version != SCHEMA_VERSION:
        rd.problems.append(f"schema_version: {version} is not supported (expected {SCHEMA_VERSION})")
    name = rd.get(doc, "name", "str", "", required=True) or ""
    protocol = rd.get(doc, "protocol", "str", "", "secbeam")
    trials = rd.get(doc, "trials", "int", "", 1)

    pt = rd.get(doc, "params", "table", "", {})
    rd.unknown(pt, _PARAMS, "params")
    secret_hex = rd.get(pt, "secret_hex", "str", "params")
    secret = None
    if secret_hex is not None:
        try:
            secret = bytes.fromhex(secret_hex)
        except ValueError:
            rd.problems.append("params.secret_hex: not valid hex")
    params = ScenarioParams(
        epsilon=rd.get(pt, "epsilon_db", "float", "params", 6.6),
        beta=rd.get(pt, "beta", "float", "params", 0.5),
        l_alpha=rd.get(pt, "l_alpha", "int", "params", 8),
        seed=rd.get(pt, "seed", "int", "params", 0),
        secret=secret,
        benign_twin=rd.get(pt, "benign_twin", "bool", "params", True))

    env = _read_environment(rd, rd.get(doc, "environment", "table", "", {}, required=True) or {})
    ini = _read_device(rd, rd.get(doc, "initiator", "table", "", {}, required=True) or {}, "initiator")
    res = _read_device(rd, rd.get(doc, "responder", "table", "", {}, required=True) or {}, "responder")
    adv = None
    if "adversary" in doc:
        adv = _read_adversary(rd, rd.get(doc, "adversary", "table", ""))
    if rd.problems or env is None or ini is None or res is None or ("adversary" in doc and adv is None):
        if not rd.problems:
            rd.problems.append("scenario is incomplete")
        raise ValidationError(rd.problems)
    scenario = Scenario(name, env, ini, res, adv, protocol, params, trials,
                        rd.get(doc, "description", "str", "", ""))
    validate(scenario)
    return scenario


def validate(s: Scenario) -> None:
    """Raise :class:`ValidationError` listing every violated invariant."""
    problems = []
    if s.protocol not in PROTOCOLS:
        problems.append(f"protocol: {s.protocol!r} is not one of {PROTOCOLS}")
    if not (isinstance(s.trials, int) and s.trials >= 1):
        problems.append(f"trials: must be >= 1, got {s.trials}")
    p = s.params
    if not p.epsilon > 0:
        problems.append(f"params.epsilon_db: must be > 0, got {p.epsilon}")
    if not 0 < p.beta <= 1:
        problems.append(f"params.beta: must lie in (0, 1], got {p.beta}")
    if not 4 <= p.l_alpha <= 32:
        problems.append(f"params.l_alpha: must lie in [4, 32], got {p.l_alpha}")
    if not 0 <= p.seed < 2 ** 64:
        problems.append(f"params.seed: must be a 64-bit unsigned integer, got {p.seed}")
    if p.secret is not None and len(p.secret) < 16:
        problems.append(f"params.secret_hex: must encode >= 16 bytes, got {len(p.secret)}")
    env = s.environment
    for who, dev in (("initiator", s.initiator), ("responder", s.responder)):
        if not env.contains(dev.position):
            problems.append(f"{who}.position_m: {dev.position} lies outside the room")
    if math.dist(s.initiator.position, s.responder.position) < 1e-9:
        problems.append("initiator and responder coincide")
    if s.adversary is not None:
        a = s.adversary
        if not env.contains(a.position):
            problems.append(f"adversary.position_m: {a.position} lies outside the room")
        if math.dist(a.position, s.responder.position) < 1e-9 or math.dist(a.position, s.initiator.position) < 1e-9:
            problems.append("adversary.position_m: must not coincide with a legitimate device")
        n = max(s.initiator.antenna.n_sectors, s.responder.antenna.n_sectors)
        if a.subset_size > n:
            problems.append(f"adversary.subset_size: {a.subset_size} exceeds N = {n}")
        if a.target_sector is not None and not 1 <= a.target_sector <= n:
            problems.append(f"adversary.target_sector: {a.target_sector} out of range 1..{n}")
    if problems:
        raise ValidationError(problems)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise
    return parse_scenario(text)


def _angle_entry(out: dict, stem: str, value: float) -> None:
    deg = math.degrees(value)
    if math.radians(deg) == value:
        out[f"{stem}_deg"] = deg
    else:
        out[f"{stem}_rad"] = value


def _antenna_doc(a: AntennaConfig) -> dict[str, Any]:
    out: dict[str, Any] = {"n_sectors": a.n_sectors, "n_quasi": a.n_quasi}
    _angle_entry(out, "hpbw", a.hpbw)
    _angle_entry(out, "quasi_hpbw", a.quasi_hpbw)
    out["mainlobe_gain_dbi"] = a.mainlobe_gain
    out["quasi_gain_dbi"] = a.quasi_gain
    out["sidelobe_gain_dbi"] = a.sidelobe_gain
    _angle_entry(out, "boresight_offset", a.boresight_offset)
    return out


def _device_doc(d: DeviceConfig) -> dict[str, Any]:
    return {"name": d.name, "position_m": list(d.position), "p_max_dbm": d.p_max,
            "snr_min_db": d.snr_min, "antenna": _antenna_doc(d.antenna)}


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    env = s.environment
    env_doc: dict[str, Any] = {
        "room_vertices_m": [list(v) for v in env.room_vertices],
        "carrier_frequency_hz": env.carrier_frequency,
        "noise_floor_dbm": env.noise_floor,
        "shadowing_sigma_db": env.shadowing_sigma,
        "wall_permittivity": env.wall_permittivity,
    }
    if env.obstacles:
        env_doc["obstacles"] = [{
            "start_m": list(o.a), "end_m": list(o.b), "permittivity": o.permittivity,
            "penetration_loss_db": "opaque" if math.isinf(o.penetration_loss) else o.penetration_loss,
        } for o in env.obstacles]
    params: dict[str, Any] = {"epsilon_db": s.params.epsilon, "beta": s.params.beta,
                              "l_alpha": s.params.l_alpha, "seed": s.params.seed,
                              "benign_twin": s.params.benign_twin}
    if s.params.secret is not None:
        params["secret_hex"] = s.params.secret.hex()
    doc: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "name": s.name, "description": s.description,
                           "protocol": s.protocol, "trials": s.trials, "params": params,
                           "environment": env_doc, "initiator": _device_doc(s.initiator),
                           "responder": _device_doc(s.responder)}
    if s.adversary is not None:
        a = s.adversary
        adv: dict[str, Any] = {"position_m": list(a.position)}
        if isinstance(a.strategy, FixedAmplification):
            adv.update(strategy="fixed_amplification", gain_db=a.strategy.gain)
        elif isinstance(a.strategy, FixedPower):
            adv.update(strategy="fixed_power", p_fix_dbm=a.strategy.p_fix)
        else:
            adv["strategy"] = "forgery"
        adv.update(subset_size=a.subset_size, relay_sensitivity_dbm=a.relay_sensitivity,
                   relay_p_max_dbm=a.relay_p_max, processing_delay_s=a.processing_delay,
                   selection=a.selection)
        if a.target_sector is not None:
            adv["target_sector"] = a.target_sector
        ant: dict[str, Any] = {}
        _angle_entry(ant, "face_hpbw", a.antenna.face_hpbw)
        ant.update(face_gain_dbi=a.antenna.face_gain, sidelobe_gain_dbi=a.antenna.sidelobe_gain)
        adv["antenna"] = ant
        doc["adversary"] = adv
    return doc


def dump_scenario(s: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(s))


def save_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(dump_scenario(s), encoding="utf-8")


FIXTURES = ("scenario1", "scenario2", "scenario3", "scenario4", "scenario5",
            "lab_attack", "setup2", "cpdp_los")


def fixture_path(name: str) -> Path:
    from importlib import resources

    return Path(str(resources.files("secbeam.harness") / "scenarios" / f"{name}.toml"))


def resolve_scenario(ref: str | Path) -> Scenario:
    """Load a scenario from a path, or by name from the shipped fixtures."""
    p = Path(ref)
    if p.exists():
        return load_scenario(p)
    if str(ref) in FIXTURES:
        return load_scenario(fixture_path(str(ref)))
    raise FileNotFoundError(f"no scenario file or fixture named {ref!r}")
