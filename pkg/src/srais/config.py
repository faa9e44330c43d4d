"""Run configuration: TOML parsing, validation, presets.

A config file describes one experiment. Validation collects every
problem before failing so a bad file is reported once, completely.
Unknown sections and keys are errors: silent typos in schedule constants
would otherwise change results quietly.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .datasets import BUILTIN_NAME
from .errors import ConfigError
from .schedules import BandwidthPolicy, EtaPolicy, LambdaPolicy, Schedule

_KINDS = ("toy", "blr", "diagnostic", "emd")
_TOY_NAMES = ("cold_start", "gaussian_mixture", "anisotropic_mixture")


@dataclass(frozen=True)
class EmdScheduleSpec:
    """One step size sequence for the mirror descent verifier:
    constant c, or c / k**beta."""

    label: str
    policy: str  # constant | power
    c: float = 0.5
    beta: float = 1.0

    def etas(self, steps):
        if self.policy == "constant":
            return [self.c] * steps
        return [self.c / (k**self.beta) for k in range(1, steps + 1)]


@dataclass(frozen=True)
class EmdConfig:
    label: str
    grid_lo: float = -20.0
    grid_hi: float = 20.0
    grid_points: int = 8192
    steps: int = 50
    f_mean: float = 0.0
    f_var: float = 1.0
    start_mean: float = 0.0
    start_var: float = 4.0
    schedules: tuple = ()
    out_dir: str = None
    figures: bool = True

    kind = "emd"


@dataclass(frozen=True)
class RunConfig:
    label: str
    kind: str = "toy"
    name: str = "cold_start"
    dim: int = 16
    n0: int = 4000
    batch: int = 1800
    iterations: int = 20
    lambda_policy: LambdaPolicy = field(default_factory=LambdaPolicy)
    bandwidth_policy: BandwidthPolicy = field(default_factory=BandwidthPolicy)
    eta_policy: EtaPolicy = field(default_factory=EtaPolicy)
    subsample_rule: str = "sqrt"
    subsample_mode: str = "uniform"
    estimate_weights: str = "regularized"
    per_particle_bandwidth: bool = False
    student_df: float = 3.0
    replicates: int = 1
    seed: int = 0
    out_dir: str = None
    figures: bool = True
    dataset: str = BUILTIN_NAME
    binarization: str = "0-vs-rest"
    train_fraction: float = 0.8

    def schedule(self):
        try:
            return Schedule(
                self.lambda_policy,
                self.bandwidth_policy,
                self.eta_policy,
                dim=self.dim,
                n0=self.n0,
                batch=self.batch,
                iterations=self.iterations,
                subsample_rule=self.subsample_rule,
            )
        except ValueError as exc:
            raise ConfigError(str(exc).split("; ")) from exc

    def with_overrides(self, **kwargs):
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def _take(section, key, expected, problems, where, default=None):
    if key not in section:
        return default
    value = section.pop(key)
    if expected is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if expected is not None and not isinstance(value, expected):
        problems.append(f"{where}.{key}: expected {expected.__name__}, got {value!r}")
        return default
    return value


def _reject_unknown(section, where, problems):
    for key in section:
        problems.append(f"unknown key {where}.{key}")


def _parse_run_config(data, label, problems):
    exp = data.pop("experiment", {})
    kind = _take(exp, "kind", str, problems, "experiment", "toy")
    name = _take(exp, "name", str, problems, "experiment", None)
    dim = _take(exp, "dim", int, problems, "experiment", None)
    _reject_unknown(exp, "experiment", problems)

    if kind == "toy":
        name = name or "cold_start"
        if name not in _TOY_NAMES:
            problems.append(f"experiment.name: unknown toy target {name!r}")
        dim = dim if dim is not None else 16
    elif kind == "blr":
        name = name or "logistic"
        dim = dim if dim is not None else 22
    else:
        name = name or "dn-convergence"
        dim = dim if dim is not None else 1

    budget = data.pop("budget", {})
    n0 = _take(budget, "initial", int, problems, "budget", 4000)
    batch = _take(budget, "batch", int, problems, "budget", 1800)
    iterations = _take(budget, "iterations", int, problems, "budget", 20)
    _reject_unknown(budget, "budget", problems)

    sched = data.pop("schedule", {})
    lam = sched.pop("lambda", {})
    lambda_policy = LambdaPolicy(
        kind=_take(lam, "policy", str, problems, "schedule.lambda", "constant"),
        lambda0=_take(lam, "lambda0", float, problems, "schedule.lambda", 0.5),
        exponent=_take(lam, "exponent", float, problems, "schedule.lambda", 0.5),
    )
    _reject_unknown(lam, "schedule.lambda", problems)
    bw = sched.pop("bandwidth", {})
    bandwidth_policy = BandwidthPolicy(
        kind=_take(bw, "policy", str, problems, "schedule.bandwidth", "constant"),
        h0=_take(bw, "h0", float, problems, "schedule.bandwidth", 1.0),
    )
    _reject_unknown(bw, "schedule.bandwidth", problems)
    eta = sched.pop("eta", {})
    eta_kind = _take(eta, "policy", str, problems, "schedule.eta", "rar")
    eta_policy = EtaPolicy(
        kind=eta_kind,
        value=_take(eta, "value", float, problems, "schedule.eta", 1.0),
        values=tuple(_take(eta, "values", list, problems, "schedule.eta", []) or []),
        alpha=_take(eta, "alpha", float, problems, "schedule.eta", 0.5),
    )
    _reject_unknown(eta, "schedule.eta", problems)
    _reject_unknown(sched, "schedule", problems)

    sub = data.pop("subsample", {})
    subsample_rule = _take(sub, "rule", str, problems, "subsample", "sqrt")
    subsample_mode = _take(sub, "mode", str, problems, "subsample", "uniform")
    _reject_unknown(sub, "subsample", problems)
    if subsample_mode not in ("uniform", "weighted"):
        problems.append(f"subsample.mode: unknown mode {subsample_mode!r}")

    est = data.pop("estimate", {})
    estimate_weights = _take(est, "weights", str, problems, "estimate", "regularized")
    _reject_unknown(est, "estimate", problems)
    if estimate_weights not in ("regularized", "plain"):
        problems.append(f"estimate.weights: unknown choice {estimate_weights!r}")

    dens = data.pop("density", {})
    student_df = _take(dens, "student_df", float, problems, "density", 3.0)
    per_particle = _take(dens, "per_particle_bandwidth", bool, problems, "density", False)
    _reject_unknown(dens, "density", problems)
    if not student_df > 2:
        problems.append("density.student_df must exceed 2")

    run = data.pop("run", {})
    replicates = _take(run, "replicates", int, problems, "run", 1)
    seed = _take(run, "seed", int, problems, "run", 0)
    out_dir = _take(run, "out_dir", str, problems, "run", None)
    figures = _take(run, "figures", bool, problems, "run", True)
    _reject_unknown(run, "run", problems)
    if replicates < 1:
        problems.append("run.replicates must be at least 1")

    blr = data.pop("blr", {})
    dataset = _take(blr, "dataset", str, problems, "blr", BUILTIN_NAME)
    binarization = _take(blr, "binarization", str, problems, "blr", "0-vs-rest")
    train_fraction = _take(blr, "train_fraction", float, problems, "blr", 0.8)
    _reject_unknown(blr, "blr", problems)
    if kind == "blr" and not dataset:
        problems.append("blr.dataset: a dataset path is required (or pass --dataset)")
    if not 0.0 < train_fraction < 1.0:
        problems.append("blr.train_fraction must lie strictly between 0 and 1")

    cfg = RunConfig(
        label=label,
        kind=kind,
        name=name,
        dim=dim,
        n0=n0,
        batch=batch,
        iterations=iterations,
        lambda_policy=lambda_policy,
        bandwidth_policy=bandwidth_policy,
        eta_policy=eta_policy,
        subsample_rule=subsample_rule,
        subsample_mode=subsample_mode,
        estimate_weights=estimate_weights,
        per_particle_bandwidth=per_particle,
        student_df=student_df,
        replicates=replicates,
        seed=seed,
        out_dir=out_dir,
        figures=figures,
        dataset=dataset,
        binarization=binarization,
        train_fraction=train_fraction,
    )
    if not problems:
        try:
            cfg.schedule()
        except ConfigError as exc:
            problems.extend(exc.problems)
    return cfg


def _parse_emd_config(data, label, problems):
    exp = data.pop("experiment", {})
    _take(exp, "kind", str, problems, "experiment")
    name = _take(exp, "name", str, problems, "experiment", "lemma2")
    _reject_unknown(exp, "experiment", problems)

    section = data.pop("emd", {})
    schedules = []
    for i, entry in enumerate(section.pop("schedules", [])):
        where = f"emd.schedules[{i}]"
        spec = EmdScheduleSpec(
            label=_take(entry, "label", str, problems, where, f"schedule-{i}"),
            policy=_take(entry, "policy", str, problems, where, "constant"),
            c=_take(entry, "c", float, problems, where, 0.5),
            beta=_take(entry, "beta", float, problems, where, 1.0),
        )
        _reject_unknown(entry, where, problems)
        if spec.policy not in ("constant", "power"):
            problems.append(f"{where}: unknown policy {spec.policy!r}")
        if not 0.0 < spec.c <= 1.0:
            problems.append(f"{where}: c must be in (0, 1]")
        schedules.append(spec)
    if not schedules:
        problems.append("emd.schedules: at least one step size schedule required")

    cfg = EmdConfig(
        label=label if label else name,
        grid_lo=_take(section, "grid_lo", float, problems, "emd", -20.0),
        grid_hi=_take(section, "grid_hi", float, problems, "emd", 20.0),
        grid_points=_take(section, "grid_points", int, problems, "emd", 8192),
        steps=_take(section, "steps", int, problems, "emd", 50),
        f_mean=_take(section, "f_mean", float, problems, "emd", 0.0),
        f_var=_take(section, "f_var", float, problems, "emd", 1.0),
        start_mean=_take(section, "start_mean", float, problems, "emd", 0.0),
        start_var=_take(section, "start_var", float, problems, "emd", 4.0),
        schedules=tuple(schedules),
        out_dir=_take(
            data.pop("run", {}), "out_dir", str, problems, "run", None
        ),
        figures=True,
    )
    _reject_unknown(section, "emd", problems)
    if cfg.grid_lo >= cfg.grid_hi:
        problems.append("emd: grid_lo must be below grid_hi")
    if cfg.grid_points < 64:
        problems.append("emd.grid_points: need at least 64 points")
    if cfg.steps < 1:
        problems.append("emd.steps must be at least 1")
    if not (cfg.f_var > 0 and cfg.start_var > 0):
        problems.append("emd variances must be positive")
    return cfg


def config_from_dict(data, label):
    """Build a validated config from a parsed TOML mapping."""
    problems = []
    kind = data.get("experiment", {}).get("kind", "toy")
    if kind not in _KINDS:
        raise ConfigError([f"experiment.kind: unknown kind {kind!r}, expected one of {_KINDS}"])
    if kind == "emd":
        cfg = _parse_emd_config(dict(data), label, problems)
    else:
        cfg = _parse_run_config(dict(data), label, problems)
        data = dict(data)
    for key in data:
        if key not in ("experiment", "budget", "schedule", "subsample", "estimate",
                       "density", "run", "blr", "emd"):
            problems.append(f"unknown section [{key}]")
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(source, dataset=None):
    """Load a config from a preset name or a TOML file path.

    ``dataset`` fills in ``blr.dataset`` before validation, so configs
    shipped without a data path still load when one is supplied.
    """
    source = str(source)
    if source in PRESETS:
        text = PRESETS[source]
        label = source
    else:
        path = Path(source)
        if not path.exists():
            known = ", ".join(sorted(PRESETS))
            raise ConfigError(
                [f"{source!r} is neither a file nor a preset (presets: {known})"]
            )
        text = path.read_text(encoding="utf-8")
        label = path.stem
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"TOML parse error in {source}: {exc}"]) from exc
    if dataset is not None:
        data.setdefault("blr", {})["dataset"] = str(dataset)
    return config_from_dict(data, label)


def _toml_str(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    return '"' + str(v).replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_toml(cfg):
    """Canonical TOML echo of a config, loadable by :func:`load_config`."""
    if isinstance(cfg, EmdConfig):
        lines = [
            "[experiment]",
            'kind = "emd"',
            f"name = {_toml_str(cfg.label)}",
            "",
            "[emd]",
            f"grid_lo = {_toml_str(cfg.grid_lo)}",
            f"grid_hi = {_toml_str(cfg.grid_hi)}",
            f"grid_points = {_toml_str(cfg.grid_points)}",
            f"steps = {_toml_str(cfg.steps)}",
            f"f_mean = {_toml_str(cfg.f_mean)}",
            f"f_var = {_toml_str(cfg.f_var)}",
            f"start_mean = {_toml_str(cfg.start_mean)}",
            f"start_var = {_toml_str(cfg.start_var)}",
        ]
        for spec in cfg.schedules:
            lines += [
                "",
                "[[emd.schedules]]",
                f"label = {_toml_str(spec.label)}",
                f"policy = {_toml_str(spec.policy)}",
                f"c = {_toml_str(spec.c)}",
            ]
            if spec.policy == "power":
                lines.append(f"beta = {_toml_str(spec.beta)}")
        return "\n".join(lines) + "\n"

    lines = [
        "[experiment]",
        f"kind = {_toml_str(cfg.kind)}",
        f"name = {_toml_str(cfg.name)}",
        f"dim = {_toml_str(cfg.dim)}",
        "",
        "[budget]",
        f"initial = {_toml_str(cfg.n0)}",
        f"batch = {_toml_str(cfg.batch)}",
        f"iterations = {_toml_str(cfg.iterations)}",
        "",
        "[schedule.lambda]",
        f"policy = {_toml_str(cfg.lambda_policy.kind)}",
        f"lambda0 = {_toml_str(cfg.lambda_policy.lambda0)}",
    ]
    if cfg.lambda_policy.kind == "power":
        lines.append(f"exponent = {_toml_str(cfg.lambda_policy.exponent)}")
    lines += [
        "",
        "[schedule.bandwidth]",
        f"policy = {_toml_str(cfg.bandwidth_policy.kind)}",
        f"h0 = {_toml_str(cfg.bandwidth_policy.h0)}",
        "",
        "[schedule.eta]",
        f"policy = {_toml_str(cfg.eta_policy.kind)}",
    ]
    if cfg.eta_policy.kind == "constant":
        lines.append(f"value = {_toml_str(cfg.eta_policy.value)}")
    elif cfg.eta_policy.kind == "sequence":
        lines.append("values = [" + ", ".join(repr(float(v)) for v in cfg.eta_policy.values) + "]")
    else:
        lines.append(f"alpha = {_toml_str(cfg.eta_policy.alpha)}")
    lines += [
        "",
        "[subsample]",
        f"rule = {_toml_str(cfg.subsample_rule)}",
        f"mode = {_toml_str(cfg.subsample_mode)}",
        "",
        "[estimate]",
        f"weights = {_toml_str(cfg.estimate_weights)}",
        "",
        "[density]",
        f"student_df = {_toml_str(cfg.student_df)}",
        f"per_particle_bandwidth = {_toml_str(cfg.per_particle_bandwidth)}",
        "",
        "[run]",
        f"replicates = {_toml_str(cfg.replicates)}",
        f"seed = {_toml_str(cfg.seed)}",
        f"figures = {_toml_str(cfg.figures)}",
    ]
    if cfg.out_dir:
        lines.append(f"out_dir = {_toml_str(cfg.out_dir)}")
    if cfg.kind == "blr":
        lines += [
            "",
            "[blr]",
            f"dataset = {_toml_str(cfg.dataset)}",
            f"binarization = {_toml_str(cfg.binarization)}",
            f"train_fraction = {_toml_str(cfg.train_fraction)}",
        ]
    return "\n".join(lines) + "\n"


PRESETS = {
    # full-scale runs matching the published budgets
    "cold-start-16": """
[experiment]
kind = "toy"
name = "cold_start"
dim = 16

[budget]
initial = 40000
batch = 18000
iterations = 20

[schedule.lambda]
policy = "kde_power"
lambda0 = 0.25

[schedule.bandwidth]
policy = "kde_power"
h0 = 0.12

[schedule.eta]
policy = "rar"
alpha = 0.5

[subsample]
mode = "weighted"

[run]
replicates = 50
seed = 20260814
""",
    "gaussian-mixture-16": """
[experiment]
kind = "toy"
name = "gaussian_mixture"
dim = 16

[budget]
initial = 40000
batch = 18000
iterations = 20

[schedule.lambda]
policy = "kde_power"
lambda0 = 0.25

[schedule.bandwidth]
policy = "kde_power"
h0 = 0.12

[schedule.eta]
policy = "rar"
alpha = 0.5

[subsample]
mode = "weighted"

[run]
replicates = 50
seed = 20260815
""",
    "anisotropic-16": """
[experiment]
kind = "toy"
name = "anisotropic_mixture"
dim = 16

[budget]
initial = 40000
batch = 18000
iterations = 20

[schedule.lambda]
policy = "kde_power"
lambda0 = 0.25

[schedule.bandwidth]
policy = "kde_power"
h0 = 0.12

[schedule.eta]
policy = "rar"
alpha = 0.5

[subsample]
mode = "weighted"

[run]
replicates = 50
seed = 20260816
""",
    "blr-waveform": """
[experiment]
kind = "blr"
name = "waveform"

[budget]
initial = 2000
batch = 200
iterations = 300

[schedule.lambda]
policy = "power"
lambda0 = 1.0
exponent = 0.5

[schedule.bandwidth]
policy = "power"
h0 = 0.3

[schedule.eta]
policy = "rar"
alpha = 0.2

[run]
replicates = 100
seed = 20260817

[blr]
dataset = ""
binarization = "0-vs-rest"
train_fraction = 0.8
""",
    # tenth-scale desk presets
    "cold-start-16-small": """
[experiment]
kind = "toy"
name = "cold_start"
dim = 16

[budget]
initial = 4000
batch = 1800
iterations = 20

[schedule.lambda]
policy = "kde_power"
lambda0 = 0.25

[schedule.bandwidth]
policy = "kde_power"
h0 = 0.12

[schedule.eta]
policy = "rar"
alpha = 0.5

[subsample]
mode = "weighted"

[run]
replicates = 20
seed = 20260814
""",
    "gaussian-mixture-16-small": """
[experiment]
kind = "toy"
name = "gaussian_mixture"
dim = 16

[budget]
initial = 4000
batch = 1800
iterations = 20

[schedule.lambda]
policy = "kde_power"
lambda0 = 0.25

[schedule.bandwidth]
policy = "kde_power"
h0 = 0.12

[schedule.eta]
policy = "rar"
alpha = 0.5

[subsample]
mode = "weighted"

[run]
replicates = 20
seed = 20260815
""",
    "anisotropic-16-small": """
[experiment]
kind = "toy"
name = "anisotropic_mixture"
dim = 16

[budget]
initial = 4000
batch = 1800
iterations = 20

[schedule.lambda]
policy = "kde_power"
lambda0 = 0.25

[schedule.bandwidth]
policy = "kde_power"
h0 = 0.12

[schedule.eta]
policy = "rar"
alpha = 0.5

[subsample]
mode = "weighted"

[run]
replicates = 20
seed = 20260816
""",
    "blr-synthetic-small": """
[experiment]
kind = "blr"
name = "waveform-synthetic"

[budget]
initial = 200
batch = 20
iterations = 300

[schedule.lambda]
policy = "power"
lambda0 = 1.0
exponent = 0.5

[schedule.bandwidth]
policy = "power"
h0 = 0.3

[schedule.eta]
policy = "rar"
alpha = 0.2

[run]
replicates = 10
seed = 20260817

[blr]
dataset = "builtin:waveform-synthetic"
binarization = "0-vs-rest"
train_fraction = 0.8
""",
    "dn-diagnostic": """
[experiment]
kind = "diagnostic"
name = "dn-convergence"
dim = 1

[budget]
initial = 100
batch = 100
iterations = 99

[schedule.lambda]
policy = "constant"
lambda0 = 0.5

[schedule.bandwidth]
policy = "constant"
h0 = 1.0

[schedule.eta]
policy = "constant"
value = 1.0

[run]
replicates = 16
seed = 20260818
""",
    "emd-lemma2": """
[experiment]
kind = "emd"
name = "lemma2"

[emd]
grid_lo = -20.0
grid_hi = 20.0
grid_points = 8192
steps = 50
f_mean = 0.0
f_var = 1.0
start_mean = 0.0
start_var = 4.0

[[emd.schedules]]
label = "constant"
policy = "constant"
c = 0.5

[[emd.schedules]]
label = "inverse"
policy = "power"
c = 0.5
beta = 1.0

[[emd.schedules]]
label = "inverse-sqrt"
policy = "power"
c = 0.5
beta = 0.5
""",
}
