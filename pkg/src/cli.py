"""
Command line interface for the six-vertex toolkit.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.model.lattice import dwbc_boundary, enumerate_states, partition_function
from src.model.params import ModelParams
from src.model.sampler import (
    exact_frequencies,
    mean_height_field,
    q_from_lambda,
    run_chain,
    state_frequencies,
)
from src.model.transfer_matrix import fixed_boundary_partition_function
from src.thermo.antiferro import antiferro_boundary
from src.thermo.free_energy import (
    BetheFreeEnergy,
    free_energy,
    free_energy_free_fermion,
    free_fermion_double_integral,
    slope,
    zero_field_free_energy,
)
from src.thermo.phases import PhaseLabel, phase_boundary_curves, phase_grid
from src.utils.errors import ConfigError, DomainError, SixVertexError
from src.utils.file_handler import FileHandler, content_hash
from src.variational.limit_shape import dwbc_boundary_field, kkt_residual, minimize_functional
from src.variational.surface_tension import CSV_HEADER, build_table

logger = logging.getLogger(__name__)

COMMANDS = ("phase", "free-energy", "sigma", "limit-shape", "sample", "oracle")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

# Config entry that supplies --grid when the flag is absent
_GRID_SOURCE = {
    "phase": ("phase", "grid_points"),
    "free-energy": ("phase", "grid_points"),
    "sigma": ("surface_tension", "table_size"),
    "limit-shape": ("limit_shape", "grid"),
    "sample": ("sampler", "grid"),
    "oracle": ("sampler", "grid"),
}

_TOLERANCES = (
    ("solver", "newton_tol"),
    ("solver", "alpha_xtol"),
    ("solver", "fd_step"),
    ("phase", "eps_phase"),
    ("transfer_matrix", "tol"),
    ("antiferro", "tol"),
    ("limit_shape", "tol"),
)


@dataclass
class RunConfig:
    """One invocation: a command, the model and every setting it reads."""
    command: str
    params: ModelParams
    grid: int
    seed: int
    out: str
    window: Tuple[float, float, float, float]
    lam: Optional[float] = None
    q: Optional[float] = None
    steps: int = 0
    timestamps: bool = False
    tolerances: Dict[str, float] = field(default_factory=dict)
    settings: Dict = field(default_factory=dict)

    def validate(self) -> None:
        """
        Raises:
            ConfigError: If a tolerance is not positive, the window is empty or sizes are invalid
        """
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command {self.command!r}")
        for name, value in self.tolerances.items():
            if not value > 0:
                raise ConfigError(f"Tolerance {name} must be positive, got {value}")
        h_min, h_max, v_min, v_max = self.window
        if not (h_min < h_max and v_min < v_max):
            raise ConfigError(f"Empty field window {self.window}")
        if self.grid < 1:
            raise ConfigError(f"Grid size must be positive, got {self.grid}")
        if self.q is not None and not self.q > 0:
            raise ConfigError(f"q must be positive, got {self.q}")
        if self.q is not None and self.lam is not None:
            raise ConfigError("Give either --lambda or --q, not both")

    def to_dict(self) -> Dict:
        out = asdict(self)
        out["params"] = self.params.to_dict()
        out["window"] = list(self.window)
        return out


def setup_logging(log_level="INFO", log_format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"):
    """Set up logging configuration."""
    numeric_level = getattr(logging, log_level.upper(), None)
    if not isinstance(numeric_level, int):
        raise ValueError(f'Invalid log level: {log_level}')

    logging.basicConfig(
        level=numeric_level,
        format=log_format,
        handlers=[
            logging.StreamHandler(),
            logging.FileHandler('six_vertex.log')
        ]
    )


def load_config(config_path=None):
    """
    Load configuration from JSON file.

    Args:
        config_path: Optional path to config file. If not provided, tries config.json
                    then falls back to default_config.json

    Returns:
        Dictionary containing configuration

    Raises:
        FileNotFoundError: If neither config file exists
        ValueError: If config file is invalid
    """
    if config_path:
        if not os.path.exists(config_path):
            raise FileNotFoundError(f"Config file not found: {config_path}")
        logger.info(f"Loading config from: {config_path}")
        with open(config_path, 'r', encoding='utf-8') as f:
            return json.load(f)

    if os.path.exists('config.json'):
        with open('config.json', 'r', encoding='utf-8') as f:
            return json.load(f)

    default_config = os.path.join(os.path.dirname(__file__), 'config', 'default_config.json')
    if os.path.exists(default_config):
        with open(default_config, 'r', encoding='utf-8') as f:
            return json.load(f)

    raise FileNotFoundError("No config file found. Create config.json or ensure default_config.json exists.")


def parse_args(argv: Optional[Sequence[str]] = None):
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(description='Six-vertex model toolkit')
    parser.add_argument('--command', required=True, choices=COMMANDS, help='Experiment to run')
    parser.add_argument('--weights', help='Weights a,b,c')
    parser.add_argument('--fields', help='Electric fields H,V')
    parser.add_argument('--grid', type=int, help='Lattice size, table size or phase grid points')
    parser.add_argument('--lambda', dest='lam', type=float, help='Volume coefficient λ')
    parser.add_argument('--q', type=float, help='Volume weight q of the sampler')
    parser.add_argument('--seed', type=int, default=0, help='Sampler seed')
    parser.add_argument('--steps', type=int, help='Sampler sweeps after burn-in')
    parser.add_argument('--window', help='Field window Hmin,Hmax,Vmin,Vmax for the phase diagram')
    parser.add_argument('--out', help='Output directory')
    parser.add_argument('--config', help='Config file (JSON)')
    parser.add_argument(
        '--log-level',
        help='Logging level',
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'],
        default=None
    )
    parser.add_argument('--timestamps', action='store_true', help='Add a creation time to output headers')
    return parser.parse_args(argv)


def _floats(text: str, count: int, name: str) -> List[float]:
    try:
        values = [float(x) for x in text.split(',')]
    except ValueError:
        raise ConfigError(f"{name} must be {count} comma-separated numbers, got {text!r}")
    if len(values) != count:
        raise ConfigError(f"{name} must be {count} comma-separated numbers, got {text!r}")
    return values


def build_run_config(args, config: Dict) -> RunConfig:
    """
    Merge the config file with the command line flags; flags win.

    Raises:
        ConfigError: If a value is malformed or fails validation
    """
    model = config.get("model", {})
    weights = _floats(args.weights, 3, "--weights") if args.weights else list(model.get("weights", [1.0, 1.0, 1.0]))
    fields = _floats(args.fields, 2, "--fields") if args.fields else list(model.get("fields", [0.0, 0.0]))
    window = _floats(args.window, 4, "--window") if args.window else list(config.get("phase", {}).get("window", [-3, 3, -3, 3]))
    if len(weights) != 3 or len(fields) != 2 or len(window) != 4:
        raise ConfigError("Config model weights, fields or phase window have the wrong length")
    try:
        params = ModelParams(*weights, H=fields[0], V=fields[1])
    except DomainError as e:
        raise ConfigError(str(e)) from e

    section, key = _GRID_SOURCE[args.command]
    grid = args.grid if args.grid is not None else int(config.get(section, {}).get(key, 8))
    steps = args.steps if args.steps is not None else int(config.get("sampler", {}).get("steps", 10000))
    tolerances = {f"{s}.{k}": float(config[s][k]) for s, k in _TOLERANCES if k in config.get(s, {})}
    output = config.get("output", {})

    run = RunConfig(
        command=args.command,
        params=params,
        grid=grid,
        seed=args.seed,
        out=args.out or output.get("base_dir", "output"),
        window=tuple(window),
        lam=args.lam,
        q=args.q,
        steps=steps,
        timestamps=args.timestamps or bool(output.get("timestamps", False)),
        tolerances=tolerances,
        settings=config,
    )
    run.validate()
    return run


def _meta(run: RunConfig) -> Dict:
    payload = {k: v for k, v in run.to_dict().items() if k not in ("out", "timestamps")}
    meta = {"command": run.command, "config": payload, "input_hash": content_hash(payload)}
    if run.timestamps:
        meta["created"] = datetime.now().isoformat()
    return meta


def _evaluator(run: RunConfig) -> BetheFreeEnergy:
    return BetheFreeEnergy.from_config(run.settings)


def cmd_phase(run: RunConfig, handler: FileHandler) -> Dict[str, str]:
    """Phase labels on an (H, V) grid and the boundary polylines."""
    p = run.params
    cfg = run.settings.get("phase", {})
    h_min, h_max, v_min, v_max = run.window
    hs = np.linspace(h_min, h_max, run.grid)
    vs = np.linspace(v_min, v_max, run.grid)
    grid = phase_grid(p, hs, vs, eps_phase=cfg.get("eps_phase", 1e-9))
    rows = [(float(H), float(V), grid[i][j].label, int(grid[i][j].on_boundary))
            for i, H in enumerate(hs) for j, V in enumerate(vs)]
    found = sorted({r[2].value for r in rows})
    logger.info(f"Phase grid {run.grid}x{run.grid}: {', '.join(found)}")

    curves = {label.value: arr.tolist()
              for label, arr in phase_boundary_curves(p, h_min, h_max, cfg.get("curve_samples", 400)).items()}
    if p.delta < -1:
        af = run.settings.get("antiferro", {})
        curve = antiferro_boundary(p, samples=af.get("samples", 512), tol=af.get("tol", 1e-13))
        curves[PhaseLabel.ANTIFERRO_A.value] = [[float(h), float(v)] for h, v in zip(curve.H, curve.V)]
    meta = _meta(run)
    return {
        "grid": handler.save_csv("phase_grid.csv", ("H", "V", "phase", "on_boundary"), rows, meta),
        "boundaries": handler.save_json({"meta": meta, "phases": found, "curves": curves}, "phase_boundaries.json"),
    }


def cmd_free_energy(run: RunConfig, handler: FileHandler) -> Dict[str, str]:
    """f at the given fields, with every independent evaluation path that applies."""
    p = run.params
    evaluator = _evaluator(run)
    result = free_energy(p, evaluator, eps_phase=run.settings.get("phase", {}).get("eps_phase", 1e-9))
    report = {k: v for k, v in result.to_dict().items() if k in ("f", "alpha", "branch", "phase", "extrapolated")}
    report["delta"] = p.delta
    report["slope"] = list(slope(p, evaluator))

    paths = {}
    if abs(p.delta) <= evaluator.solver.eps_ff:
        paths["free_fermion_1d"] = free_energy_free_fermion(p, check=False)
        paths["double_integral"] = free_fermion_double_integral(p)
    elif abs(p.delta) < 1 and p.H == 0 and p.V == 0:
        paths["fourier"] = zero_field_free_energy(p)
    if result.phase is PhaseLabel.DISORDERED:
        paths["bethe"] = evaluator.minimize(p).f
    if len(paths) > 1:
        values = list(paths.values())
        paths["max_difference"] = float(max(values) - min(values))
        logger.info(f"Free energy paths differ by at most {paths['max_difference']:.3e}")
    report["paths"] = paths
    return {"report": handler.save_json({"meta": _meta(run), "free_energy": report}, "free_energy.json")}


def cmd_sigma(run: RunConfig, handler: FileHandler) -> Dict[str, str]:
    """Surface tension table on the unit square."""
    cfg = run.settings.get("surface_tension", {})
    table = build_table(run.params, run.grid, _evaluator(run), h_max=cfg.get("h_max", 12.0))
    meta = {**_meta(run), "table": table.header()}
    return {"table": handler.save_csv("sigma_table.csv", CSV_HEADER, table.rows(), meta)}


def cmd_limit_shape(run: RunConfig, handler: FileHandler) -> Dict[str, str]:
    """Domain-wall limit shape at the given λ."""
    cfg = run.settings.get("limit_shape", {})
    st = run.settings.get("surface_tension", {})
    table = build_table(run.params, int(st.get("table_size", 32)), _evaluator(run), h_max=st.get("h_max", 12.0))
    lam = run.lam if run.lam is not None else 0.0
    field_ = minimize_functional(run.params, dwbc_boundary_field(), lam, run.grid, table,
                                 tol=cfg.get("tol", 1e-8), max_sweeps=cfg.get("max_sweeps", 20000),
                                 penalty=cfg.get("penalty", 1e3))
    meta = _meta(run)
    summary = {**field_.summary(), "kkt_residual": kkt_residual(field_, table)}
    return {
        "field": handler.save_csv("limit_shape.csv", ("x", "y", "phi", "region"), field_.rows(), meta),
        "summary": handler.save_json({"meta": meta, "summary": summary}, "limit_shape.json"),
    }


def _chain_volume_weight(run: RunConfig) -> float:
    if run.q is not None:
        return run.q
    if run.lam is not None:
        return q_from_lambda(run.lam, run.grid)
    return 1.0


def _chain_options(run: RunConfig) -> Dict:
    cfg = run.settings.get("sampler", {})
    return {
        "burn_in": int(cfg.get("burn_in_factor", 10)) * run.grid * run.grid,
        "thin": int(cfg.get("thin", 1)),
        "mode": cfg.get("mode", "random"),
        "n_batches": int(cfg.get("batches", 32)),
    }


def cmd_sample(run: RunConfig, handler: FileHandler) -> Dict[str, str]:
    """Monte Carlo mean height for domain-wall boundary values."""
    cfg = run.settings.get("sampler", {})
    q = _chain_volume_weight(run)
    est = run_chain(run.params, q, dwbc_boundary(run.grid), run.steps, run.seed, **_chain_options(run))
    mean_height_field(est, min_effective=cfg.get("min_effective_samples", 50),
                      threshold=cfg.get("autocorrelation_threshold", 50.0), c=cfg.get("autocorrelation_window", 5.0))
    meta = {**_meta(run), "q": q}
    return {
        "field": handler.save_csv("sample_field.csv", ("x", "y", "mean_h", "stderr"), est.rows(), meta),
        "summary": handler.save_json({"meta": meta, "summary": est.summary()}, "sample_summary.json"),
    }


def cmd_oracle(run: RunConfig, handler: FileHandler) -> Dict[str, str]:
    """Enumeration, row transfer and sampler frequencies on a small domain-wall lattice."""
    p, n = run.params, run.grid
    b = dwbc_boundary(n)
    states = enumerate_states(b)
    z_enum = float(partition_function(b, p, states=states))
    z_tm = float(fixed_boundary_partition_function(p, b))
    est = run_chain(p, 1.0, b, run.steps, run.seed, track_states=True, **_chain_options(run))
    freq, err = state_frequencies(est, states)
    exact = np.array([float(x) for x in exact_frequencies(states, p)])
    with np.errstate(divide="ignore", invalid="ignore"):
        z_scores = np.abs(freq - exact) / err
    report = {
        "n": n,
        "states": len(states),
        "z_enumeration": z_enum,
        "z_transfer": z_tm,
        "relative_difference": abs(z_enum - z_tm) / z_enum,
        "max_frequency_zscore": float(np.nanmax(z_scores)) if np.isfinite(z_scores).any() else None,
        "frequencies": [{"volume": int(h.inner.sum()), "exact": float(e), "sampled": float(f), "stderr": float(s)}
                        for h, e, f, s in zip(states, exact, freq, err)],
    }
    logger.info(f"Oracle N={n}: {len(states)} states, Z={z_enum:.12g}, transfer Z={z_tm:.12g}")
    return {"report": handler.save_json({"meta": _meta(run), "oracle": report}, "oracle.json")}


COMMAND_HANDLERS = {
    "phase": cmd_phase,
    "free-energy": cmd_free_energy,
    "sigma": cmd_sigma,
    "limit-shape": cmd_limit_shape,
    "sample": cmd_sample,
    "oracle": cmd_oracle,
}


def main(argv: Optional[Sequence[str]] = None):
    """Main entry point."""
    args = parse_args(argv)

    try:
        config = load_config(args.config)
    except (FileNotFoundError, ValueError) as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)

    log_cfg = config.get("logging", {})
    try:
        setup_logging(args.log_level or log_cfg.get("level", "INFO"),
                      log_cfg.get("format", "%(asctime)s - %(name)s - %(levelname)s - %(message)s"))
    except ValueError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)

    try:
        run = build_run_config(args, config)
        handler = FileHandler(run.out)
        handler.create_output_directory()
        logger.info(f"Running {run.command} for {run.params.to_dict()}")
        paths = COMMAND_HANDLERS[run.command](run, handler)
        for name, path in paths.items():
            logger.info(f"Wrote {name}: {path}")
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        sys.exit(EXIT_CONFIG)
    except SixVertexError as e:
        logger.error(f"{type(e).__name__}: {e}")
        logger.debug("Traceback of the failure", exc_info=True)
        sys.exit(EXIT_NUMERICAL)

    sys.exit(EXIT_OK)


if __name__ == '__main__':
    main()
