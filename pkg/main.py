"""
graphlap batch front end.

    python main.py ANALYSIS --graph graph.json [--bundle ...] [--metric ...] [--boundary ...]
                   [--param key=value ...] [--key value ...] --out DIR --seed N
    python main.py example --name z-line --alpha 4 --N 50 --analysis criterion-measure
"""
import argparse
import json
import logging
import os
import sys
import time
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from config.settings import settings
from models.experiment import ExperimentConfig
from routers import criteria_router, examples_router, identities_router, markov_router, structure_router
from routers.base import AnalysisApp, AnalysisContext, AnalysisResult
from services.errors import BadParameter, GraphlapError
from services.serialization import (load_boundary, load_bundle, load_graph, load_metric, load_metric_boundary,
                                    to_jsonable, write_json)

# Configure logging
logging.basicConfig(level=getattr(logging, settings.log_level.upper(), logging.INFO),
                    format="%(asctime)s %(levelname)s %(name)s: %(message)s")
logger = logging.getLogger(__name__)

app = AnalysisApp(title=settings.app_name, version=settings.app_version)
app.include_router(structure_router)
app.include_router(identities_router)
app.include_router(criteria_router)
app.include_router(markov_router)
app.include_router(examples_router)

REPORT_NAME = "report.json"


def parse_value(text: str) -> Any:
    """JSON for lists and objects, the raw string otherwise (pydantic coerces scalars)"""
    if text[:1] in "[{":
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise BadParameter(f"cannot decode {text!r}: {e}")
    return text


def parse_extra(tokens: Sequence[str]) -> Dict[str, Any]:
    """``--key value``, ``--key=value`` and bare ``--flag`` pairs left over by argparse"""
    params: Dict[str, Any] = {}
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if not token.startswith("--"):
            raise BadParameter(f"unexpected argument {token!r}")
        key = token[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            params[key] = parse_value(value)
        elif i + 1 < len(tokens) and not tokens[i + 1].startswith("--"):
            params[key] = parse_value(tokens[i + 1])
            i += 1
        else:
            params[key] = True
        i += 1
    return params


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphlap", allow_abbrev=False,
                                     description="Magnetic Schrödinger operators on weighted graphs")
    parser.add_argument("command", nargs="?", help="analysis to run; with 'example', --analysis names the inner analysis")
    parser.add_argument("--analysis", help="analysis to run (or the inner analysis of an example)")
    parser.add_argument("--graph", help="graph JSON")
    parser.add_argument("--bundle", help="bundle JSON (explicit Phi/W or a theta field)")
    parser.add_argument("--metric", help="metric JSON (table, path or embedding)")
    parser.add_argument("--boundary", help="boundary JSON (points or distances)")
    parser.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                        help="analysis parameter; repeatable")
    parser.add_argument("--out", default=settings.output_dir, help="output directory")
    parser.add_argument("--seed", type=int, default=settings.default_seed, help="seed for randomized suites")
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> Tuple[argparse.Namespace, Dict[str, Any]]:
    args, extra = build_parser().parse_known_args(argv)
    params = parse_extra(extra)
    for item in args.param:
        if "=" not in item:
            raise BadParameter(f"--param expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        params[key] = parse_value(value)
    return args, params


def build_config(args: argparse.Namespace, params: Dict[str, Any]) -> ExperimentConfig:
    analysis = args.command or args.analysis
    if args.command and args.analysis:
        params["analysis"] = args.analysis
    return ExperimentConfig(analysis=analysis, graph=args.graph, bundle=args.bundle, metric=args.metric,
                            boundary=args.boundary, params=params, output=args.out, seed=args.seed)


def load_inputs(config: ExperimentConfig) -> Dict[str, Any]:
    inputs: Dict[str, Any] = {}
    if config.graph:
        inputs["graph"] = load_graph(config.graph)
    if config.bundle:
        inputs["bundle"] = load_bundle(config.bundle, inputs.get("graph"))
    if config.metric:
        inputs["metric"] = load_metric(config.metric, inputs.get("graph"))
    if config.boundary:
        inputs["boundary"] = load_boundary(config.boundary)
    elif config.metric:
        inline = load_metric_boundary(config.metric)
        if inline is not None:
            inputs["boundary"] = inline
    return inputs


def _report(config_echo: Dict[str, Any], analysis: Optional[str], result: Optional[AnalysisResult],
            error: Optional[Dict[str, str]], started: float, started_at: str) -> Dict[str, Any]:
    result = result or AnalysisResult()
    return to_jsonable({
        "version": settings.app_version,
        "analysis": analysis,
        "config": config_echo,
        "residuals": result.residuals,
        "verdicts": result.verdicts,
        "summary": result.summary,
        "files": result.files,
        "error": error,
        "timestamp": {"started": started_at, "elapsed_seconds": round(time.time() - started, 6)},
    })


def run(config: ExperimentConfig) -> int:
    """Run one analysis and write report.json into the output directory; returns the exit code"""
    started = time.time()
    started_at = datetime.now(timezone.utc).isoformat()
    os.makedirs(config.output, exist_ok=True)
    result: Optional[AnalysisResult] = None
    error: Optional[Dict[str, str]] = None
    exit_code = 0
    logger.info(f"{settings.app_name} {settings.app_version}: {config.analysis.value} -> {config.output}")
    try:
        params = app.validate_params(config.analysis, config.params)
        context = AnalysisContext(analysis=config.analysis, out_dir=config.output, seed=config.seed,
                                  app=app, **load_inputs(config))
        result = app.dispatch(context, params)
    except ValidationError as e:
        logger.error(f"invalid parameters for {config.analysis.value}: {e}")
        error = {"code": "InvalidParameters", "message": str(e)}
        exit_code = 2
    except GraphlapError as e:
        logger.error(f"{config.analysis.value} failed: {e}")
        result = getattr(e, "result", None)
        error = e.to_dict()
        exit_code = e.exit_code
    except np.linalg.LinAlgError as e:
        logger.error(f"{config.analysis.value} failed in linear algebra: {e}")
        error = {"code": "LinAlgError", "message": str(e)}
        exit_code = 3
    report = _report(config.model_dump(mode="json"), config.analysis.value, result, error, started, started_at)
    write_json(os.path.join(config.output, REPORT_NAME), report)
    logger.info(f"{config.analysis.value} finished with exit code {exit_code}")
    return exit_code


def main(argv: Optional[List[str]] = None) -> int:
    started = time.time()
    started_at = datetime.now(timezone.utc).isoformat()
    out = settings.output_dir
    try:
        args, params = parse_args(argv)
        out = args.out
        config = build_config(args, params)
    except ValidationError as e:
        logger.error(f"invalid experiment configuration: {e}")
        error = {"code": "InvalidConfiguration", "message": str(e)}
    except GraphlapError as e:
        logger.error(f"invalid command line: {e}")
        error = e.to_dict()
    else:
        return run(config)
    os.makedirs(out, exist_ok=True)
    write_json(os.path.join(out, REPORT_NAME), _report({}, None, None, error, started, started_at))
    return 2


if __name__ == "__main__":
    sys.exit(main())
