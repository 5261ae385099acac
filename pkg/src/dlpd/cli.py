"""Command-line interface: ``dlpd {simulate,fit,predict,evaluate,cv,bench}``.

Every option can also be given in a ``--config`` file of ``key = value``
lines (keys are the long option names, dashes or underscores both accepted;
``#`` starts a comment). Command-line flags override the file and unknown keys
are rejected.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import os
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import KNNBaseline, StaticLPDClassifier, StaticLpdModel, knn_classify
from .classifier import (DlpdModel, bayes_conditional_risk, bayes_expected_risk,
                         dlpd_conditional_risk)
from .core import DataSet
from .data_io import read_dataset, read_json, write_dataset, write_json, write_plot_data
from .estimator import DLPDClassifier
from .exceptions import DataSchemaError, DLPDError
from .kernels import Bandwidth, KernelSpec
from .model_selection import (BandwidthCvConfig, LambdaCvConfig, _local_moments_fn,
                              bandwidth_cv_path, lambda_cv_path)
from .simulation import (MODEL_IDS, ModelSpec, oracle_of, sample_dataset, sample_test_dataset,
                         true_beta)

__all__ = ["main", "build_parser", "oracle_risk"]

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4
REPORT_VERSION = 1
MODEL_FORMAT = "dlpd-model"
THREADS_ENV = "DLPD_THREADS"


class ConfigError(Exception):
    pass


# ----------------------------------------------------------------------------- option types

def _float_list(text):
    try:
        vals = tuple(float(v) for v in str(text).replace(" ", "").split(",") if v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _int_list(text):
    """Comma-separated integers and inclusive ranges such as ``0-9``."""
    out = []
    try:
        for part in str(text).replace(" ", "").split(","):
            if not part:
                continue
            if "-" in part[1:]:
                lo, hi = part.split("-", 1)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers or ranges, got {text!r}")
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return tuple(out)


def _model_list(text):
    try:
        return tuple(ModelSpec(m.strip(), 21).id for m in str(text).split(",") if m.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _baseline_list(text):
    vals = tuple(v.strip().lower() for v in str(text).split(",") if v.strip())
    bad = [v for v in vals if v not in ("lpd", "knn")]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown baseline {bad[0]!r}; use lpd or knn")
    return vals


def _cv_or_float(text):
    if str(text).lower() == "cv":
        return "cv"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'cv' or a number, got {text!r}")


def _bandwidth_y(text):
    if str(text).lower() in ("same", "cv"):
        return str(text).lower()
    return _cv_or_float(text)


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


# ----------------------------------------------------------------------------- parser

def _tuning_options(p):
    g = p.add_argument_group("tuning")
    g.add_argument("--kernel", choices=("tgauss", "epanechnikov"), default="tgauss")
    g.add_argument("--tgauss-cutoff", type=float, default=4.0)
    g.add_argument("--bandwidth", type=_cv_or_float, default="cv",
                   help="'cv' or a multiplier of the rate bandwidth (default cv)")
    g.add_argument("--bandwidth-y", type=_bandwidth_y, default=None,
                   help="'cv', 'same' or a multiplier; defaults to --bandwidth")
    g.add_argument("--bandwidth-grid", type=_float_list, default=(0.5, 0.75, 1.0, 1.5, 2.0, 3.0))
    g.add_argument("--bandwidth-scale", choices=("range", "unit"), default="range")
    g.add_argument("--n-subsets", type=_positive_int, default=50)
    g.add_argument("--subset-size", type=_positive_int, default=None)
    g.add_argument("--ridge", type=float, default=1e-8)
    g.add_argument("--lam", type=_cv_or_float, default="cv",
                   help="'cv' or a fixed Dantzig level (default cv)")
    g.add_argument("--lambda-grid", type=_float_list, default=None)
    g.add_argument("--lambda-c-grid", type=_float_list, default=(0.25, 0.5, 1.0, 2.0, 4.0))
    g.add_argument("--n-folds", type=_positive_int, default=5)
    g.add_argument("--tuning", choices=("separate", "joint"), default="separate")
    g.add_argument("--seed", type=int, default=0, help="seed of the tuning random streams")


def _oracle_options(p):
    p.add_argument("--oracle-model", type=str, default=None,
                   help="simulation model that generated the data (enables oracle risks)")
    p.add_argument("--risk-method", choices=("auto", "quad", "grid", "mc"), default="auto")
    p.add_argument("--mc-draws", type=_positive_int, default=100_000)
    p.add_argument("--u-grid-size", type=_positive_int, default=21)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dlpd", description="Dynamic linear programming discriminant.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name, help_text):
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("--config", type=str, default=None, help="key = value options file")
        return sp

    sp = add("simulate", "Draw training and test data from a simulation model.")
    sp.add_argument("--model", type=str, default="M1", help=f"one of {', '.join(MODEL_IDS)}")
    sp.add_argument("--p", type=int, default=50)
    sp.add_argument("--n1", type=int, default=100)
    sp.add_argument("--n2", type=int, default=100)
    sp.add_argument("--n-test1", type=int, default=100)
    sp.add_argument("--n-test2", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--train", type=str, default=None, help="training CSV to write")
    sp.add_argument("--test", type=str, default=None, help="test CSV to write")
    sp.add_argument("--report", type=str, default=None)
    sp.add_argument("--risk-method", choices=("auto", "quad", "grid", "mc"), default="auto")
    sp.add_argument("--mc-draws", type=_positive_int, default=100_000)

    sp = add("fit", "Tune and fit a classifier; write it as JSON.")
    sp.add_argument("--train", type=str, default=None)
    sp.add_argument("--model-out", type=str, default=None)
    sp.add_argument("--baseline", choices=("lpd", "knn"), default=None,
                    help="fit a comparator instead of DLPD")
    sp.add_argument("--report", type=str, default=None)
    sp.add_argument("--plot-data", type=str, default=None,
                    help="tidy CSV of the fitted direction on a covariate grid")
    sp.add_argument("--u-grid-size", type=_positive_int, default=21)
    _tuning_options(sp)

    sp = add("predict", "Classify the rows of a CSV with a fitted model.")
    sp.add_argument("--model", type=str, default=None)
    sp.add_argument("--data", type=str, default=None)
    sp.add_argument("--out", type=str, default=None, help="predictions CSV (default stdout)")

    sp = add("evaluate", "Misclassification report on a labelled test CSV.")
    sp.add_argument("--model", type=str, default=None, help="fitted model JSON")
    sp.add_argument("--train", type=str, default=None, help="fit on this CSV instead of --model")
    sp.add_argument("--baseline", choices=("lpd", "knn"), default=None)
    sp.add_argument("--test", type=str, default=None)
    sp.add_argument("--report", type=str, default=None)
    sp.add_argument("--plot-data", type=str, default=None)
    _oracle_options(sp)
    _tuning_options(sp)

    sp = add("cv", "Run the bandwidth and lambda cross-validation and report the paths.")
    sp.add_argument("--train", type=str, default=None)
    sp.add_argument("--report", type=str, default=None)
    _tuning_options(sp)

    sp = add("bench", "Simulation benchmark over models, dimensions and seeds.")
    sp.add_argument("--models", type=_model_list, default=("M1", "M2", "M3", "M4"))
    sp.add_argument("--ps", type=_int_list, default=(50,))
    sp.add_argument("--seeds", type=_int_list, default=tuple(range(10)))
    sp.add_argument("--n1", type=int, default=100)
    sp.add_argument("--n2", type=int, default=100)
    sp.add_argument("--n-test1", type=int, default=100)
    sp.add_argument("--n-test2", type=int, default=100)
    sp.add_argument("--baseline", type=_baseline_list, default=("lpd",),
                    help="comma-separated comparators (lpd, knn)")
    sp.add_argument("--out-dir", type=str, default=None)
    sp.add_argument("--threads", type=_positive_int, default=None,
                    help=f"parallel replications (default ${THREADS_ENV} or the core count)")
    sp.add_argument("--risk-method", choices=("auto", "quad", "grid", "mc"), default="auto")
    sp.add_argument("--mc-draws", type=_positive_int, default=100_000)
    # in bench, --seed is an offset added to each replication's data seed
    _tuning_options(sp)
    return parser


# ----------------------------------------------------------------------------- config file

def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _read_config(path):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",),
                                   comment_prefixes=("#",), delimiters=("=",))
    cp.optionxform = str
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    try:
        cp.read_string("[dlpd]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return {k.strip().replace("-", "_"): v.strip() for k, v in cp.items("dlpd")}


def _apply_config(parser, sp, values, path):
    by_dest = {a.dest: a for a in sp._actions
               if a.dest not in ("help", "config", argparse.SUPPRESS) and a.option_strings}
    defaults = {}
    for key, raw in values.items():
        action = by_dest.get(key)
        if action is None:
            raise ConfigError(f"{path}: unknown key {key!r}")
        if action.type is not None:
            try:
                value = action.type(raw)
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise ConfigError(f"{path}: bad value for {key!r}: {exc}") from None
        else:
            value = raw
        if action.choices is not None and value not in action.choices:
            raise ConfigError(f"{path}: {key!r} must be one of {sorted(action.choices)}")
        defaults[key] = value
    sp.set_defaults(**defaults)


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        raise ConfigError("a command is required")
    if args.config:
        sp = _subparser(parser, args.command)
        _apply_config(parser, sp, _read_config(args.config), args.config)
        args = parser.parse_args(argv)
    return args


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise ConfigError(f"{args.command}: --{name.replace('_', '-')} is required")


def resolve_threads(value=None) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
        if n < 1:
            raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1


# ----------------------------------------------------------------------------- oracle helpers

def oracle_risk(spec: ModelSpec, method="auto", n_draws=100_000, seed=0):
    """Expected Bayes risk of a simulation model.

    ``auto`` uses the 100-point covariate grid for scalar covariates and
    Monte Carlo for the bivariate model.
    """
    if method == "auto":
        method = "grid" if spec.d == 1 else "mc"
    return bayes_expected_risk(oracle_of(spec), method, n_draws=n_draws, seed=seed)


def _stderr(risk):
    # deterministic rules report no standard error
    return float(risk.stderr) if np.isfinite(risk.stderr) else None


def _model_spec_for(name, p):
    try:
        return ModelSpec(name, p)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def covariate_grid(d, size):
    """Midpoint grid on the unit cube: ``size`` points per axis for d = 1, 5 per axis beyond."""
    k = size if d == 1 else 5
    axis = (np.arange(k) + 0.5) / k
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


# ----------------------------------------------------------------------------- fitted models

class _Predictor:
    method = ""

    def classify_rows(self, data: DataSet):
        """Return ``(labels, scores, errors)``, one entry per row; failures give ``None``."""
        labels, scores, errors = [], [], []
        for z, u in zip(data.features, data.covariates):
            try:
                s, lab = self._classify(z, u)
            except DLPDError as exc:
                labels.append(None)
                scores.append(None)
                errors.append(f"{type(exc).__name__}: {exc}")
                continue
            labels.append(lab)
            scores.append(s)
            errors.append(None)
        return labels, scores, errors


class _DlpdPredictor(_Predictor):
    method = "dlpd"

    def __init__(self, model: DlpdModel, seed=0, cv=None):
        self.model = model
        self.seed = seed
        self.cv = cv or {}

    def _classify(self, z, u):
        s = self.model.score(z, u)
        return s, ("X" if s >= 0 else "Y")

    def direction(self, u):
        return self.model.beta(u)

    def plugin_risk(self, oracle, u):
        mom, sol = self.model.local_fit(u)
        return dlpd_conditional_risk(mom.mu_x_hat, mom.mu_y_hat, sol.beta_hat, oracle, u)

    def tuning(self):
        m = self.model
        return {"kernel": m.kernel.to_dict(), "bandwidth_x": m.Hx.diag.tolist(),
                "bandwidth_y": m.Hy.diag.tolist(), "lambda": m.lam, "seed": self.seed,
                **self.cv}

    def to_json(self):
        m = self.model
        return {"format": MODEL_FORMAT, "version": REPORT_VERSION, "method": self.method,
                "tuning": self.tuning(), "weight_floor": m.weight_floor,
                "training": _dataset_json(m.training)}

    @classmethod
    def from_json(cls, obj):
        t = obj["tuning"]
        kernel = KernelSpec(**t["kernel"])
        model = DlpdModel(_dataset_from_json(obj["training"]), Bandwidth(t["bandwidth_x"]),
                          Bandwidth(t["bandwidth_y"]), kernel, float(t["lambda"]),
                          float(obj["weight_floor"]))
        extra = {k: v for k, v in t.items()
                 if k not in ("kernel", "bandwidth_x", "bandwidth_y", "lambda", "seed")}
        return cls(model, t.get("seed", 0), extra)


class _LpdPredictor(_Predictor):
    method = "lpd"

    def __init__(self, model: StaticLpdModel, d, seed=0):
        self.model = model
        self.d = d
        self.seed = seed

    def _classify(self, z, u):
        s = self.model.score(z)
        return s, ("X" if s >= 0 else "Y")

    def direction(self, u):
        return self.model.beta_hat

    def plugin_risk(self, oracle, u):
        m = self.model
        return dlpd_conditional_risk(m.mu_x_bar, m.mu_y_bar, m.beta_hat, oracle, u)

    def tuning(self):
        return {"lambda": self.model.lam, "seed": self.seed}

    def to_json(self):
        m = self.model
        return {"format": MODEL_FORMAT, "version": REPORT_VERSION, "method": self.method,
                "tuning": self.tuning(), "d": self.d, "mu_x_bar": m.mu_x_bar.tolist(),
                "mu_y_bar": m.mu_y_bar.tolist(), "sigma_bar": m.sigma_bar.tolist(),
                "beta_hat": m.beta_hat.tolist()}

    @classmethod
    def from_json(cls, obj):
        arr = lambda key: np.asarray(obj[key], dtype=float)  # noqa: E731
        model = StaticLpdModel(arr("mu_x_bar"), arr("mu_y_bar"), arr("sigma_bar"),
                               float(obj["tuning"]["lambda"]), arr("beta_hat"))
        return cls(model, int(obj["d"]), obj["tuning"].get("seed", 0))


class _KnnPredictor(_Predictor):
    method = "knn"

    def __init__(self, training: DataSet, k, seed=0):
        self.training = training
        self.k = int(k)
        self.seed = seed

    def _classify(self, z, u):
        return None, knn_classify(self.training, self.k, z).value

    direction = None

    def tuning(self):
        return {"k": self.k, "seed": self.seed}

    def to_json(self):
        return {"format": MODEL_FORMAT, "version": REPORT_VERSION, "method": self.method,
                "tuning": self.tuning(), "training": _dataset_json(self.training)}

    @classmethod
    def from_json(cls, obj):
        return cls(_dataset_from_json(obj["training"]), obj["tuning"]["k"],
                   obj["tuning"].get("seed", 0))


_PREDICTORS = {c.method: c for c in (_DlpdPredictor, _LpdPredictor, _KnnPredictor)}


def _dataset_json(data: DataSet):
    return {"labels": "".join(data.labels.tolist()), "covariates": data.covariates.tolist(),
            "features": data.features.tolist()}


def _dataset_from_json(obj):
    return DataSet(obj["features"], obj["covariates"], list(obj["labels"]))


def load_predictor(path):
    obj = read_json(path)
    if not isinstance(obj, dict) or obj.get("format") != MODEL_FORMAT:
        raise DataSchemaError(f"{path}: not a fitted model file")
    try:
        return _PREDICTORS[obj["method"]].from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataSchemaError(f"{path}: malformed model file ({exc})") from None


def _estimator_params(args, seed=None):
    return dict(kernel=args.kernel, tgauss_cutoff=args.tgauss_cutoff, bandwidth=args.bandwidth,
                bandwidth_y=args.bandwidth_y, bandwidth_grid=args.bandwidth_grid,
                n_subsets=args.n_subsets, subset_size=args.subset_size, ridge=args.ridge,
                lam=args.lam, lambda_grid=args.lambda_grid, lambda_C_grid=args.lambda_c_grid,
                n_folds=args.n_folds, tuning=args.tuning, bandwidth_scale=args.bandwidth_scale,
                random_state=args.seed if seed is None else seed)


def fit_predictor(train: DataSet, method, params) -> _Predictor:
    """Fit DLPD or a comparator on a labelled data set."""
    if train.n1 < 1 or train.n2 < 1:
        raise DataSchemaError("training data must contain both classes")
    seed = params["random_state"]
    if method == "dlpd":
        clf = DLPDClassifier(**params).fit(train.features, train.labels, train.covariates)
        cv = {}
        if "lambda" in clf.cv_results_:
            res = clf.cv_results_["lambda"]
            cv = {"lambda_grid": res.grid, "lambda_cv_scores": res.scores.tolist()}
        return _DlpdPredictor(clf.model_, seed, cv)
    if method == "lpd":
        clf = StaticLPDClassifier(lam=params["lam"], lambda_grid=params["lambda_grid"],
                                  lambda_C_grid=params["lambda_C_grid"],
                                  n_folds=params["n_folds"], random_state=seed)
        clf.fit(train.features, train.labels)
        return _LpdPredictor(clf.model_, train.d, seed)
    if method == "knn":
        clf = KNNBaseline(n_folds=params["n_folds"], random_state=seed)
        clf.fit(train.features, train.labels)
        return _KnnPredictor(train, clf.k_, seed)
    raise ConfigError(f"unknown method {method!r}")


# ----------------------------------------------------------------------------- evaluation

def error_summary(data: DataSet, labels):
    """Per-class error counts; unclassified rows count as errors."""
    truth = data.labels
    pred = np.array(["" if v is None else v for v in labels])
    out = {}
    for lab in ("X", "Y"):
        m = truth == lab
        out[lab] = {"n": int(m.sum()), "errors": int(np.sum(pred[m] != lab)),
                    "unclassified": int(np.sum(pred[m] == ""))}
    errors = out["X"]["errors"] + out["Y"]["errors"]
    return {"n_test": data.n, "class_counts": out, "errors": errors,
            "misclassification_rate": errors / data.n,
            "unclassified": out["X"]["unclassified"] + out["Y"]["unclassified"]}


def oracle_section(predictor, model_name, p, d, args):
    spec = _model_spec_for(model_name, p)
    if spec.d != d:
        raise ConfigError(f"{spec.id} has {spec.d} covariates but the data has {d}")
    risk = oracle_risk(spec, args.risk_method, args.mc_draws)
    oracle = oracle_of(spec)
    grid = []
    for u in covariate_grid(d, args.u_grid_size):
        entry = {"u": u.tolist(),
                 "bayes_risk": bayes_conditional_risk(oracle, u, generalized=True)}
        if hasattr(predictor, "plugin_risk"):
            try:
                entry["plugin_risk"] = predictor.plugin_risk(oracle, u)
            except DLPDError as exc:
                entry["plugin_risk"] = None
                entry["error"] = f"{type(exc).__name__}: {exc}"
        grid.append(entry)
    return {"model": spec.id, "p": p, "expected_bayes_risk": risk.value,
            "risk_method": risk.method, "risk_stderr": _stderr(risk), "u_grid": grid}


def plot_rows(predictor, d, size, oracle_spec=None):
    if predictor.direction is None:
        raise ConfigError("plot data needs a linear rule (dlpd or lpd)")
    for u in covariate_grid(d, size):
        try:
            yield u, "fitted", predictor.direction(u)
        except DLPDError:
            pass
        if oracle_spec is not None:
            yield u, "true", true_beta(oracle_spec, u)


def _emit(report, path):
    text = write_json(report, path)
    if path is None:
        sys.stdout.write(text)


# ----------------------------------------------------------------------------- commands

def cmd_simulate(args):
    spec = ModelSpec(args.model, args.p, args.n1, args.n2, args.seed)
    if args.train:
        write_dataset(sample_dataset(spec), args.train)
    if args.test:
        write_dataset(sample_test_dataset(spec, args.n_test1, args.n_test2), args.test)
    risk = oracle_risk(spec, args.risk_method, args.mc_draws)
    line = f"oracle expected Bayes risk R = {risk.value:.6f} ({risk.method}"
    line += f", SE {risk.stderr:.6f})" if _stderr(risk) is not None else ")"
    print(f"{spec.id} p={spec.p}: {line}")
    if args.report:
        write_json({"report_version": REPORT_VERSION, "command": "simulate", "model": spec.id,
                    "p": spec.p, "n1": spec.n1, "n2": spec.n2, "seed": spec.seed,
                    "n_test1": args.n_test1, "n_test2": args.n_test2,
                    "expected_bayes_risk": risk.value, "risk_method": risk.method,
                    "risk_stderr": _stderr(risk)}, args.report)
    return EXIT_OK


def cmd_fit(args):
    _require(args, "train")
    train = read_dataset(args.train)
    t0 = time.perf_counter()
    pred = fit_predictor(train, args.baseline or "dlpd", _estimator_params(args))
    elapsed = time.perf_counter() - t0
    if args.model_out:
        write_json(pred.to_json(), args.model_out)
    if args.plot_data:
        write_plot_data(args.plot_data, plot_rows(pred, train.d, args.u_grid_size), train.d)
    report = {"report_version": REPORT_VERSION, "command": "fit", "method": pred.method,
              "n_train": train.n, "p": train.p, "d": train.d, "tuning": pred.tuning(),
              "wall_clock_seconds": elapsed}
    _emit(report, args.report)
    return EXIT_OK


def cmd_predict(args):
    _require(args, "model", "data")
    pred = load_predictor(args.model)
    data = read_dataset(args.data)
    labels, scores, errors = pred.classify_rows(data)
    lines = ["row,label,prediction,score,status"]
    for i, (lab, pl, s, err) in enumerate(zip(data.labels, labels, scores, errors), start=1):
        score = "" if s is None else format(float(s), ".17g")
        status = "ok" if err is None else err.split(":", 1)[0]
        lines.append(f"{i},{lab},{pl or ''},{score},{status}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    failed = sum(e is not None for e in errors)
    if failed:
        print(f"{failed} of {data.n} rows could not be classified", file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args):
    _require(args, "test")
    if (args.model is None) == (args.train is None):
        raise ConfigError("evaluate: give exactly one of --model or --train")
    test = read_dataset(args.test)
    t0 = time.perf_counter()
    if args.model:
        pred = load_predictor(args.model)
    else:
        pred = fit_predictor(read_dataset(args.train), args.baseline or "dlpd",
                             _estimator_params(args))
    labels, _, errors = pred.classify_rows(test)
    report = {"report_version": REPORT_VERSION, "command": "evaluate", "method": pred.method,
              "seed": pred.seed, "tuning": pred.tuning(), **error_summary(test, labels),
              "empty_window_rows": [i + 1 for i, e in enumerate(errors)
                                    if e is not None and e.startswith("EmptyWindowError")],
              "failed_rows": [i + 1 for i, e in enumerate(errors) if e is not None]}
    spec = None
    if args.oracle_model:
        report["oracle"] = oracle_section(pred, args.oracle_model, test.p, test.d, args)
        spec = _model_spec_for(args.oracle_model, test.p)
    if args.plot_data:
        write_plot_data(args.plot_data, plot_rows(pred, test.d, args.u_grid_size, spec), test.d)
    report["wall_clock_seconds"] = time.perf_counter() - t0
    _emit(report, args.report)
    return EXIT_OK


def cmd_cv(args):
    _require(args, "train")
    train = read_dataset(args.train)
    t0 = time.perf_counter()
    params = _estimator_params(args)
    clf = DLPDClassifier(**params)
    spec = clf._kernel_spec()
    rng = np.random.default_rng(args.seed)
    bw_seed, fold_seed = (int(s) for s in rng.integers(0, 2**63 - 1, size=2))
    bcfg = BandwidthCvConfig(N=args.n_subsets, m=args.subset_size, grid=args.bandwidth_grid,
                             ridge=args.ridge)
    report = {"report_version": REPORT_VERSION, "command": "cv", "seed": args.seed,
              "bandwidth": {}}
    chosen = {}
    for offset, label in enumerate(("X", "Y")):
        bws, scores = bandwidth_cv_path(train, label, bcfg, bw_seed + offset, spec,
                                        args.bandwidth_scale)
        finite = [i for i in range(len(scores)) if np.isfinite(scores[i])]
        if not finite:
            report["bandwidth"][label] = {"error": "every candidate has an empty window"}
            continue
        best = min(finite, key=lambda i: (scores[i], bcfg.grid[i]))
        chosen[label] = bws[best]
        report["bandwidth"][label] = {
            "multipliers": list(bcfg.grid), "bandwidths": [b.diag.tolist() for b in bws],
            "scores": [float(s) if np.isfinite(s) else None for s in scores],
            "selected": bws[best].diag.tolist()}
    if len(chosen) == 2:
        lcfg = LambdaCvConfig(K=args.n_folds, grid=args.lambda_grid,
                              C_grid=args.lambda_c_grid, fold_seed=fold_seed)
        res = lambda_cv_path(train, _local_moments_fn(chosen["X"], chosen["Y"], spec,
                                                      clf.weight_floor), lcfg)
        report["lambda"] = {"grid": res.grid, "scores": res.scores.tolist(),
                            "selected": res.lam, "failures": res.failures}
    report["wall_clock_seconds"] = time.perf_counter() - t0
    _emit(report, args.report)
    return EXIT_OK if len(chosen) == 2 else EXIT_NUMERICAL


def bench_task(model_id, p, seed, n1, n2, n_test1, n_test2, params, methods):
    """One replication: simulate, fit every method, count test errors."""
    spec = ModelSpec(model_id, p, n1, n2, seed)
    train = sample_dataset(spec)
    test = sample_test_dataset(spec, n_test1, n_test2)
    params = dict(params, random_state=params["random_state"] + seed)
    out = {}
    for method in methods:
        t0 = time.perf_counter()
        try:
            pred = fit_predictor(train, method, params)
        except DLPDError as exc:
            out[method] = {"error": f"{type(exc).__name__}: {exc}"}
            continue
        labels, _, _ = pred.classify_rows(test)
        out[method] = {**error_summary(test, labels), "tuning": pred.tuning(),
                       "wall_clock_seconds": time.perf_counter() - t0}
    return {"report_version": REPORT_VERSION, "command": "bench", "model": spec.id, "p": p,
            "seed": seed, "n_train": train.n, "methods": out}


def aggregate_reports(reports, risks):
    rows = []
    keys = sorted({(r["model"], r["p"]) for r in reports})
    for model, p in keys:
        group = [r for r in reports if (r["model"], r["p"]) == (model, p)]
        row = {"model": model, "p": p, "n_seeds": len(group),
               "bayes_risk": risks[(model, p)]}
        for method in group[0]["methods"]:
            rates = [r["methods"][method]["misclassification_rate"] for r in group
                     if "misclassification_rate" in r["methods"].get(method, {})]
            row[f"{method}_mean"] = statistics.fmean(rates) if rates else None
            row[f"{method}_median"] = statistics.median(rates) if rates else None
            row[f"{method}_sd"] = statistics.stdev(rates) if len(rates) > 1 else None
            row[f"{method}_failed"] = len(group) - len(rates)
        rows.append(row)
    return rows


def cmd_bench(args):
    threads = resolve_threads(args.threads)
    methods = ("dlpd",) + tuple(m for m in args.baseline if m != "dlpd")
    params = _estimator_params(args)
    tasks = [(m, p, s) for m in args.models for p in args.ps for s in args.seeds]
    for m, p in {(m, p) for m, p, _ in tasks}:
        _model_spec_for(m, p)
    t0 = time.perf_counter()
    jobs = [(m, p, s, args.n1, args.n2, args.n_test1, args.n_test2, params, methods)
            for m, p, s in tasks]
    if threads > 1 and len(jobs) > 1:
        from joblib import Parallel, delayed
        reports = Parallel(n_jobs=threads)(delayed(bench_task)(*job) for job in jobs)
    else:
        reports = [bench_task(*job) for job in jobs]
    reports.sort(key=lambda r: (r["model"], r["p"], r["seed"]))
    risks = {}
    for m, p in sorted({(r["model"], r["p"]) for r in reports}):
        risks[(m, p)] = oracle_risk(ModelSpec(m, p), args.risk_method, args.mc_draws).value
    table = aggregate_reports(reports, risks)
    summary = {"report_version": REPORT_VERSION, "command": "bench", "methods": list(methods),
               "seeds": list(args.seeds), "threads": threads, "table": table,
               "wall_clock_seconds": time.perf_counter() - t0}
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for r in reports:
            write_json(r, out / f"{r['model']}_p{r['p']}_seed{r['seed']}.json")
        write_json(summary, out / "aggregate.json")
        _write_table(table, methods, out / "aggregate.csv")
    _print_table(table, methods)
    return EXIT_OK


def _table_columns(methods):
    cols = ["model", "p", "n_seeds", "bayes_risk"]
    for m in methods:
        cols += [f"{m}_mean", f"{m}_median", f"{m}_sd", f"{m}_failed"]
    return cols


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _write_table(table, methods, path):
    cols = _table_columns(methods)
    lines = [",".join(cols)] + [",".join(_cell(row.get(c)) for c in cols) for row in table]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _print_table(table, methods):
    cols = ["model", "p", "n_seeds", "bayes_risk"] + [f"{m}_median" for m in methods]
    rows = [[_cell(r.get(c)) for c in cols] for r in table]
    widths = [max(len(c), *(len(r[i]) for r in rows)) for i, c in enumerate(cols)]
    print("  ".join(c.ljust(w) for c, w in zip(cols, widths)))
    for r in rows:
        print("  ".join(v.ljust(w) for v, w in zip(r, widths)))


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "predict": cmd_predict,
            "evaluate": cmd_evaluate, "cv": cmd_cv, "bench": cmd_bench}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        # argparse reports usage errors with status 2
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    except ConfigError as exc:
        print(f"dlpd: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataSchemaError as exc:
        print(f"dlpd: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DLPDError as exc:
        print(f"dlpd: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"dlpd: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"dlpd: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
