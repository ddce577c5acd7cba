"""Command-line client for the mvpure service.

The CLI only marshals files to JSON payloads and back: all computation
happens in the service layer, which runs in-process by default and
remotely when ``--server`` (or MVPURE_SERVER) points at a running
instance.  Exit codes: 0 success, 1 verification failure, 2 usage or
configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, storage

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

SERVER_ENV = "MVPURE_SERVER"

INDEX_FLAGS = {"mai": "mai", "mpz": "mpz", "mai-mvp": "mai_mvp", "mpz-mvp": "mpz_mvp"}
FILTER_FLAGS = {"lcmv-r": "lcmv_r", "lcmv-n": "lcmv_n", "mvp-r": "mvp_r", "mvp-n": "mvp_n"}


class ClientError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class ServiceClient:
    """POSTs payloads to the service, in-process unless a server URL is set."""

    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                # the bundled test client is only our in-process transport;
                # its pending-deprecation chatter is not actionable here
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import app

            self._client = TestClient(app)

    def post(self, path: str, payload: dict) -> dict:
        resp = self._client.post(path, json=payload)
        if resp.status_code == 200:
            return resp.json()
        try:
            body = resp.json()
        except ValueError:
            body = {}
        message = body.get("message") or body.get("detail") or resp.text
        if resp.status_code in (400, 422):
            raise ClientError(EXIT_USAGE, f"invalid request: {message}")
        if resp.status_code == 409:
            raise ClientError(EXIT_NUMERICAL, f"numerical failure: {message}")
        raise ClientError(EXIT_NUMERICAL, f"service error {resp.status_code}: {message}")


def _load_matrix(path: str, flag: str) -> list:
    p = Path(path)
    if not p.exists():
        raise ClientError(EXIT_USAGE, f"{flag}: file not found: {path}")
    try:
        return storage.load_matrix(p).tolist()
    except Exception as exc:
        raise ClientError(EXIT_USAGE, f"{flag}: {exc}") from exc


def _load_json(path: str, flag: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ClientError(EXIT_USAGE, f"{flag}: file not found: {path}")
    with open(p) as fh:
        return json.load(fh)


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ClientError(EXIT_USAGE, f"{flag}: expected comma-separated numbers, got {text!r}") from exc


def _covariances_from_args(args, client) -> tuple[list, list]:
    """Resolve the (R, N) payload matrices from files or a scenario directory."""
    if args.scenario:
        d = Path(args.scenario)
        if not (d / storage.MANIFEST_NAME).exists():
            raise ClientError(EXIT_USAGE, f"--scenario: no scenario at {d}")
        scn = storage.load_scenario(d)
        return scn.R.matrix.tolist(), scn.N.matrix.tolist()
    if not args.data_cov or not args.noise_cov:
        raise ClientError(
            EXIT_USAGE, "pass either --scenario DIR or both --data-cov and --noise-cov"
        )
    return _load_matrix(args.data_cov, "--data-cov"), _load_matrix(args.noise_cov, "--noise-cov")


# -- subcommands -------------------------------------------------------------


def cmd_simulate(args, client: ServiceClient) -> int:
    snr = _parse_floats(args.snr, "--snr")
    payload = {
        "m": args.m,
        "s": args.s,
        "l0": args.n_sources,
        "snr": snr,
        "noise_kind": args.noise,
        "correlation": args.correlation,
        "seed": args.seed,
        "min_angle_deg": args.separation_deg,
    }
    out = client.post("/api/simulate", payload)

    from .model import Covariance, LeadField, Scenario, SourceSet

    scn = Scenario(
        leadfield=LeadField(
            gains=np.asarray(out["leadfield"]),
            channel_names=tuple(out["channel_names"]),
        ),
        true_sources=SourceSet(tuple(out["true_sources"])),
        Q0=np.asarray(out["Q0"]),
        N=Covariance(matrix=np.asarray(out["N"]), kind="noise"),
        R=Covariance(matrix=np.asarray(out["R"]), kind="data"),
        seed=out["seed"],
    )
    storage.save_scenario(args.out, scn)
    spec = out["spectrum"]
    top = ", ".join(f"{v:.4f}" for v in spec["lambdas"][: max(args.n_sources + 2, 5)])
    print(f"wrote scenario to {args.out}")
    print(f"true sources: {out['true_sources']}")
    print(f"spectrum: l0_est={spec['l0_est']} r_opt={spec['r_opt']} lambdas=[{top}, ...]")
    return EXIT_OK


def cmd_spectrum(args, client: ServiceClient) -> int:
    R, N = _covariances_from_args(args, client)
    out = client.post(
        "/api/spectrum",
        {
            "R": R,
            "N": N,
            "l0_threshold": args.l0_threshold,
            "rank_threshold": args.rank_threshold,
            "rank_rule": args.rank_rule,
        },
    )
    _write_json(args.out_json, out)
    with open(args.out_csv, "w") as fh:
        fh.write("index,lambda\n")
        for i, lam in enumerate(out["lambdas"], start=1):
            fh.write(f"{i},{lam!r}\n")
    print(f"l0_est={out['l0_est']} r_opt={out['r_opt']}")
    if out["l0_est"] == 0:
        print("warning: no eigenvalue exceeds one; data look like pure noise", file=sys.stderr)
    elif out["r_opt"] == 0:
        print(
            "warning: no eigenvalue clears the rank threshold; "
            f"falling back to rank = l0_est ({out['l0_est']}) is recommended",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_localize(args, client: ServiceClient) -> int:
    payload = {
        "leadfield": _load_matrix(args.leadfield, "--leadfield"),
        "R": _load_matrix(args.data_cov, "--data-cov"),
        "N": _load_matrix(args.noise_cov, "--noise-cov"),
        "n_sources": args.n_sources,
        "rank": args.rank,
        "index_kind": INDEX_FLAGS[args.index],
        "parallel_width": args.parallel_width,
        "record_candidates": args.record_candidates,
        "reg_data": args.reg,
        "reg_noise": args.noise_reg,
    }
    out = client.post("/api/localize", payload)
    _write_json(args.out, out)
    print(f"sources: {out['sources']}")
    return EXIT_OK


def cmd_reconstruct(args, client: ServiceClient) -> int:
    leadfield = _load_matrix(args.leadfield, "--leadfield")
    sources_doc = _load_json(args.sources, "--sources")
    if "sources" not in sources_doc:
        raise ClientError(EXIT_USAGE, f"--sources: {args.sources} has no 'sources' field")

    epochs_path = Path(args.epochs)
    if not epochs_path.exists():
        raise ClientError(EXIT_USAGE, f"--epochs: file not found: {args.epochs}")
    epochs = storage.load_epochs(epochs_path)

    if args.data_window and args.noise_window:
        lo = max(args.data_window[0], args.noise_window[0])
        hi = min(args.data_window[1], args.noise_window[1])
        if lo < hi:
            print(
                f"warning: data window {args.data_window} and noise window "
                f"{args.noise_window} overlap on [{lo}, {hi}]",
                file=sys.stderr,
            )

    def estimated_cov(window, kind, flag):
        if window is None:
            raise ClientError(
                EXIT_USAGE,
                f"pass either --{kind}-cov FILE or --{flag} T_START T_END",
            )
        out = client.post(
            "/api/sample-covariance",
            {
                "epochs": epochs.data.tolist(),
                "sfreq": epochs.sfreq,
                "t0": epochs.t0,
                "window": list(window),
                "kind": "data" if kind == "data" else "noise",
            },
        )
        return out["matrix"]

    R = (
        _load_matrix(args.data_cov, "--data-cov")
        if args.data_cov
        else estimated_cov(args.data_window, "data", "data-window")
    )
    N = (
        _load_matrix(args.noise_cov, "--noise-cov")
        if args.noise_cov
        else estimated_cov(args.noise_window, "noise", "noise-window")
    )

    filt = client.post(
        "/api/make-filter",
        {
            "leadfield": leadfield,
            "sources": sources_doc["sources"],
            "R": R,
            "N": N,
            "kind": FILTER_FLAGS[args.filter],
            "rank": args.rank,
            "reg_data": args.reg,
            "reg_noise": args.noise_reg,
        },
    )
    evoked = epochs.data.mean(axis=0)
    applied = client.post(
        "/api/apply-filter", {"weights": filt["weights"], "data": evoked.tolist()}
    )
    storage.write_mvpm(args.out, np.asarray(applied["reconstructed"]))
    _write_json(
        str(args.out) + ".json",
        {"kind": filt["kind"], "rank": filt["rank"], "gain_check": filt["gain_check"]},
    )
    print(f"wrote {args.out} ({len(filt['sources'])} sources x {evoked.shape[1]} samples)")
    return EXIT_OK


def cmd_verify(args, client: ServiceClient) -> int:
    seeds = [int(s) for s in _parse_floats(args.seeds, "--seeds")]
    out = client.post(
        "/api/verify", {"seeds": seeds, "break_noise_model": args.break_unbiasedness}
    )
    width = max(len(c["name"]) for c in out["checks"])
    for check in out["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"{status}  {check['name']:<{width}}  {check['detail']}")
    if not out["passed"]:
        print("verification FAILED", file=sys.stderr)
        return EXIT_VERIFY
    print("all checks passed")
    return EXIT_OK


def cmd_serve(args, client: ServiceClient) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvpure",
        description=(
            "Multi-source EEG/MEG source localization and reconstruction: "
            "spectrum-based source counting, activity-index search, and "
            "reduced-rank spatial filtering"
        ),
    )
    parser.add_argument("--version", action="version", version=f"mvpure {__version__}")
    parser.add_argument(
        "--server",
        default=os.environ.get(SERVER_ENV),
        help=f"base URL of a running service (default: in-process; env {SERVER_ENV})",
    )
    parser.add_argument(
        "--config",
        help="JSON file of defaults keyed by flag name (explicit flags win)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic ground-truth scenario directory")
    p.add_argument("--m", type=int, default=16, help="number of channels")
    p.add_argument("--s", type=int, default=12, help="number of candidate sources")
    p.add_argument("--n-sources", type=int, default=2, help="number of active sources")
    p.add_argument("--snr", default="1.5,1.0", help="comma-separated per-source SNR values")
    p.add_argument("--noise", choices=("white", "spd"), default="white")
    p.add_argument("--correlation", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--separation-deg", type=float, default=0.0,
                   help="minimum pairwise angle between candidate gain columns")
    p.add_argument("--out", required=True, help="output scenario directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectrum", help="eigenvalues of R N^-1 with source count and rank")
    p.add_argument("--data-cov", help="data covariance (.mvpm or .csv)")
    p.add_argument("--noise-cov", help="noise covariance (.mvpm or .csv)")
    p.add_argument("--scenario", help="scenario directory (alternative to covariance files)")
    p.add_argument("--l0-threshold", type=float, default=0.1)
    p.add_argument("--rank-threshold", type=float, default=0.5)
    p.add_argument("--rank-rule", choices=("excess", "absolute"), default="excess")
    p.add_argument("--out-json", required=True)
    p.add_argument("--out-csv", required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("localize", help="greedy multi-source discovery")
    p.add_argument("--leadfield", required=True)
    p.add_argument("--data-cov", required=True)
    p.add_argument("--noise-cov", required=True)
    p.add_argument("--index", choices=tuple(INDEX_FLAGS), default="mpz-mvp")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--n-sources", type=int, required=True)
    p.add_argument("--parallel-width", type=int, default=0,
                   help="candidate-sweep threads; 0 = all (MVPURE_THREADS caps)")
    p.add_argument("--record-candidates", action="store_true")
    p.add_argument("--reg", type=float, default=0.0, help="data-covariance loading factor")
    p.add_argument("--noise-reg", type=float, default=0.0)
    p.add_argument("--out", required=True, help="output result JSON")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("reconstruct", help="build a spatial filter and apply it to epochs")
    p.add_argument("--filter", choices=tuple(FILTER_FLAGS), default="mvp-r")
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--reg", type=float, default=0.05, help="data-covariance loading factor")
    p.add_argument("--noise-reg", type=float, default=0.0)
    p.add_argument("--sources", required=True, help="localization result JSON")
    p.add_argument("--epochs", required=True, help="epochs .mvpm (with .json sidecar)")
    p.add_argument("--leadfield", required=True)
    p.add_argument("--data-cov", help="data covariance file (else use --data-window)")
    p.add_argument("--noise-cov", help="noise covariance file (else use --noise-window)")
    p.add_argument("--data-window", type=float, nargs=2, metavar=("T0", "T1"))
    p.add_argument("--noise-window", type=float, nargs=2, metavar=("T0", "T1"))
    p.add_argument("--out", required=True, help="output .mvpm time series")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("verify", help="run the invariant suite on seeded scenarios")
    p.add_argument("--seeds", default="0,1,2,3")
    p.add_argument("--break-unbiasedness", action="store_true",
                   help="negative control: corrupt the noise model; the suite must fail")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    parser._mvpure_subparsers = sub.choices
    return parser


def _apply_config(parser: argparse.ArgumentParser, path: str) -> None:
    """Seed parser defaults from a JSON config; explicit flags still win.

    Keys use flag names with dashes or underscores (e.g. "data-cov" or
    "data_cov").  A key consumed by no subcommand is a config error.
    """
    p = Path(path)
    if not p.exists():
        raise ClientError(EXIT_USAGE, f"--config: file not found: {path}")
    try:
        with open(p) as fh:
            cfg = json.load(fh)
    except ValueError as exc:
        raise ClientError(EXIT_USAGE, f"--config: {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ClientError(EXIT_USAGE, f"--config: {path} must hold a JSON object")
    consumed = set()
    targets = [parser, *parser._mvpure_subparsers.values()]
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        for target in targets:
            for action in target._actions:
                if action.dest == dest:
                    action.default = value
                    action.required = False
                    consumed.add(key)
    unknown = sorted(set(cfg) - consumed)
    if unknown:
        raise ClientError(EXIT_USAGE, f"--config: unknown keys {unknown}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        peek = argparse.ArgumentParser(add_help=False)
        peek.add_argument("--config")
        known, _ = peek.parse_known_args(argv)
        if known.config:
            _apply_config(parser, known.config)
        args = parser.parse_args(argv)
        client = None if args.command == "serve" else ServiceClient(args.server)
        return args.func(args, client)
    except ClientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
